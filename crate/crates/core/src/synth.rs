//! Seeded synthetic class models and candidate-style mutations of them.
//! Used for property tests, benchmarks and planted-weight experiments.

use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::model::{Attribute, ClassEntity, ClassModel, Method, Parameter, Relationship, RelationshipKind, Stereotype};

const CLASS_NAMES: &[&str] = &[
    "Customer", "Order", "Product", "Invoice", "Account", "Payment", "Shipment", "Warehouse", "Supplier",
    "Employee", "Department", "Course", "Student", "Teacher", "Library", "Book", "Member", "Loan", "Vehicle",
    "Driver", "Route", "Ticket", "Flight", "Passenger", "Booking", "Hotel", "Room", "Review", "Cart",
    "Category", "Address", "Schedule",
];

const SYNONYMS: &[(&str, &str)] = &[
    ("Customer", "Client"),
    ("Order", "Purchase"),
    ("Product", "Item"),
    ("Invoice", "Bill"),
    ("Employee", "Staff"),
    ("Teacher", "Tutor"),
    ("Student", "Learner"),
    ("Vehicle", "Car"),
    ("Booking", "Reservation"),
    ("Member", "Patron"),
    ("Supplier", "Vendor"),
    ("Shipment", "Delivery"),
];

const ATTRIBUTE_NAMES: &[&str] = &[
    "id", "name", "email", "total", "price", "quantity", "createdAt", "status", "address", "phone",
    "balance", "title", "description", "dueDate", "capacity", "rating", "code", "weight", "isbn", "salary",
];

const TYPES: &[&str] = &[
    "String", "int", "double", "boolean", "Date", "long", "float", "List<String>", "Money", "Status",
];

const METHOD_NAMES: &[&str] = &[
    "getTotal", "addItem", "removeItem", "calculatePrice", "checkout", "register", "cancel", "update",
    "validate", "findById", "schedule", "assign", "notify", "pay", "ship", "borrow", "returnItem", "search",
];

const PARAM_NAMES: &[&str] = &["item", "amount", "id", "date", "quantity", "reason", "user", "code"];

const MULTIPLICITIES: &[&str] = &["", "1", "*", "0..1", "1..*", "0..*", "many"];

/// Size bounds for [`random_model`].
#[derive(Debug, Clone, Copy)]
pub struct ModelShape {
    pub min_classes: usize,
    pub max_classes: usize,
    pub max_attributes: usize,
    pub max_methods: usize,
    pub max_params: usize,
    pub max_relationships: usize,
}

impl ModelShape {
    /// At most four classes with small member lists, small enough for
    /// brute-force reference evaluation.
    pub const SMALL: ModelShape = ModelShape {
        min_classes: 1,
        max_classes: 4,
        max_attributes: 3,
        max_methods: 3,
        max_params: 2,
        max_relationships: 4,
    };

    pub const MEDIUM: ModelShape = ModelShape {
        min_classes: 3,
        max_classes: 9,
        max_attributes: 5,
        max_methods: 4,
        max_params: 3,
        max_relationships: 10,
    };
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

fn random_kind<R: Rng + ?Sized>(rng: &mut R) -> RelationshipKind {
    *RelationshipKind::ALL.choose(rng).expect("six kinds")
}

fn random_method<R: Rng + ?Sized>(rng: &mut R, name: &str, max_params: usize) -> Method {
    let count = rng.random_range(0..=max_params);
    let mut names: Vec<&str> = PARAM_NAMES.to_vec();
    names.shuffle(rng);
    let params = names[..count.min(names.len())]
        .iter()
        .map(|n| Parameter::new(*n, pick(rng, TYPES)))
        .collect();
    let ret = if rng.random_bool(0.3) { "void" } else { pick(rng, TYPES) };
    Method::new(name, ret, params)
}

pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: &ModelShape) -> ClassModel {
    let class_count = rng.random_range(shape.min_classes..=shape.max_classes);
    let mut names: Vec<&str> = CLASS_NAMES.to_vec();
    names.shuffle(rng);
    let mut classes = Vec::with_capacity(class_count);
    for name in names.into_iter().take(class_count) {
        let mut class = ClassEntity::new(name);
        class.stereotype = match rng.random_range(0..10) {
            0 => Stereotype::Interface,
            1 => Stereotype::Abstract,
            _ => Stereotype::Class,
        };
        let mut attrs: Vec<&str> = ATTRIBUTE_NAMES.to_vec();
        attrs.shuffle(rng);
        for a in attrs.into_iter().take(rng.random_range(0..=shape.max_attributes)) {
            class.attributes.push(Attribute::new(a, pick(rng, TYPES)));
        }
        let mut methods: Vec<&str> = METHOD_NAMES.to_vec();
        methods.shuffle(rng);
        for m in methods.into_iter().take(rng.random_range(0..=shape.max_methods)) {
            class.methods.push(random_method(rng, m, shape.max_params));
        }
        classes.push(class);
    }
    let mut relationships = Vec::new();
    if class_count > 1 {
        for _ in 0..rng.random_range(0..=shape.max_relationships) {
            let s = rng.random_range(0..class_count);
            let mut t = rng.random_range(0..class_count - 1);
            if t >= s {
                t += 1;
            }
            relationships.push(
                Relationship::new(random_kind(rng), classes[s].name.as_str(), classes[t].name.as_str())
                    .with_label(pick(rng, MULTIPLICITIES), pick(rng, MULTIPLICITIES)),
            );
        }
    }
    let model = ClassModel::new(classes, relationships);
    debug_assert!(model.validate().is_ok());
    model
}

/// Spelling variants a student or a model might plausibly write instead.
fn variant<R: Rng + ?Sized>(rng: &mut R, name: &str) -> String {
    if let Some((_, syn)) = SYNONYMS.iter().find(|(a, _)| *a == name) {
        if rng.random_bool(0.5) {
            return syn.to_string();
        }
    }
    match rng.random_range(0..4) {
        0 => format!("{name}Info"),
        1 => {
            let mut chars: Vec<char> = name.chars().collect();
            if chars.len() > 3 {
                let i = rng.random_range(1..chars.len() - 1);
                chars.swap(i, i + 1);
            }
            chars.into_iter().collect()
        }
        2 => {
            let mut s = name.to_string();
            if let Some(first) = s.get(0..1) {
                let flipped = if first.chars().all(char::is_uppercase) {
                    first.to_lowercase()
                } else {
                    first.to_uppercase()
                };
                s.replace_range(0..1, &flipped);
            }
            s
        }
        _ => format!("my{name}"),
    }
}

/// Edit intensities in `[0, 1]` per aspect of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationProfile {
    /// dropping and adding whole classes
    pub structure: f64,
    /// renaming classes
    pub names: f64,
    pub attributes: f64,
    pub methods: f64,
    pub relationships: f64,
}

impl MutationProfile {
    pub fn uniform(intensity: f64) -> Self {
        let p = intensity.clamp(0.0, 1.0);
        Self {
            structure: p,
            names: p,
            attributes: p,
            methods: p,
            relationships: p,
        }
    }

    /// Each aspect drawn independently from `[0, 1)`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            structure: rng.random(),
            names: rng.random(),
            attributes: rng.random(),
            methods: rng.random(),
            relationships: rng.random(),
        }
    }

    fn clamped(self) -> Self {
        let c = |x: f64| x.clamp(0.0, 1.0);
        Self {
            structure: c(self.structure),
            names: c(self.names),
            attributes: c(self.attributes),
            methods: c(self.methods),
            relationships: c(self.relationships),
        }
    }
}

/// Candidate-style corruption of `model` with one intensity for every
/// aspect; 0 returns an identical model.
pub fn mutate<R: Rng + ?Sized>(rng: &mut R, model: &ClassModel, intensity: f64) -> ClassModel {
    mutate_with(rng, model, &MutationProfile::uniform(intensity))
}

/// Candidate-style corruption of `model`; each intensity is the per-element
/// probability scale of the edits of its aspect.
pub fn mutate_with<R: Rng + ?Sized>(rng: &mut R, model: &ClassModel, profile: &MutationProfile) -> ClassModel {
    let profile = profile.clamped();
    let mut renames: HashMap<String, Option<String>> = HashMap::new();
    let mut classes: Vec<ClassEntity> = Vec::new();

    for class in &model.classes {
        if rng.random_bool(profile.structure * 0.35) {
            renames.insert(class.name.clone(), None);
            continue;
        }
        let mut out = class.clone();
        if rng.random_bool(profile.names * 0.5) {
            let new_name = variant(rng, &class.name);
            let taken = model.classes.iter().any(|c| c.name == new_name) || classes.iter().any(|c| c.name == new_name);
            if !taken && !new_name.is_empty() {
                out.name = new_name.clone();
                renames.insert(class.name.clone(), Some(new_name));
            }
        }

        let mut attributes = Vec::new();
        for a in &class.attributes {
            if rng.random_bool(profile.attributes * 0.4) {
                continue;
            }
            let mut a = a.clone();
            if rng.random_bool(profile.attributes * 0.4) {
                let n = variant(rng, &a.name);
                if !class.attributes.iter().any(|x| x.name == n) && !attributes.iter().any(|x: &Attribute| x.name == n) {
                    a.name = n;
                }
            }
            if rng.random_bool(profile.attributes * 0.4) {
                a.type_name = pick(rng, TYPES).to_string();
            }
            attributes.push(a);
        }
        if rng.random_bool(profile.attributes * 0.5) {
            let n = pick(rng, ATTRIBUTE_NAMES);
            if !attributes.iter().any(|x| x.name == n) {
                attributes.push(Attribute::new(n, pick(rng, TYPES)));
            }
        }
        out.attributes = attributes;

        let mut methods: Vec<Method> = Vec::new();
        for m in &class.methods {
            if rng.random_bool(profile.methods * 0.4) {
                continue;
            }
            let mut m = m.clone();
            if rng.random_bool(profile.methods * 0.4) {
                m.name = variant(rng, &m.name);
            }
            if !m.params.is_empty() && rng.random_bool(profile.methods * 0.4) {
                let i = rng.random_range(0..m.params.len());
                m.params.remove(i);
            }
            for param in &mut m.params {
                if rng.random_bool(profile.methods * 0.3) {
                    param.type_name = pick(rng, TYPES).to_string();
                }
            }
            if rng.random_bool(profile.methods * 0.3) {
                m.return_type = pick(rng, TYPES).to_string();
            }
            let clash = methods.iter().any(|x| x.name == m.name && x.arity() == m.arity());
            if !clash {
                methods.push(m);
            }
        }
        if rng.random_bool(profile.methods * 0.4) {
            let name = pick(rng, METHOD_NAMES);
            let extra = random_method(rng, name, 2);
            if !methods.iter().any(|x| x.name == extra.name && x.arity() == extra.arity()) {
                methods.push(extra);
            }
        }
        out.methods = methods;
        classes.push(out);
    }
    if rng.random_bool(profile.structure * 0.5) {
        let name = pick(rng, CLASS_NAMES);
        if !classes.iter().any(|c| c.name == name) && !renames.contains_key(name) {
            classes.push(ClassEntity::new(name).with_attribute(pick(rng, ATTRIBUTE_NAMES), pick(rng, TYPES)));
        }
    }

    let resolve = |name: &str| -> Option<String> {
        match renames.get(name) {
            Some(Some(new)) => Some(new.clone()),
            Some(None) => None,
            None => Some(name.to_string()),
        }
    };
    let mut relationships = Vec::new();
    for r in &model.relationships {
        let (Some(s), Some(t)) = (resolve(&r.source), resolve(&r.target)) else {
            continue;
        };
        if rng.random_bool(profile.relationships * 0.3) {
            continue;
        }
        let mut r = r.clone();
        r.source = s;
        r.target = t;
        if rng.random_bool(profile.relationships * 0.4) {
            r.kind = random_kind(rng);
        }
        if rng.random_bool(profile.relationships * 0.4) {
            r.label.from_end = pick(rng, MULTIPLICITIES).to_string();
            r.label.to_end = pick(rng, MULTIPLICITIES).to_string();
        }
        if rng.random_bool(profile.relationships * 0.15) {
            std::mem::swap(&mut r.source, &mut r.target);
        }
        relationships.push(r);
    }
    if classes.len() > 1 && rng.random_bool(profile.relationships * 0.4) {
        let s = rng.random_range(0..classes.len());
        let t = (s + rng.random_range(1..classes.len())) % classes.len();
        relationships.push(Relationship::new(random_kind(rng), classes[s].name.as_str(), classes[t].name.as_str()));
    }

    let out = ClassModel::new(classes, relationships);
    debug_assert!(out.validate().is_ok(), "{:?}", out.validate());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_models_are_valid_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = random_model(&mut a, &ModelShape::MEDIUM);
            assert!(m.validate().is_ok());
            assert_eq!(m, random_model(&mut b, &ModelShape::MEDIUM));
            let mutated = mutate(&mut a, &m, 0.7);
            assert!(mutated.validate().is_ok());
            mutate(&mut b, &m, 0.7);
        }
    }

    #[test]
    fn zero_intensity_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m = random_model(&mut rng, &ModelShape::MEDIUM);
            assert_eq!(mutate(&mut rng, &m, 0.0), m);
        }
    }
}
