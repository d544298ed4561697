//! Class-diagram model: classes with attributes and methods, plus typed,
//! directed relationships with multiplicity labels.
//!
//! The canonical document is a JSON object with `classes` and
//! `relationships` arrays. Field order and list order are preserved, so
//! serializing the same model twice yields identical bytes.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("malformed document at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate class name `{0}`")]
    DuplicateClass(String),
    #[error("class `{class}` declares attribute `{attribute}` more than once")]
    DuplicateAttribute { class: String, attribute: String },
    #[error("class `{class}` declares method `{method}` with {arity} parameter(s) more than once")]
    DuplicateMethod {
        class: String,
        method: String,
        arity: usize,
    },
    #[error("method `{method}` in class `{class}` repeats parameter `{parameter}`")]
    DuplicateParameter {
        class: String,
        method: String,
        parameter: String,
    },
    #[error("empty {0} name")]
    EmptyName(&'static str),
    #[error("relationship endpoint `{0}` does not name a declared class")]
    DanglingEndpoint(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(rename = "type")]
    pub type_name: String,
}

impl Attribute {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(rename = "type")]
    pub type_name: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, type_name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            type_name: type_name.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Method {
    pub name: String,
    /// Empty means void or unspecified.
    pub return_type: String,
    #[serde(default)]
    pub params: Vec<Parameter>,
}

impl Method {
    pub fn new(name: impl Into<String>, return_type: impl Into<String>, params: Vec<Parameter>) -> Self {
        Self {
            name: name.into(),
            return_type: return_type.into(),
            params,
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// Declaration keyword of a class. Carried as metadata only; every metric
/// treats all stereotypes as plain classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stereotype {
    #[default]
    Class,
    Interface,
    Abstract,
    Enum,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassEntity {
    pub name: String,
    #[serde(default)]
    pub stereotype: Stereotype,
    #[serde(default)]
    pub attributes: Vec<Attribute>,
    #[serde(default)]
    pub methods: Vec<Method>,
}

impl ClassEntity {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            stereotype: Stereotype::Class,
            attributes: Vec::new(),
            methods: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, name: &str, type_name: &str) -> Self {
        self.attributes.push(Attribute::new(name, type_name));
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.methods.push(method);
        self
    }
}

/// Relationship kinds: association, aggregation, composition, dependency,
/// generalization, realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationshipKind {
    AS,
    AG,
    CO,
    DE,
    GE,
    RE,
}

impl RelationshipKind {
    pub const ALL: [RelationshipKind; 6] = [
        RelationshipKind::AS,
        RelationshipKind::AG,
        RelationshipKind::CO,
        RelationshipKind::DE,
        RelationshipKind::GE,
        RelationshipKind::RE,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            RelationshipKind::AS => "AS",
            RelationshipKind::AG => "AG",
            RelationshipKind::CO => "CO",
            RelationshipKind::DE => "DE",
            RelationshipKind::GE => "GE",
            RelationshipKind::RE => "RE",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    /// Association-like kinds carry multiplicities.
    pub fn is_structural(self) -> bool {
        matches!(self, RelationshipKind::AS | RelationshipKind::AG | RelationshipKind::CO)
    }
}

impl fmt::Display for RelationshipKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Multiplicity text at each end; empty means unlabeled.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiplicityLabel {
    #[serde(rename = "from")]
    pub from_end: String,
    #[serde(rename = "to")]
    pub to_end: String,
}

impl MultiplicityLabel {
    pub fn new(from_end: impl Into<String>, to_end: impl Into<String>) -> Self {
        Self {
            from_end: from_end.into(),
            to_end: to_end.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relationship {
    pub kind: RelationshipKind,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub label: MultiplicityLabel,
}

impl Relationship {
    pub fn new(kind: RelationshipKind, source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            kind,
            source: source.into(),
            target: target.into(),
            label: MultiplicityLabel::default(),
        }
    }

    pub fn with_label(mut self, from_end: &str, to_end: &str) -> Self {
        self.label = MultiplicityLabel::new(from_end, to_end);
        self
    }
}

/// A class diagram. List order is meaningful: relationship endpoints are
/// resolved to class indices by declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassModel {
    pub classes: Vec<ClassEntity>,
    pub relationships: Vec<Relationship>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub class_count: usize,
    pub avg_attributes_per_class: f64,
    pub avg_methods_per_class: f64,
    pub relationship_count: usize,
}

impl ClassModel {
    pub fn new(classes: Vec<ClassEntity>, relationships: Vec<Relationship>) -> Self {
        Self {
            classes,
            relationships,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.relationships.is_empty()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassEntity> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Checks every structural invariant of the model.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut names = HashSet::new();
        for class in &self.classes {
            if class.name.trim().is_empty() {
                return Err(ModelError::EmptyName("class"));
            }
            if !names.insert(class.name.as_str()) {
                return Err(ModelError::DuplicateClass(class.name.clone()));
            }
            let mut attrs = HashSet::new();
            for attr in &class.attributes {
                if attr.name.trim().is_empty() {
                    return Err(ModelError::EmptyName("attribute"));
                }
                if !attrs.insert(attr.name.as_str()) {
                    return Err(ModelError::DuplicateAttribute {
                        class: class.name.clone(),
                        attribute: attr.name.clone(),
                    });
                }
            }
            let mut methods = HashSet::new();
            for method in &class.methods {
                if method.name.trim().is_empty() {
                    return Err(ModelError::EmptyName("method"));
                }
                if !methods.insert((method.name.as_str(), method.arity())) {
                    return Err(ModelError::DuplicateMethod {
                        class: class.name.clone(),
                        method: method.name.clone(),
                        arity: method.arity(),
                    });
                }
                let mut params = HashSet::new();
                for p in &method.params {
                    if p.name.trim().is_empty() {
                        return Err(ModelError::EmptyName("parameter"));
                    }
                    if !params.insert(p.name.as_str()) {
                        return Err(ModelError::DuplicateParameter {
                            class: class.name.clone(),
                            method: method.name.clone(),
                            parameter: p.name.clone(),
                        });
                    }
                }
            }
        }
        for rel in &self.relationships {
            for end in [&rel.source, &rel.target] {
                if !names.contains(end.as_str()) {
                    return Err(ModelError::DanglingEndpoint(end.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> ModelStats {
        model_stats(self)
    }
}

pub fn model_stats(model: &ClassModel) -> ModelStats {
    let class_count = model.classes.len();
    let (avg_attributes_per_class, avg_methods_per_class) = if class_count == 0 {
        (0.0, 0.0)
    } else {
        let attrs: usize = model.classes.iter().map(|c| c.attributes.len()).sum();
        let methods: usize = model.classes.iter().map(|c| c.methods.len()).sum();
        (attrs as f64 / class_count as f64, methods as f64 / class_count as f64)
    };
    ModelStats {
        class_count,
        avg_attributes_per_class,
        avg_methods_per_class,
        relationship_count: model.relationships.len(),
    }
}

pub fn to_canonical_document(model: &ClassModel) -> String {
    // Struct field order is fixed by the derive, so the output is stable.
    serde_json::to_string_pretty(model).expect("class model serializes")
}

pub fn from_canonical_document(doc: &str) -> Result<ClassModel, ModelError> {
    let model: ClassModel = serde_json::from_str(doc).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> ClassModel {
        ClassModel::new(
            vec![
                ClassEntity::new("Customer").with_attribute("name", "String"),
                ClassEntity::new("Order")
                    .with_attribute("total", "Money")
                    .with_method(Method::new("addItem", "void", vec![Parameter::new("item", "Product")])),
                ClassEntity::new("Product"),
            ],
            vec![
                Relationship::new(RelationshipKind::AS, "Customer", "Order").with_label("1", "*"),
                Relationship::new(RelationshipKind::CO, "Order", "Product"),
            ],
        )
    }

    #[test]
    fn empty_model_document() {
        let doc = to_canonical_document(&ClassModel::default());
        let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["classes"], serde_json::json!([]));
        assert_eq!(v["relationships"], serde_json::json!([]));
        assert_eq!(from_canonical_document(&doc).unwrap(), ClassModel::default());
    }

    #[test]
    fn single_class_round_trip() {
        let m = ClassModel::new(vec![ClassEntity::new("Order").with_attribute("total", "Money")], vec![]);
        let back = from_canonical_document(&to_canonical_document(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn serialization_is_byte_stable() {
        let m = fixture();
        assert_eq!(to_canonical_document(&m), to_canonical_document(&m.clone()));
    }

    #[test]
    fn dangling_endpoint_names_the_class() {
        let doc = r#"{"classes":[{"name":"A"}],"relationships":[{"kind":"AS","source":"A","target":"Ghost"}]}"#;
        let err = from_canonical_document(doc).unwrap_err();
        assert_eq!(err, ModelError::DanglingEndpoint("Ghost".into()));
        assert!(err.to_string().contains("Ghost"));
    }

    #[test]
    fn duplicate_class_rejected() {
        let doc = r#"{"classes":[{"name":"User"},{"name":"User"}],"relationships":[]}"#;
        assert_eq!(
            from_canonical_document(doc).unwrap_err(),
            ModelError::DuplicateClass("User".into())
        );
    }

    #[test]
    fn malformed_document_reports_location() {
        let err = from_canonical_document("{\n  \"classes\": [,\n}").unwrap_err();
        match err {
            ModelError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn overloads_with_distinct_arity_are_allowed() {
        let m = ClassModel::new(
            vec![ClassEntity::new("A")
                .with_method(Method::new("f", "", vec![]))
                .with_method(Method::new("f", "", vec![Parameter::new("x", "int")]))],
            vec![],
        );
        assert!(m.validate().is_ok());
        let dup = ClassModel::new(
            vec![ClassEntity::new("A")
                .with_method(Method::new("f", "int", vec![]))
                .with_method(Method::new("f", "", vec![]))],
            vec![],
        );
        assert!(matches!(dup.validate(), Err(ModelError::DuplicateMethod { .. })));
    }

    #[test]
    fn stats_examples() {
        let s = model_stats(&ClassModel::default());
        assert_eq!((s.class_count, s.avg_attributes_per_class, s.avg_methods_per_class, s.relationship_count), (0, 0.0, 0.0, 0));

        let m = ClassModel::new(
            vec![
                ClassEntity::new("A").with_attribute("a", "").with_attribute("b", "").with_attribute("c", ""),
                ClassEntity::new("B").with_attribute("x", "int"),
            ],
            vec![Relationship::new(RelationshipKind::AS, "A", "B")],
        );
        let s = m.stats();
        assert_eq!(s.class_count, 2);
        assert_eq!(s.avg_attributes_per_class, 2.0);
        assert_eq!(s.avg_methods_per_class, 0.0);
        assert_eq!(s.relationship_count, 1);
    }
}
