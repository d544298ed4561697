//! PlantUML class-diagram reader, used both to build [`ClassModel`]s from
//! diagram source and as the syntax oracle for generated designs.
//!
//! Accepted subset:
//!
//! * `class`, `interface`, `abstract class`, `abstract` and `enum`
//!   declarations, optionally with `<<stereotype>>`, `extends`/`implements`
//!   clauses and a `{ ... }` body (body content may start on the opening
//!   line and end on the closing one)
//! * member lines `name : Type`, `Type name`, `name(p1: T1, ...) : Ret` or
//!   `Ret name(T1 p1, ...)`; visibility markers `+ - # ~` and `{static}` /
//!   `{abstract}` modifiers are dropped; a member with `(` before any `:` is
//!   a method
//! * relationships `Left ["m1"] ARROW ["m2"] Right [: text]` with the arrows
//!   of [`ARROWS`]; dash and dot runs of any length, `[...]` styling and
//!   `up`/`down`/`left`/`right` hints are normalized away
//! * `'` comments, `/' ... '/` blocks, `skinparam`, `hide`, `show`, `title`,
//!   `caption`, `header`, `footer`, direction lines and `note` lines or
//!   blocks are skipped
//!
//! Classes used only in relationships are declared implicitly, after all
//! explicit classes, in order of first reference. A class declared twice
//! keeps the union of its members.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{Attribute, ClassEntity, ClassModel, Method, Parameter, Relationship, RelationshipKind, Stereotype};

/// Arrow tokens: `(token, kind, reversed)`. Reversed arrows point from the
/// right operand to the left one, so operands and multiplicities swap.
pub const ARROWS: [(&str, RelationshipKind, bool); 13] = [
    ("--|>", RelationshipKind::GE, false),
    ("<|--", RelationshipKind::GE, true),
    ("..|>", RelationshipKind::RE, false),
    ("<|..", RelationshipKind::RE, true),
    ("..>", RelationshipKind::DE, false),
    ("<..", RelationshipKind::DE, true),
    ("o--", RelationshipKind::AG, false),
    ("--o", RelationshipKind::AG, true),
    ("*--", RelationshipKind::CO, false),
    ("--*", RelationshipKind::CO, true),
    ("-->", RelationshipKind::AS, false),
    ("<--", RelationshipKind::AS, true),
    ("--", RelationshipKind::AS, false),
];

/// Arrow written by [`render`] for each kind.
pub fn canonical_arrow(kind: RelationshipKind) -> &'static str {
    match kind {
        RelationshipKind::AS => "-->",
        RelationshipKind::AG => "o--",
        RelationshipKind::CO => "*--",
        RelationshipKind::DE => "..>",
        RelationshipKind::GE => "--|>",
        RelationshipKind::RE => "..|>",
    }
}

pub fn lookup_arrow(token: &str) -> Option<(RelationshipKind, bool)> {
    ARROWS.iter().find(|(t, _, _)| *t == token).map(|&(_, k, r)| (k, r))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    SyntaxError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub status: ParseStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ClassModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseOutcome {
    pub fn is_ok(&self) -> bool {
        self.status == ParseStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExtractionOutcome {
    Found { code: String },
    MissingMarkers,
}

impl ExtractionOutcome {
    pub fn code(&self) -> Option<&str> {
        match self {
            ExtractionOutcome::Found { code } => Some(code),
            ExtractionOutcome::MissingMarkers => None,
        }
    }
}

/// Text between the first `@startuml` and the next `@enduml`. The rest of
/// the `@startuml` line and the `@enduml` marker itself are excluded.
pub fn extract_plantuml(raw_output: &str) -> ExtractionOutcome {
    let Some(start) = raw_output.find("@startuml") else {
        return ExtractionOutcome::MissingMarkers;
    };
    let after = &raw_output[start + "@startuml".len()..];
    let Some(end) = after.find("@enduml") else {
        return ExtractionOutcome::MissingMarkers;
    };
    let block = &after[..end];
    let body = match block.find('\n') {
        Some(nl) => &block[nl + 1..],
        // Markers on one line: nothing in between counts as code.
        None => "",
    };
    ExtractionOutcome::Found {
        code: body.trim().to_string(),
    }
}

/// True when `code` parses.
pub fn validate(code: &str) -> bool {
    parse(code).is_ok()
}

pub fn parse(code: &str) -> ParseOutcome {
    let mut parser = Parser::default();
    let lines: Vec<&str> = code.lines().collect();
    parser.run(&lines);
    parser.finish()
}

// ---------------------------------------------------------------------------

#[derive(Default)]
struct Parser {
    classes: Vec<ClassEntity>,
    explicit: Vec<bool>,
    relationships: Vec<Relationship>,
    diagnostics: Vec<Diagnostic>,
}

enum Block {
    None,
    Class { index: usize, opened_at: usize, is_enum: bool },
    Note,
    Comment,
    Skinparam,
}

impl Parser {
    fn error(&mut self, line: usize, column: usize, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            line,
            column,
            message: message.into(),
        });
    }

    fn run(&mut self, lines: &[&str]) {
        let mut block = Block::None;
        for (idx, raw) in lines.iter().enumerate() {
            let line_no = idx + 1;
            let indent = raw.len() - raw.trim_start().len();
            let line = raw.trim();
            match block {
                Block::Comment => {
                    if line.contains("'/") {
                        block = Block::None;
                    }
                    continue;
                }
                Block::Note => {
                    if line.starts_with("end note") || line == "endnote" {
                        block = Block::None;
                    }
                    continue;
                }
                Block::Skinparam => {
                    if line.starts_with('}') {
                        block = Block::None;
                    }
                    continue;
                }
                Block::Class { index, opened_at, is_enum } => {
                    let column = indent + 1;
                    if let Some(rest) = line.strip_suffix('}') {
                        self.member_line(index, rest.trim(), line_no, column, is_enum);
                        block = Block::None;
                    } else {
                        self.member_line(index, line, line_no, column, is_enum);
                        block = Block::Class { index, opened_at, is_enum };
                    }
                    continue;
                }
                Block::None => {}
            }

            if line.is_empty() || line.starts_with('\'') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("/'") {
                if !rest.contains("'/") {
                    block = Block::Comment;
                }
                continue;
            }
            if line.starts_with("@startuml") || line.starts_with("@enduml") {
                continue;
            }
            let first_word = line.split_whitespace().next().unwrap_or_default();
            match first_word {
                "skinparam" => {
                    if line.ends_with('{') {
                        block = Block::Skinparam;
                    }
                    continue;
                }
                "hide" | "show" | "title" | "caption" | "header" | "footer" => continue,
                "note" => {
                    if !line.contains(':') {
                        block = Block::Note;
                    }
                    continue;
                }
                _ => {}
            }
            if line.ends_with(" direction") || line.starts_with("left to right") || line.starts_with("top to bottom") {
                continue;
            }
            if let Some((stereotype, rest, offset)) = declaration_keyword(line) {
                block = self.declaration(stereotype, rest, line_no, indent + offset + 1);
                continue;
            }
            self.relationship_line(line, line_no, indent + 1);
        }
        if let Block::Class { index, opened_at, .. } = block {
            let name = self.classes[index].name.clone();
            self.error(opened_at, 1, format!("class body of `{name}` is never closed"));
        }
    }

    fn finish(self) -> ParseOutcome {
        if !self.diagnostics.is_empty() {
            return ParseOutcome {
                status: ParseStatus::SyntaxError,
                model: None,
                diagnostics: self.diagnostics,
            };
        }
        let mut classes = Vec::with_capacity(self.classes.len());
        let mut implicit = Vec::new();
        for (class, explicit) in self.classes.into_iter().zip(self.explicit) {
            if explicit {
                classes.push(class);
            } else {
                implicit.push(class);
            }
        }
        classes.extend(implicit);
        let model = ClassModel::new(classes, self.relationships);
        debug_assert!(model.validate().is_ok(), "{:?}", model.validate());
        ParseOutcome {
            status: ParseStatus::Ok,
            model: Some(model),
            diagnostics: Vec::new(),
        }
    }

    fn class_slot(&mut self, name: &str, explicit: bool) -> usize {
        if let Some(i) = self.classes.iter().position(|c| c.name == name) {
            if explicit {
                self.explicit[i] = true;
            }
            return i;
        }
        self.classes.push(ClassEntity::new(name));
        self.explicit.push(explicit);
        self.classes.len() - 1
    }

    fn declaration(&mut self, stereotype: Stereotype, rest: &str, line_no: usize, column: usize) -> Block {
        let (head, body) = match rest.find('{') {
            Some(pos) => (rest[..pos].trim(), Some(rest[pos + 1..].trim())),
            None => (rest.trim(), None),
        };
        let head = strip_stereotype_marks(head);
        let mut words = head.split_whitespace();
        let Some(raw_name) = words.next() else {
            self.error(line_no, column, "class declaration without a name");
            return Block::None;
        };
        let name = strip_generics(raw_name.trim_matches('"'));
        if !is_class_name(name) {
            self.error(line_no, column, format!("invalid class name `{raw_name}`"));
            return Block::None;
        }
        let index = self.class_slot(name, true);
        if stereotype != Stereotype::Class || self.classes[index].stereotype == Stereotype::Class {
            self.classes[index].stereotype = stereotype;
        }

        // extends / implements clauses
        let mut mode: Option<RelationshipKind> = None;
        for word in words {
            match word {
                "extends" => mode = Some(RelationshipKind::GE),
                "implements" => mode = Some(RelationshipKind::RE),
                _ => {
                    let Some(kind) = mode else {
                        self.error(line_no, column, format!("unexpected `{word}` in declaration of `{name}`"));
                        return Block::None;
                    };
                    for parent in word.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                        let parent = strip_generics(parent);
                        if !is_class_name(parent) {
                            self.error(line_no, column, format!("invalid class name `{parent}`"));
                            return Block::None;
                        }
                        self.class_slot(parent, false);
                        self.relationships.push(Relationship::new(kind, name, parent));
                    }
                }
            }
        }
        if mode.is_some() && self.relationships.last().is_none_or(|r| r.source != name) {
            self.error(line_no, column, format!("missing parent class in declaration of `{name}`"));
            return Block::None;
        }

        let is_enum = stereotype == Stereotype::Enum;
        match body {
            None => Block::None,
            Some(body) => {
                if let Some(inner) = body.strip_suffix('}') {
                    self.member_line(index, inner.trim(), line_no, column, is_enum);
                    Block::None
                } else {
                    self.member_line(index, body, line_no, column, is_enum);
                    Block::Class {
                        index,
                        opened_at: line_no,
                        is_enum,
                    }
                }
            }
        }
    }

    fn member_line(&mut self, class: usize, line: &str, line_no: usize, column: usize, is_enum: bool) {
        let line = line.trim().trim_end_matches(';').trim();
        if line.is_empty() || line.starts_with('\'') || is_separator(line) {
            return;
        }
        let member = match parse_member(line, is_enum) {
            Ok(m) => m,
            Err(message) => {
                self.error(line_no, column, format!("malformed member line `{line}`: {message}"));
                return;
            }
        };
        let entity = &mut self.classes[class];
        match member {
            Member::Attribute(a) => {
                if !entity.attributes.iter().any(|x| x.name == a.name) {
                    entity.attributes.push(a);
                }
            }
            Member::Method(m) => {
                if !entity.methods.iter().any(|x| x.name == m.name && x.arity() == m.arity()) {
                    entity.methods.push(m);
                }
            }
        }
    }

    fn relationship_line(&mut self, line: &str, line_no: usize, column: usize) {
        if !line.matches('"').count().is_multiple_of(2) {
            self.error(line_no, column + line.find('"').unwrap_or(0), "unbalanced quotes");
            return;
        }
        let statement = strip_relation_label(line);
        let tokens = match tokenize(statement) {
            Ok(t) => t,
            Err((offset, message)) => {
                self.error(line_no, column + offset, message);
                return;
            }
        };
        let shape: Vec<bool> = tokens.iter().map(|t| t.quoted).collect();
        let (left, from_label, arrow, to_label, right) = match shape.as_slice() {
            [false, false, false] => (&tokens[0], None, &tokens[1], None, &tokens[2]),
            [false, true, false, false] => (&tokens[0], Some(&tokens[1]), &tokens[2], None, &tokens[3]),
            [false, false, true, false] => (&tokens[0], None, &tokens[1], Some(&tokens[2]), &tokens[3]),
            [false, true, false, true, false] => (&tokens[0], Some(&tokens[1]), &tokens[2], Some(&tokens[3]), &tokens[4]),
            [false] => match split_compact(&tokens[0]) {
                Some(parts) => {
                    self.add_relationship(&parts.0, None, &parts.1, None, &parts.2, line_no, column);
                    return;
                }
                None => {
                    self.error(line_no, column, format!("unrecognized statement `{line}`"));
                    return;
                }
            },
            _ => {
                self.error(line_no, column, format!("unrecognized statement `{line}`"));
                return;
            }
        };
        self.add_relationship(left, from_label, arrow, to_label, right, line_no, column);
    }

    #[allow(clippy::too_many_arguments)]
    fn add_relationship(
        &mut self,
        left: &Token,
        from_label: Option<&Token>,
        arrow: &Token,
        to_label: Option<&Token>,
        right: &Token,
        line_no: usize,
        column: usize,
    ) {
        for operand in [left, right] {
            if !is_class_name(&operand.text) {
                self.error(line_no, column + operand.offset, format!("invalid class name `{}`", operand.text));
                return;
            }
        }
        let normalized = normalize_arrow(&arrow.text);
        let Some((kind, reversed)) = lookup_arrow(&normalized) else {
            self.error(line_no, column + arrow.offset, format!("unknown arrow `{}`", arrow.text));
            return;
        };
        let left_label = from_label.map_or("", |t| t.text.as_str());
        let right_label = to_label.map_or("", |t| t.text.as_str());
        let (source, target, from_end, to_end) = if reversed {
            (&right.text, &left.text, right_label, left_label)
        } else {
            (&left.text, &right.text, left_label, right_label)
        };
        self.class_slot(&left.text, false);
        self.class_slot(&right.text, false);
        self.relationships
            .push(Relationship::new(kind, source.as_str(), target.as_str()).with_label(from_end, to_end));
    }
}

enum Member {
    Attribute(Attribute),
    Method(Method),
}

fn declaration_keyword(line: &str) -> Option<(Stereotype, &str, usize)> {
    const KEYWORDS: [(&str, Stereotype); 5] = [
        ("abstract class ", Stereotype::Abstract),
        ("abstract ", Stereotype::Abstract),
        ("class ", Stereotype::Class),
        ("interface ", Stereotype::Interface),
        ("enum ", Stereotype::Enum),
    ];
    KEYWORDS
        .iter()
        .find_map(|(kw, st)| line.strip_prefix(kw).map(|rest| (*st, rest, kw.len())))
}

fn strip_stereotype_marks(head: &str) -> String {
    let mut out = String::with_capacity(head.len());
    let mut rest = head;
    while let Some(start) = rest.find("<<") {
        out.push_str(&rest[..start]);
        match rest[start..].find(">>") {
            Some(end) => rest = &rest[start + end + 2..],
            None => {
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn strip_generics(name: &str) -> &str {
    match name.find('<') {
        Some(pos) if name.ends_with('>') => &name[..pos],
        _ => name,
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

fn is_class_name(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(is_identifier)
}

fn is_separator(line: &str) -> bool {
    let bare = line.trim_matches(|c| matches!(c, '-' | '.' | '=' | '_'));
    bare.len() < line.len() && (bare.is_empty() || line.len() - bare.len() >= 4)
}

fn strip_modifiers(mut s: &str) -> &str {
    loop {
        s = s.trim_start();
        if let Some(rest) = s.strip_prefix(['+', '-', '#', '~']) {
            s = rest;
            continue;
        }
        if s.starts_with('{') {
            if let Some(end) = s.find('}') {
                let inner = &s[1..end];
                if matches!(inner, "static" | "abstract" | "field" | "method" | "classifier") {
                    s = &s[end + 1..];
                    continue;
                }
            }
        }
        return s;
    }
}

fn parse_member(line: &str, is_enum: bool) -> Result<Member, String> {
    let body = strip_modifiers(line);
    if body.contains('{') || body.contains('}') {
        return Err("unexpected brace".into());
    }
    let paren = body.find('(');
    let colon = body.find(':');
    let is_method = match (paren, colon) {
        (Some(p), Some(c)) => p < c,
        (Some(_), None) => true,
        _ => false,
    };
    if is_method {
        parse_method(body).map(Member::Method)
    } else {
        let text = if is_enum { body.trim_end_matches(',') } else { body };
        parse_attribute(text).map(Member::Attribute)
    }
}

/// `name : Type`, `Type name` or `name`; a `= default` suffix is dropped.
fn parse_typed_name(text: &str) -> Result<(String, String), String> {
    let text = match text.find('=') {
        Some(pos) => &text[..pos],
        None => text,
    }
    .trim();
    if let Some(pos) = text.find(':') {
        let name = text[..pos].trim();
        let type_name = text[pos + 1..].trim();
        if !is_identifier(name) {
            return Err(format!("`{name}` is not a valid name"));
        }
        check_type(type_name)?;
        return Ok((name.to_string(), type_name.to_string()));
    }
    let pos = split_type_prefix(text);
    match pos {
        Some(pos) => {
            let (type_name, name) = (text[..pos].trim(), text[pos..].trim());
            if !is_identifier(name) {
                return Err(format!("`{name}` is not a valid name"));
            }
            check_type(type_name)?;
            Ok((name.to_string(), type_name.to_string()))
        }
        None => {
            if !is_identifier(text) {
                return Err(format!("`{text}` is not a valid name"));
            }
            Ok((text.to_string(), String::new()))
        }
    }
}

/// Start of the trailing name in `Type name`, respecting generic brackets.
fn split_type_prefix(text: &str) -> Option<usize> {
    let mut depth = 0i32;
    let mut last_space = None;
    for (i, c) in text.char_indices() {
        match c {
            '<' | '[' => depth += 1,
            '>' | ']' => depth -= 1,
            c if c.is_whitespace() && depth == 0 => last_space = Some(i + c.len_utf8()),
            _ => {}
        }
    }
    last_space.filter(|&p| !text[..p].trim().is_empty())
}

fn check_type(type_name: &str) -> Result<(), String> {
    let mut angle = 0i32;
    let mut square = 0i32;
    for c in type_name.chars() {
        match c {
            '<' => angle += 1,
            '>' => angle -= 1,
            '[' => square += 1,
            ']' => square -= 1,
            '(' | ')' | '"' | ':' => return Err(format!("unexpected `{c}` in type `{type_name}`")),
            _ => {}
        }
        if angle < 0 || square < 0 {
            return Err(format!("unbalanced brackets in type `{type_name}`"));
        }
    }
    if angle != 0 || square != 0 {
        return Err(format!("unbalanced brackets in type `{type_name}`"));
    }
    Ok(())
}

fn parse_attribute(text: &str) -> Result<Attribute, String> {
    let (name, type_name) = parse_typed_name(text)?;
    Ok(Attribute::new(name, type_name))
}

fn parse_method(text: &str) -> Result<Method, String> {
    let open = text.find('(').expect("caller checked for '('");
    let close = matching_paren(text, open).ok_or("unbalanced parentheses")?;
    let head = text[..open].trim();
    let tail = text[close + 1..].trim();
    let (name, prefix_type) = match split_type_prefix(head) {
        Some(pos) => (head[pos..].trim(), head[..pos].trim()),
        None => (head, ""),
    };
    if !is_identifier(name) {
        return Err(format!("`{name}` is not a valid method name"));
    }
    let return_type = if tail.is_empty() {
        prefix_type
    } else if let Some(ret) = tail.strip_prefix(':') {
        ret.trim()
    } else {
        return Err(format!("unexpected `{tail}` after parameter list"));
    };
    check_type(return_type)?;

    let mut params: Vec<Parameter> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for raw in split_top_level(&text[open + 1..close]) {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err("empty parameter".into());
        }
        let (mut name, type_name) = parse_typed_name(raw)?;
        if !seen.insert(name.clone()) {
            // Repeated names (e.g. bare types `f(int, int)`) get a numeric suffix.
            let base = name.clone();
            let mut k = 2;
            while seen.contains(&format!("{base}_{k}")) {
                k += 1;
            }
            name = format!("{base}_{k}");
            seen.insert(name.clone());
        }
        params.push(Parameter::new(name, type_name));
    }
    if text[open + 1..close].trim().is_empty() {
        params.clear();
    }
    Ok(Method::new(name, return_type, params))
}

fn matching_paren(text: &str, open: usize) -> Option<usize> {
    let mut depth = 0;
    for (i, c) in text[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    let close = open + i;
                    // nothing but the tail may follow; a second '(' is malformed
                    return if text[close + 1..].contains(['(', ')']) { None } else { Some(close) };
                }
            }
            _ => {}
        }
    }
    None
}

fn split_top_level(params: &str) -> Vec<&str> {
    if params.trim().is_empty() {
        return Vec::new();
    }
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in params.char_indices() {
        match c {
            '<' | '[' | '(' => depth += 1,
            '>' | ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&params[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&params[start..]);
    parts
}

struct Token {
    text: String,
    quoted: bool,
    offset: usize,
}

fn strip_relation_label(line: &str) -> &str {
    let mut in_quote = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quote = !in_quote,
            ':' if !in_quote => return line[..i].trim_end(),
            _ => {}
        }
    }
    line
}

fn tokenize(statement: &str) -> Result<Vec<Token>, (usize, String)> {
    let mut tokens = Vec::new();
    let mut chars = statement.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '"' {
            chars.next();
            let mut text = String::new();
            let mut closed = false;
            for (_, c) in chars.by_ref() {
                if c == '"' {
                    closed = true;
                    break;
                }
                text.push(c);
            }
            if !closed {
                return Err((i, "unbalanced quotes".into()));
            }
            tokens.push(Token {
                text: text.trim().to_string(),
                quoted: true,
                offset: i,
            });
            continue;
        }
        let mut text = String::new();
        while let Some(&(_, c)) = chars.peek() {
            if c.is_whitespace() || c == '"' {
                break;
            }
            text.push(c);
            chars.next();
        }
        tokens.push(Token {
            text,
            quoted: false,
            offset: i,
        });
    }
    Ok(tokens)
}

/// `A-->B` written without spaces.
fn split_compact(token: &Token) -> Option<(Token, Token, Token)> {
    let text = &token.text;
    let is_name_char = |c: char| c.is_alphanumeric() || c == '_' || c == '.' || c == '$';
    let left_end = text.find(|c: char| !is_name_char(c))?;
    let right_start = text.rfind(|c: char| !is_name_char(c))? + 1;
    if left_end == 0 || right_start >= text.len() || right_start <= left_end {
        return None;
    }
    let piece = |a: usize, b: usize| Token {
        text: text[a..b].to_string(),
        quoted: false,
        offset: token.offset + a,
    };
    Some((piece(0, left_end), piece(left_end, right_start), piece(right_start, text.len())))
}

/// Drops `[...]` styling and direction hints, then shortens dash and dot
/// runs to two characters.
pub fn normalize_arrow(arrow: &str) -> String {
    let mut bare = String::with_capacity(arrow.len());
    let mut depth = 0;
    for c in arrow.chars() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            _ if depth > 0 => {}
            _ => bare.push(c),
        }
    }
    for hint in ["up", "down", "left", "right"] {
        for sep in ["-", "."] {
            bare = bare.replace(&format!("{sep}{hint}{sep}"), &format!("{sep}{sep}"));
        }
    }
    let mut out = String::with_capacity(bare.len());
    let mut chars = bare.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '-' || c == '.' {
            while chars.peek() == Some(&c) {
                chars.next();
            }
            out.push(c);
            out.push(c);
        } else {
            out.push(c);
        }
    }
    out
}

// ---------------------------------------------------------------------------

/// Renders a model as PlantUML that [`parse`] reads back to the same model.
pub fn render(model: &ClassModel) -> String {
    let mut out = String::from("@startuml\n");
    for class in &model.classes {
        let keyword = match class.stereotype {
            Stereotype::Class => "class",
            Stereotype::Interface => "interface",
            Stereotype::Abstract => "abstract class",
            Stereotype::Enum => "enum",
        };
        if class.attributes.is_empty() && class.methods.is_empty() {
            out.push_str(&format!("{keyword} {}\n", class.name));
            continue;
        }
        out.push_str(&format!("{keyword} {} {{\n", class.name));
        for a in &class.attributes {
            out.push_str(&format!("  {}\n", typed(&a.name, &a.type_name)));
        }
        for m in &class.methods {
            let params: Vec<String> = m.params.iter().map(|p| typed(&p.name, &p.type_name)).collect();
            let mut line = format!("  {}({})", m.name, params.join(", "));
            if !m.return_type.is_empty() {
                line.push_str(&format!(" : {}", m.return_type));
            }
            out.push_str(&line);
            out.push('\n');
        }
        out.push_str("}\n");
    }
    for r in &model.relationships {
        let quote = |s: &str| if s.is_empty() { String::new() } else { format!(" \"{s}\"") };
        out.push_str(&format!(
            "{}{} {}{} {}\n",
            r.source,
            quote(&r.label.from_end),
            canonical_arrow(r.kind),
            quote(&r.label.to_end),
            r.target
        ));
    }
    out.push_str("@enduml\n");
    out
}

fn typed(name: &str, type_name: &str) -> String {
    if type_name.is_empty() {
        name.to_string()
    } else {
        format!("{name} : {type_name}")
    }
}
