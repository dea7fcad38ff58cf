//! Front end for the STRIPS subset of PDDL: `:strips`, `:typing`,
//! `:negative-preconditions` and `:action-costs` with non-negative integer
//! costs.

mod parser;
pub mod sexpr;

use std::fmt;

use thiserror::Error;

pub use parser::{parse_domain, parse_problem};

/// Root of every type hierarchy.
pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("predicate `{predicate}` expects {expected} argument(s), found {found}")]
    ArityMismatch { predicate: String, expected: usize, found: usize },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("action `{action}` uses undeclared variable `{variable}`")]
    UnknownVariable { action: String, variable: String },
    #[error("problem is for domain `{found}`, expected `{expected}`")]
    DomainMismatch { expected: String, found: String },
    #[error("invalid action cost: {0}")]
    InvalidCost(String),
    #[error("action `{action}` both adds and deletes {atom}")]
    ConflictingEffect { action: String, atom: String },
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
}

impl ParseError {
    pub(crate) fn syntax(pos: sexpr::Pos, message: impl Into<String>) -> Self {
        ParseError::Syntax { line: pos.line, col: pos.col, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Requirement {
    Strips,
    Typing,
    NegativePreconditions,
    ActionCosts,
}

impl Requirement {
    pub fn keyword(self) -> &'static str {
        match self {
            Requirement::Strips => ":strips",
            Requirement::Typing => ":typing",
            Requirement::NegativePreconditions => ":negative-preconditions",
            Requirement::ActionCosts => ":action-costs",
        }
    }

    pub fn from_keyword(kw: &str) -> Option<Self> {
        match kw.to_ascii_lowercase().as_str() {
            ":strips" => Some(Requirement::Strips),
            ":typing" => Some(Requirement::Typing),
            ":negative-preconditions" => Some(Requirement::NegativePreconditions),
            ":action-costs" => Some(Requirement::ActionCosts),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// `?x`, stored without the leading `?`.
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub precondition: Vec<Literal>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
    pub cost: u64,
}

/// A parsed domain file. Types are stored as declared, with `object` as the
/// implicit root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainModel {
    pub name: String,
    pub requirements: Vec<Requirement>,
    pub types: Vec<TypeDecl>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateSchema>,
    pub action_schemas: Vec<ActionSchema>,
}

impl DomainModel {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn has_requirement(&self, r: Requirement) -> bool {
        self.requirements.contains(&r)
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.types.iter().any(|t| t.name == ty)
    }

    /// Whether `ty` equals `ancestor` or descends from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut current = ty;
        // bounded walk; cycles are rejected at parse time
        for _ in 0..=self.types.len() {
            if current == ancestor {
                return true;
            }
            match self.types.iter().find(|t| t.name == current) {
                Some(t) => current = &t.parent,
                None => return false,
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        GroundAtom { predicate: predicate.into(), args: args.into_iter().map(Into::into).collect() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<GroundAtom>,
    pub goal: Vec<GroundAtom>,
}

fn write_typed_list(f: &mut fmt::Formatter<'_>, items: &[TypedName], typing: bool) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        f.write_str(&item.name)?;
        if typing {
            write!(f, " - {}", item.ty)?;
        }
    }
    Ok(())
}

fn write_param_list(f: &mut fmt::Formatter<'_>, items: &[TypedName], typing: bool) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "?{}", item.name)?;
        if typing {
            write!(f, " - {}", item.ty)?;
        }
    }
    Ok(())
}

impl fmt::Display for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let typing = self.has_requirement(Requirement::Typing);
        let costs = self.has_requirement(Requirement::ActionCosts);
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            f.write_str("  (:requirements")?;
            for r in &self.requirements {
                write!(f, " {}", r.keyword())?;
            }
            f.write_str(")\n")?;
        }
        if typing && !self.types.is_empty() {
            f.write_str("  (:types")?;
            for t in &self.types {
                write!(f, " {} - {}", t.name, t.parent)?;
            }
            f.write_str(")\n")?;
        }
        if !self.constants.is_empty() {
            f.write_str("  (:constants ")?;
            write_typed_list(f, &self.constants, typing)?;
            f.write_str(")\n")?;
        }
        f.write_str("  (:predicates")?;
        for p in &self.predicates {
            write!(f, " ({}", p.name)?;
            if !p.params.is_empty() {
                f.write_str(" ")?;
                write_param_list(f, &p.params, typing)?;
            }
            f.write_str(")")?;
        }
        f.write_str(")\n")?;
        if costs {
            f.write_str("  (:functions (total-cost) - number)\n")?;
        }
        for a in &self.action_schemas {
            writeln!(f, "  (:action {}", a.name)?;
            f.write_str("    :parameters (")?;
            write_param_list(f, &a.params, typing)?;
            f.write_str(")\n    :precondition (and")?;
            for l in &a.precondition {
                write!(f, " {l}")?;
            }
            f.write_str(")\n    :effect (and")?;
            for atom in &a.add {
                write!(f, " {atom}")?;
            }
            for atom in &a.del {
                write!(f, " (not {atom})")?;
            }
            if costs {
                write!(f, " (increase (total-cost) {})", a.cost)?;
            }
            f.write_str("))\n")?;
        }
        f.write_str(")\n")
    }
}

impl fmt::Display for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        if !self.objects.is_empty() {
            f.write_str("  (:objects ")?;
            write_typed_list(f, &self.objects, true)?;
            f.write_str(")\n")?;
        }
        f.write_str("  (:init")?;
        for a in &self.init {
            write!(f, " {a}")?;
        }
        f.write_str(")\n  (:goal (and")?;
        for a in &self.goal {
            write!(f, " {a}")?;
        }
        f.write_str(")))\n")
    }
}
