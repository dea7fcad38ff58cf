//! Name mapping between robot-model and human-model ground actions.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::task::{GroundTask, Plan};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MappingError {
    #[error("line {line}: expected `robotName<TAB>humanName`")]
    Syntax { line: usize },
    #[error("robot action `{0}` is mapped twice")]
    DuplicateRobotName(String),
    #[error("human action `{0}` is the image of two robot actions")]
    NotInjective(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    RobotToHuman,
    HumanToRobot,
}

/// Partial, injective map from robot ground-action names to human-model
/// ground-action names. Names without an entry pass through unchanged.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionMapping {
    forward: BTreeMap<String, String>,
    backward: BTreeMap<String, String>,
}

impl ActionMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, A, B>(pairs: I) -> Result<Self, MappingError>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let mut m = Self::new();
        for (r, h) in pairs {
            m.insert(r.into(), h.into())?;
        }
        Ok(m)
    }

    /// Every name maps to itself.
    pub fn identity<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        Self::from_pairs(names.into_iter().map(|n| (n, n))).expect("identity is injective")
    }

    pub fn insert(&mut self, robot: String, human: String) -> Result<(), MappingError> {
        if self.forward.contains_key(&robot) {
            return Err(MappingError::DuplicateRobotName(robot));
        }
        if self.backward.contains_key(&human) {
            return Err(MappingError::NotInjective(human));
        }
        self.backward.insert(human.clone(), robot.clone());
        self.forward.insert(robot, human);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn get(&self, name: &str, direction: Direction) -> Option<&str> {
        match direction {
            Direction::RobotToHuman => self.forward.get(name),
            Direction::HumanToRobot => self.backward.get(name),
        }
        .map(String::as_str)
    }

    /// Translated name, or the name itself when unmapped.
    pub fn translate<'a>(&'a self, name: &'a str, direction: Direction) -> &'a str {
        self.get(name, direction).unwrap_or(name)
    }

    /// Parses the two-column `robotName<TAB>humanName` format. Blank lines
    /// and `#` comments are ignored.
    pub fn parse_tsv(text: &str) -> Result<Self, MappingError> {
        let mut m = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                [r, h] if !r.trim().is_empty() && !h.trim().is_empty() => {
                    m.insert(r.trim().to_string(), h.trim().to_string())?
                }
                _ => return Err(MappingError::Syntax { line: i + 1 }),
            }
        }
        Ok(m)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (r, h) in &self.forward {
            let _ = writeln!(out, "{r}\t{h}");
        }
        out
    }
}

/// Plan action names after translation. `passthrough` lists the positions
/// whose names had no mapping entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappedPlan {
    pub names: Vec<String>,
    pub passthrough: Vec<usize>,
}

pub fn map_names<'a>(
    names: impl IntoIterator<Item = &'a str>,
    mapping: &ActionMapping,
    direction: Direction,
) -> MappedPlan {
    let mut out = MappedPlan { names: Vec::new(), passthrough: Vec::new() };
    for (i, n) in names.into_iter().enumerate() {
        match mapping.get(n, direction) {
            Some(m) => out.names.push(m.to_string()),
            None => {
                out.names.push(n.to_string());
                out.passthrough.push(i);
            }
        }
    }
    out
}

pub fn map_plan(task: &GroundTask, plan: &Plan, mapping: &ActionMapping, direction: Direction) -> MappedPlan {
    map_names(plan.names(task), mapping, direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_leaves_names() {
        let m = ActionMapping::identity(["a", "b"]);
        let mp = map_names(["a", "b", "a"], &m, Direction::RobotToHuman);
        assert_eq!(mp.names, vec!["a", "b", "a"]);
        assert!(mp.passthrough.is_empty());
    }

    #[test]
    fn renames_and_flags_passthrough() {
        let m = ActionMapping::parse_tsv("# robot\thuman\nwaitAtStopSign1\twaitAtStopSign\n").unwrap();
        let mp = map_names(["waitAtStopSign1", "cross"], &m, Direction::RobotToHuman);
        assert_eq!(mp.names, vec!["waitAtStopSign", "cross"]);
        assert_eq!(mp.passthrough, vec![1]);
        let back = map_names(["waitAtStopSign"], &m, Direction::HumanToRobot);
        assert_eq!(back.names, vec!["waitAtStopSign1"]);
    }

    #[test]
    fn rejects_non_injective_and_bad_lines() {
        assert_eq!(ActionMapping::parse_tsv("a\tx\nb\tx\n"), Err(MappingError::NotInjective("x".into())));
        assert_eq!(ActionMapping::parse_tsv("a\tx\na\ty\n"), Err(MappingError::DuplicateRobotName("a".into())));
        assert_eq!(ActionMapping::parse_tsv("a x\n"), Err(MappingError::Syntax { line: 1 }));
    }

    #[test]
    fn tsv_round_trip() {
        let m = ActionMapping::from_pairs([("r1", "h1"), ("r2", "h2")]).unwrap();
        assert_eq!(ActionMapping::parse_tsv(&m.to_tsv()).unwrap(), m);
    }
}
