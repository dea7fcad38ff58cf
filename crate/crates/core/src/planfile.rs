//! Plan files: one ground action per line as `(name arg1 arg2)`, `;`
//! comments, and an optional `; cost = N` line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::task::{GroundTask, Plan, TaskError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanFileError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: no ground action {signature}")]
    UnknownAction { line: usize, signature: String },
    #[error("declared cost {declared} differs from computed cost {computed}")]
    CostMismatch { declared: u64, computed: u64 },
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStep {
    pub line: usize,
    pub schema: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlanText {
    pub steps: Vec<PlanStep>,
    pub declared_cost: Option<u64>,
}

fn parse_cost_comment(comment: &str) -> Option<u64> {
    let rest = comment.trim().strip_prefix("cost")?.trim_start().strip_prefix('=')?;
    rest.split_whitespace().next()?.parse().ok()
}

pub fn parse_plan_text(text: &str) -> Result<PlanText, PlanFileError> {
    let mut out = PlanText::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let (body, comment) = match raw.find(';') {
            Some(p) => (&raw[..p], Some(&raw[p + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment.and_then(parse_cost_comment) {
            out.declared_cost = Some(c);
        }
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        let inner = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .ok_or_else(|| PlanFileError::Syntax { line, message: format!("expected (name args...), found `{body}`") })?;
        let mut parts = inner.split_whitespace();
        let schema = parts
            .next()
            .ok_or_else(|| PlanFileError::Syntax { line, message: "empty action".into() })?
            .to_string();
        out.steps.push(PlanStep { line, schema, args: parts.map(str::to_string).collect() });
    }
    Ok(out)
}

/// Resolves a plan file against `task`. A declared cost must match.
pub fn read_plan(task: &GroundTask, text: &str) -> Result<Plan, PlanFileError> {
    let parsed = parse_plan_text(text)?;
    let actions = parsed
        .steps
        .iter()
        .map(|s| {
            task.find_action(&s.schema, &s.args).map(|a| a.id).ok_or_else(|| PlanFileError::UnknownAction {
                line: s.line,
                signature: format!("({} {})", s.schema, s.args.join(" ")).replace(" )", ")"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let plan = Plan::new(task, actions)?;
    if let Some(declared) = parsed.declared_cost {
        if declared != plan.cost {
            return Err(PlanFileError::CostMismatch { declared, computed: plan.cost });
        }
    }
    Ok(plan)
}

pub fn format_plan(task: &GroundTask, plan: &Plan) -> String {
    let mut out = String::new();
    for &a in &plan.actions {
        out.push_str(&task.actions()[a].signature());
        out.push('\n');
    }
    let _ = writeln!(out, "; cost = {}", plan.cost);
    out
}
