//! Rule-based plan scores: each action is labelled explicable or not by a
//! small rule file, and a plan scores the fraction of explicable actions.
//!
//! Rule file lines (patterns match ground action names, `*` matches any
//! run of characters):
//!
//! ```text
//! explicable   PATTERN          # allowed anywhere
//! inexplicable PATTERN          # never explicable
//! before SUBJECT OTHER          # SUBJECT is inexplicable once an OTHER has occurred
//! after  SUBJECT OTHER          # SUBJECT is inexplicable unless an OTHER occurred earlier
//! ```
//!
//! An action must match the subject of at least one rule; it is explicable
//! when none of the rules matching it flags it.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoringError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("no rule covers action `{0}`")]
    UncoveredAction(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    Explicable(String),
    Inexplicable(String),
    Before { subject: String, other: String },
    After { subject: String, other: String },
}

impl Rule {
    fn subject(&self) -> &str {
        match self {
            Rule::Explicable(s) | Rule::Inexplicable(s) => s,
            Rule::Before { subject, .. } | Rule::After { subject, .. } => subject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

/// `*` matches any (possibly empty) run of characters.
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let (p, n): (Vec<char>, Vec<char>) = (pattern.chars().collect(), name.chars().collect());
    let (mut pi, mut ni) = (0, 0);
    let mut star: Option<(usize, usize)> = None;
    while ni < n.len() {
        if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ni));
            pi += 1;
        } else if pi < p.len() && p[pi] == n[ni] {
            pi += 1;
            ni += 1;
        } else if let Some((sp, sn)) = star {
            pi = sp + 1;
            ni = sn + 1;
            star = Some((sp, sn + 1));
        } else {
            return false;
        }
    }
    p[pi..].iter().all(|&c| c == '*')
}

impl RuleSet {
    pub fn parse(text: &str) -> Result<Self, ScoringError> {
        let mut rules = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let rule = match words.as_slice() {
                ["explicable", p] => Rule::Explicable(p.to_string()),
                ["inexplicable", p] => Rule::Inexplicable(p.to_string()),
                ["before", s, o] => Rule::Before { subject: s.to_string(), other: o.to_string() },
                ["after", s, o] => Rule::After { subject: s.to_string(), other: o.to_string() },
                _ => {
                    return Err(ScoringError::Syntax {
                        line: i + 1,
                        message: format!("cannot read rule `{line}`"),
                    })
                }
            };
            rules.push(rule);
        }
        Ok(RuleSet { rules })
    }

    /// 0/1 label per action, in plan order.
    pub fn labels<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<bool>, ScoringError> {
        names
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let name = name.as_ref();
                let earlier = &names[..k];
                let seen = |pat: &str| earlier.iter().any(|e| glob_match(pat, e.as_ref()));
                let mut covered = false;
                let mut ok = true;
                for rule in self.rules.iter().filter(|r| glob_match(r.subject(), name)) {
                    covered = true;
                    ok &= match rule {
                        Rule::Explicable(_) => true,
                        Rule::Inexplicable(_) => false,
                        Rule::Before { other, .. } => !seen(other),
                        Rule::After { other, .. } => seen(other),
                    };
                }
                if covered {
                    Ok(ok)
                } else {
                    Err(ScoringError::UncoveredAction(name.to_string()))
                }
            })
            .collect()
    }

    /// Explicable actions over plan length; an empty plan scores 1.
    pub fn score<S: AsRef<str>>(&self, names: &[S]) -> Result<f64, ScoringError> {
        let labels = self.labels(names)?;
        if labels.is_empty() {
            return Ok(1.0);
        }
        Ok(labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64)
    }
}

/// Rule-based score of a plan given by its ground action names.
pub fn plan_score_synthetic<S: AsRef<str>>(names: &[S], rules: &RuleSet) -> Result<f64, ScoringError> {
    rules.score(names)
}
