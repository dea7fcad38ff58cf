//! `explicable pipeline`: featurize, grid search, train, explicate and eval
//! driven by one TOML config. Relative paths resolve against the config's
//! directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use explicable::dataset::DatasetOptions;
use explicable::distances::{CompositeKind, DistanceConfig, LinkMode};
use explicable::planfile::format_plan;
use explicable::regression::{read_samples_csv, write_samples_csv, GridSpec, ModelKind};
use serde::Deserialize;

use crate::commands::{
    anytime_csv, default_grid, eval_csv, evaluate_all, expand_problem_paths, featurize_problems, format_solution,
    load_epp, load_rules, train_with_grid, EvalSettings,
};
use crate::manifest::Run;
use crate::{GlobalArgs, ModelsArgs, EXIT_FAILURE, EXIT_OK};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub robot_domain: PathBuf,
    pub human_domain: PathBuf,
    pub mapping: Option<PathBuf>,
    /// Scores plans for training (unless `training_csv` is given) and for eval.
    pub rules: Option<PathBuf>,
    #[serde(default)]
    pub train_problems: Vec<PathBuf>,
    /// Pre-scored samples used instead of featurizing `train_problems`.
    pub training_csv: Option<PathBuf>,
    pub test_problems: Vec<PathBuf>,
    pub grid: Option<PathBuf>,
    #[serde(default = "default_kind")]
    pub kind: ModelKind,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub seed: Option<u64>,
    #[serde(default = "default_slack")]
    pub cost_slack: u64,
    #[serde(default = "default_k_expected")]
    pub k_expected: usize,
    #[serde(default = "default_per_problem")]
    pub plans_per_problem: usize,
    #[serde(default)]
    pub link_mode: LinkMode,
    #[serde(default)]
    pub composite: CompositeKind,
    pub budget: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

fn default_kind() -> ModelKind {
    ModelKind::Forest
}
fn default_folds() -> usize {
    5
}
fn default_slack() -> u64 {
    2
}
fn default_k_expected() -> usize {
    explicable::search::DEFAULT_K_EXPECTED
}
fn default_per_problem() -> usize {
    40
}

impl PipelineConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut c: PipelineConfig = toml::from_str(text).context("invalid pipeline config")?;
        let abs = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        abs(&mut c.robot_domain);
        abs(&mut c.human_domain);
        for p in [&mut c.mapping, &mut c.rules, &mut c.training_csv, &mut c.grid, &mut c.output_dir].into_iter().flatten() {
            abs(p);
        }
        c.train_problems.iter_mut().for_each(abs);
        c.test_problems.iter_mut().for_each(abs);
        c.check()?;
        Ok(c)
    }

    fn check(&self) -> Result<()> {
        if self.rules.is_none() {
            bail!("config has no `rules`: eval needs a rule file to score plans");
        }
        if self.training_csv.is_none() && self.train_problems.is_empty() {
            bail!("config has no score source for training: give `training_csv` or `train_problems`");
        }
        if self.test_problems.is_empty() {
            bail!("config has no `test_problems`");
        }
        Ok(())
    }

    fn models(&self) -> ModelsArgs {
        ModelsArgs { robot: self.robot_domain.clone(), human: self.human_domain.clone(), mapping: self.mapping.clone() }
    }

    fn distance(&self) -> DistanceConfig {
        DistanceConfig { link_mode: self.link_mode, composite: self.composite }
    }
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.with_context(|| format!("pipeline stage `{name}` failed"))
}

pub fn cmd_pipeline(g: &GlobalArgs, config: &Path, out_dir: Option<&Path>) -> Result<u8> {
    let base = config.parent().unwrap_or(Path::new("")).to_path_buf();
    let text = std::fs::read_to_string(config).with_context(|| format!("cannot read {}", config.display()))?;
    let cfg = stage("config", PipelineConfig::parse(&text, &base))?;
    let seed = cfg.seed.unwrap_or(g.seed);
    let budget = cfg.budget.unwrap_or(g.budget);
    let out = match (out_dir, &cfg.output_dir) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(d)) => d.clone(),
        (None, None) => bail!("no output directory: set `output_dir` or pass --out-dir"),
    };
    let mut run = Run::new("pipeline", seed, budget);
    run.read(config)?;
    let models = cfg.models();
    let log = |m: String| {
        if !g.quiet {
            eprintln!("{m}");
        }
    };

    let samples = stage("featurize", (|| {
        if let Some(csv) = &cfg.training_csv {
            return read_samples_csv(run.read(csv)?.as_bytes()).with_context(|| format!("in {}", csv.display()));
        }
        let rules = load_rules(&mut run, cfg.rules.as_ref().expect("checked"))?;
        let problems = expand_problem_paths(&cfg.train_problems)?;
        let options = DatasetOptions {
            cost_slack: cfg.cost_slack,
            per_problem: cfg.plans_per_problem,
            k_expected: cfg.k_expected,
            distance: cfg.distance(),
            seed,
            ..Default::default()
        };
        featurize_problems(&mut run, &models, &rules, &problems, &options)
    })())?;
    run.write(&out.join("training.csv"), &write_samples_csv(&samples))?;
    log(format!("featurize: {} samples", samples.len()));

    let trained = stage("grid-search", (|| {
        let grid = match &cfg.grid {
            Some(p) => GridSpec::from_toml(&run.read(p)?).with_context(|| format!("in {}", p.display()))?.expand(cfg.kind)?,
            None => default_grid(cfg.kind),
        };
        train_with_grid(&samples, &grid, cfg.folds, seed)
    })())?;
    run.write(&out.join("grid-report.txt"), &trained.report.to_table())?;
    run.write(&out.join("grid-report.json"), &format!("{}\n", serde_json::to_string_pretty(&trained.report)?))?;
    run.write(&out.join("model.json"), &trained.file.to_json())?;
    log(format!("train: {}", trained.report.best().params));

    let settings = EvalSettings { cost_slack: cfg.cost_slack, k_expected: cfg.k_expected, budget, distance: cfg.distance() };
    let (problems, rows) = stage("explicate", (|| {
        let rules = load_rules(&mut run, cfg.rules.as_ref().expect("checked"))?;
        let problems = expand_problem_paths(&cfg.test_problems)?;
        let rows = evaluate_all(&mut run, &models, &trained.file.model, &rules, &problems, &settings)?;
        Ok((problems, rows))
    })())?;
    for (i, (path, row)) in problems.iter().zip(&rows).enumerate() {
        let Some(stream) = &row.stream else { continue };
        let name = format!("{:02}-{}", i + 1, row.problem);
        let epp = load_epp(&mut run, &models, path)?;
        let plans: String = stream.solutions.iter().map(|s| format_solution(&epp.robot, s.index, &s.plan, s.score)).collect();
        run.write(&out.join("explicate").join(format!("{name}.plans")), &plans)?;
        run.write(&out.join("explicate").join(format!("{name}.anytime.csv")), &anytime_csv(stream))?;
        if let Some(best) = &row.best_plan {
            run.write(&out.join("explicate").join(format!("{name}.best.plan")), &format_plan(&epp.robot, best))?;
        }
    }

    run.write(&out.join("eval.csv"), &eval_csv(&rows))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    log(format!("eval: {} problems, {failed} failed", rows.len()));
    run.finish(&out.join("run-manifest.json"))?;
    if failed > 0 {
        eprintln!("pipeline stage `eval`: {failed} of {} problems failed", rows.len());
        return Ok(EXIT_FAILURE);
    }
    Ok(EXIT_OK)
}
