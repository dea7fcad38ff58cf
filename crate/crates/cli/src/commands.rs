use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use explicable::dataset::{rule_labeled_samples, DatasetOptions};
use explicable::distances::{composite_distance, plan_distances, DistanceConfig};
use explicable::epp::ExplicablePlanningProblem;
use explicable::expected::generate_expected_set_with;
use explicable::ground::ground;
use explicable::mapping::ActionMapping;
use explicable::pddl::{parse_domain, parse_problem};
use explicable::planfile::{format_plan, read_plan};
use explicable::planner::{optimal_plan_with, PlanError, PlannerOptions};
use explicable::regression::{
    grid_search, read_samples_csv, train, write_samples_csv, GridSearchReport, GridSpec, Hyperparameters,
    LabeledSample, ModelFile, ModelKind, RegressionModel, TrainingMeta,
};
use explicable::scoring::RuleSet;
use explicable::search::{reconciliation_search, SearchError, SearchOptions, SolutionStream};
use explicable::task::{GroundTask, Plan};
use rayon::prelude::*;

use crate::manifest::{manifest_beside, Run};
use crate::{Cli, Command, GlobalArgs, ModelsArgs, EXIT_FAILURE, EXIT_NO_SOLUTION, EXIT_OK, EXIT_RESOURCE_LIMIT};

pub fn dispatch(cli: &Cli) -> Result<u8> {
    let g = &cli.global;
    match &cli.command {
        Command::Plan { domain, problem, out } => cmd_plan(g, domain, problem, out.as_deref()),
        Command::Validate { domain, problem, plan } => cmd_validate(g, domain, problem, plan),
        Command::Distances { models, problem, plan_r, plan_h, distance } => {
            cmd_distances(g, models, problem, plan_r, plan_h, &distance.config())
        }
        Command::GenExpected { domain, problem, k, out } => cmd_gen_expected(g, domain, problem, *k, out),
        Command::Featurize { models, rules, problems, cost_slack, plans_per_problem, k_expected, distance, out } => {
            let options = DatasetOptions {
                cost_slack: *cost_slack,
                per_problem: *plans_per_problem,
                k_expected: *k_expected,
                distance: distance.config(),
                seed: g.seed,
                ..Default::default()
            };
            cmd_featurize(g, models, rules, problems, &options, out)
        }
        Command::Train { csv, kind, grid, folds, out } => cmd_train(g, csv, *kind, grid.as_deref(), *folds, out),
        Command::Explicate { models, problem, model, max_cost, cost_slack, k_expected, anytime_csv, distance } => {
            let bound = match max_cost {
                Some(c) => CostBound::Absolute(*c),
                None => CostBound::Slack(*cost_slack),
            };
            cmd_explicate(g, models, problem, model, bound, *k_expected, anytime_csv.as_deref(), &distance.config())
        }
        Command::Score { rules, domain, problem, plan } => cmd_score(g, rules, domain, problem, plan),
        Command::Eval { models, model, rules, problems, cost_slack, k_expected, distance, out } => {
            let settings =
                EvalSettings { cost_slack: *cost_slack, k_expected: *k_expected, budget: g.budget, distance: distance.config() };
            cmd_eval(g, models, model, rules, problems, &settings, out.as_deref())
        }
        Command::Pipeline { config, out_dir } => crate::pipeline::cmd_pipeline(g, config, out_dir.as_deref()),
    }
}

fn note(g: &GlobalArgs, msg: impl AsRef<str>) {
    if !g.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

pub fn load_task(run: &mut Run, domain: &Path, problem: &Path) -> Result<GroundTask> {
    let d = parse_domain(&run.read(domain)?).with_context(|| format!("in {}", domain.display()))?;
    let p = parse_problem(&run.read(problem)?, &d).with_context(|| format!("in {}", problem.display()))?;
    ground(&d, &p).with_context(|| format!("grounding {}", problem.display()))
}

pub fn load_mapping(run: &mut Run, path: Option<&Path>) -> Result<ActionMapping> {
    match path {
        Some(p) => ActionMapping::parse_tsv(&run.read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(ActionMapping::new()),
    }
}

pub fn load_epp(run: &mut Run, models: &ModelsArgs, problem: &Path) -> Result<ExplicablePlanningProblem> {
    let mapping = load_mapping(run, models.mapping.as_deref())?;
    let robot = load_task(run, &models.robot, problem).context("robot model")?;
    let human = load_task(run, &models.human, problem).context("human model")?;
    ExplicablePlanningProblem::new(robot, human, mapping).with_context(|| format!("in {}", problem.display()))
}

pub fn load_model(run: &mut Run, path: &Path) -> Result<RegressionModel> {
    Ok(ModelFile::from_json(&run.read(path)?).with_context(|| format!("in {}", path.display()))?.model)
}

pub fn load_rules(run: &mut Run, path: &Path) -> Result<RuleSet> {
    RuleSet::parse(&run.read(path)?).with_context(|| format!("in {}", path.display()))
}

/// Expands directories to the `.pddl` files inside them, sorted by name.
pub fn expand_problem_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "pddl"))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!("no problem files found");
    }
    Ok(out)
}

fn emit(run: &mut Run, out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => run.write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn finish_beside(run: Run, out: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        run.finish(&manifest_beside(path))?;
    }
    Ok(())
}

pub fn cmd_plan(g: &GlobalArgs, domain: &Path, problem: &Path, out: Option<&Path>) -> Result<u8> {
    let mut run = Run::new("plan", g.seed, g.budget);
    let task = load_task(&mut run, domain, problem)?;
    match optimal_plan_with(&task, &PlannerOptions { max_expansions: g.budget, ..Default::default() }) {
        Ok(r) => {
            note(g, format!("optimal cost {} after {} expansions", r.plan.cost, r.expanded));
            emit(&mut run, out, &format_plan(&task, &r.plan))?;
            finish_beside(run, out)?;
            Ok(EXIT_OK)
        }
        Err(PlanError::Unsolvable) => {
            eprintln!("{}: the task has no solution", problem.display());
            Ok(EXIT_NO_SOLUTION)
        }
        Err(e @ PlanError::ResourceLimit { .. }) => {
            eprintln!("{}: {e}", problem.display());
            Ok(EXIT_RESOURCE_LIMIT)
        }
    }
}

pub fn cmd_validate(g: &GlobalArgs, domain: &Path, problem: &Path, plan: &Path) -> Result<u8> {
    let mut run = Run::new("validate", g.seed, g.budget);
    let task = load_task(&mut run, domain, problem)?;
    let text = run.read(plan)?;
    let checked = read_plan(&task, &text)
        .map_err(anyhow::Error::from)
        .and_then(|p| task.validate_plan(&p).map(|_| p).map_err(anyhow::Error::from));
    match checked {
        Ok(p) => {
            println!("valid: {} actions, cost {}", p.len(), p.cost);
            Ok(EXIT_OK)
        }
        Err(e) => {
            eprintln!("{}: invalid plan: {e}", plan.display());
            Ok(EXIT_NO_SOLUTION)
        }
    }
}

pub fn cmd_distances(
    g: &GlobalArgs,
    models: &ModelsArgs,
    problem: &Path,
    plan_r: &Path,
    plan_h: &Path,
    config: &DistanceConfig,
) -> Result<u8> {
    let mut run = Run::new("distances", g.seed, g.budget);
    let epp = load_epp(&mut run, models, problem)?;
    let pr = read_plan(&epp.robot, &run.read(plan_r)?).with_context(|| format!("in {}", plan_r.display()))?;
    let ph = read_plan(&epp.human, &run.read(plan_h)?).with_context(|| format!("in {}", plan_h.display()))?;
    let dv = plan_distances(&epp.robot, &pr, &epp.human, &ph, &epp.mapping, config.link_mode)?;
    println!("plan_r,plan_h,delta_a,delta_c,delta_s,composite");
    println!(
        "{},{},{},{},{},{}",
        plan_r.display(),
        plan_h.display(),
        dv.action,
        dv.causal,
        dv.state,
        composite_distance(&dv, config.composite)
    );
    Ok(EXIT_OK)
}

pub fn cmd_gen_expected(g: &GlobalArgs, domain: &Path, problem: &Path, k: usize, out: &Path) -> Result<u8> {
    let mut run = Run::new("gen-expected", g.seed, g.budget);
    let task = load_task(&mut run, domain, problem)?;
    let set = match generate_expected_set_with(&task, k, g.budget) {
        Ok(s) => s,
        Err(explicable::expected::ExpectedError::Plan(PlanError::Unsolvable)) => {
            eprintln!("{}: the task has no solution", problem.display());
            return Ok(EXIT_NO_SOLUTION);
        }
        Err(explicable::expected::ExpectedError::Plan(e @ PlanError::ResourceLimit { .. })) => {
            eprintln!("{}: {e}", problem.display());
            return Ok(EXIT_RESOURCE_LIMIT);
        }
        Err(e) => return Err(e.into()),
    };
    let mut files = Vec::new();
    for (i, p) in set.plans.iter().enumerate() {
        let name = format!("plan-{:03}.txt", i + 1);
        run.write(&out.join(&name), &format_plan(&task, p))?;
        files.push(name);
    }
    let summary = serde_json::json!({
        "optimal_cost": set.optimal_cost,
        "plans": files,
        "truncated": set.meta.truncated,
        "expanded": set.meta.expanded,
    });
    run.write(&out.join("expected-set.json"), &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
    note(g, format!("{} optimal plans of cost {}{}", set.len(), set.optimal_cost, if set.meta.truncated { " (truncated)" } else { "" }));
    run.finish(&out.join("run-manifest.json"))?;
    Ok(EXIT_OK)
}

/// Rule-labelled samples from every problem, in problem order.
pub fn featurize_problems(
    run: &mut Run,
    models: &ModelsArgs,
    rules: &RuleSet,
    problems: &[PathBuf],
    options: &DatasetOptions,
) -> Result<Vec<LabeledSample>> {
    let mut samples = Vec::new();
    for path in problems {
        let epp = load_epp(run, models, path)?;
        let name = epp.robot.name().to_string();
        let batch =
            rule_labeled_samples(&name, &epp, rules, options).with_context(|| format!("featurizing {}", path.display()))?;
        samples.extend(batch);
    }
    Ok(samples)
}

pub fn cmd_featurize(
    g: &GlobalArgs,
    models: &ModelsArgs,
    rules: &Path,
    problems: &[PathBuf],
    options: &DatasetOptions,
    out: &Path,
) -> Result<u8> {
    let mut run = Run::new("featurize", g.seed, g.budget);
    let rules = load_rules(&mut run, rules)?;
    let problems = expand_problem_paths(problems)?;
    let samples = featurize_problems(&mut run, models, &rules, &problems, options)?;
    note(g, format!("{} samples from {} problems", samples.len(), problems.len()));
    run.write(out, &write_samples_csv(&samples))?;
    run.finish(&manifest_beside(out))?;
    Ok(EXIT_OK)
}

/// Single setting used when no grid is given.
pub fn default_grid(kind: ModelKind) -> Vec<Hyperparameters> {
    use explicable::regression::{ForestParams, TreeParams};
    vec![match kind {
        ModelKind::Ridge => Hyperparameters::Ridge { lambda: 1e-3 },
        ModelKind::Tree => Hyperparameters::Tree(TreeParams { max_depth: Some(6), min_split: 2 }),
        ModelKind::Forest => Hyperparameters::Forest(ForestParams::default()),
    }]
}

pub struct Trained {
    pub report: GridSearchReport,
    pub file: ModelFile,
}

/// Grid search, then a final fit of the winning setting on all samples.
pub fn train_with_grid(samples: &[LabeledSample], grid: &[Hyperparameters], folds: usize, seed: u64) -> Result<Trained> {
    let report = grid_search(samples, grid, folds, seed)?;
    let best = report.best();
    let model = train(samples, &best.params, seed)?;
    let meta = TrainingMeta { samples: samples.len(), folds, seed, cv_r2: best.mean_r2 };
    Ok(Trained { file: ModelFile::new(model, Some(meta)), report })
}

pub fn cmd_train(g: &GlobalArgs, csv: &Path, kind: ModelKind, grid: Option<&Path>, folds: usize, out: &Path) -> Result<u8> {
    let mut run = Run::new("train", g.seed, g.budget);
    let samples = read_samples_csv(run.read(csv)?.as_bytes()).with_context(|| format!("in {}", csv.display()))?;
    let grid = match grid {
        Some(p) => GridSpec::from_toml(&run.read(p)?).with_context(|| format!("in {}", p.display()))?.expand(kind)?,
        None => default_grid(kind),
    };
    let trained = train_with_grid(&samples, &grid, folds, g.seed)?;
    print!("{}", trained.report.to_table());
    run.write(out, &trained.file.to_json())?;
    let mut report_path = out.as_os_str().to_owned();
    report_path.push(".grid.json");
    run.write(Path::new(&report_path), &format!("{}\n", serde_json::to_string_pretty(&trained.report)?))?;
    run.finish(&manifest_beside(out))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy)]
pub enum CostBound {
    Absolute(u64),
    /// Robot optimum plus this.
    Slack(u64),
}

/// Plan file text for one emitted solution.
pub fn format_solution(task: &GroundTask, index: usize, plan: &Plan, score: f64) -> String {
    format!("; solution {}\n{}; score = {}\n", index + 1, format_plan(task, plan), score)
}

pub fn anytime_csv(stream: &SolutionStream) -> String {
    let mut out = String::from("solution_index,cost,predicted_score,best_so_far\n");
    for (s, best) in stream.solutions.iter().zip(stream.best_so_far()) {
        let _ = writeln!(out, "{},{},{},{}", s.index + 1, s.cost, s.score, best);
    }
    out
}

pub enum Explicated {
    Done(SolutionStream),
    Partial(SolutionStream),
    NoSolution,
}

/// Runs the search, passing every solution to `on_solution` as found.
pub fn explicate(
    epp: &ExplicablePlanningProblem,
    model: &RegressionModel,
    max_cost: u64,
    options: &SearchOptions,
    on_solution: &mut dyn FnMut(&explicable::search::Solution),
) -> Result<Explicated> {
    match reconciliation_search(epp, max_cost, model, options, on_solution) {
        Ok(stream) => Ok(Explicated::Done(stream)),
        Err(SearchError::ResourceLimit { stream }) => Ok(Explicated::Partial(stream)),
        Err(SearchError::NoSolutionWithinBound { .. }) => Ok(Explicated::NoSolution),
        Err(e) => Err(e.into()),
    }
}

pub fn resolve_bound(epp: &ExplicablePlanningProblem, bound: CostBound, budget: usize) -> Result<std::result::Result<u64, u8>> {
    Ok(match bound {
        CostBound::Absolute(c) => Ok(c),
        CostBound::Slack(s) => match optimal_plan_with(&epp.robot, &PlannerOptions { max_expansions: budget, ..Default::default() }) {
            Ok(r) => Ok(r.plan.cost + s),
            Err(PlanError::Unsolvable) => Err(EXIT_NO_SOLUTION),
            Err(PlanError::ResourceLimit { .. }) => Err(EXIT_RESOURCE_LIMIT),
        },
    })
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_explicate(
    g: &GlobalArgs,
    models: &ModelsArgs,
    problem: &Path,
    model: &Path,
    bound: CostBound,
    k_expected: usize,
    anytime: Option<&Path>,
    config: &DistanceConfig,
) -> Result<u8> {
    let mut run = Run::new("explicate", g.seed, g.budget);
    let epp = load_epp(&mut run, models, problem)?;
    let model = load_model(&mut run, model)?;
    let max_cost = match resolve_bound(&epp, bound, g.budget)? {
        Ok(c) => c,
        Err(code) => {
            if code == EXIT_RESOURCE_LIMIT {
                eprintln!("{}: budget exhausted while finding the robot optimum", problem.display());
            } else {
                eprintln!("{}: the robot task has no solution", problem.display());
            }
            return Ok(code);
        }
    };
    let options = SearchOptions { budget: g.budget, k_expected, distance: *config };
    let stdout = std::io::stdout();
    let mut on_solution = |s: &explicable::search::Solution| {
        let mut lock = stdout.lock();
        let _ = lock.write_all(format_solution(&epp.robot, s.index, &s.plan, s.score).as_bytes());
        let _ = lock.flush();
    };
    let (stream, code) = match explicate(&epp, &model, max_cost, &options, &mut on_solution)? {
        Explicated::Done(s) => (s, EXIT_OK),
        Explicated::Partial(s) => {
            eprintln!("budget of {} expansions exhausted; the stream is incomplete", g.budget);
            (s, EXIT_RESOURCE_LIMIT)
        }
        Explicated::NoSolution => {
            eprintln!("{}: no plan with cost at most {max_cost}", problem.display());
            return Ok(EXIT_NO_SOLUTION);
        }
    };
    if let Some(best) = stream.best() {
        note(g, format!("{} solutions; best score {} at solution {} (cost {})", stream.solutions.len(), best.score, best.index + 1, best.cost));
    }
    if let Some(path) = anytime {
        run.write(path, &anytime_csv(&stream))?;
        run.finish(&manifest_beside(path))?;
    }
    Ok(code)
}

pub fn cmd_score(g: &GlobalArgs, rules: &Path, domain: &Path, problem: &Path, plan: &Path) -> Result<u8> {
    let mut run = Run::new("score", g.seed, g.budget);
    let rules = load_rules(&mut run, rules)?;
    let task = load_task(&mut run, domain, problem)?;
    let plan = read_plan(&task, &run.read(plan)?).with_context(|| format!("in {}", plan.display()))?;
    let names: Vec<&str> = plan.names(&task).collect();
    let labels = rules.labels(&names)?;
    for (n, l) in names.iter().zip(&labels) {
        println!("{} {n}", u8::from(*l));
    }
    println!("score = {}", rules.score(&names)?);
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy)]
pub struct EvalSettings {
    pub cost_slack: u64,
    pub k_expected: usize,
    pub budget: usize,
    pub distance: DistanceConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub problem: String,
    pub opt_cost: Option<u64>,
    pub expl_cost: Option<u64>,
    pub opt_score: Option<f64>,
    pub expl_score: Option<f64>,
    pub error: Option<String>,
    /// Emitted solutions, for the per-problem stream files.
    pub stream: Option<SolutionStream>,
    pub best_plan: Option<Plan>,
}

/// Optimal plan versus the best plan of the explicable search, both scored
/// by the rules.
pub fn evaluate_problem(
    epp: &ExplicablePlanningProblem,
    model: &RegressionModel,
    rules: &RuleSet,
    settings: &EvalSettings,
) -> EvalRow {
    let mut row = EvalRow {
        problem: epp.robot.name().to_string(),
        opt_cost: None,
        expl_cost: None,
        opt_score: None,
        expl_score: None,
        error: None,
        stream: None,
        best_plan: None,
    };
    let score = |p: &Plan| rules.score(&p.names(&epp.robot).collect::<Vec<_>>());
    let opt = match optimal_plan_with(&epp.robot, &PlannerOptions { max_expansions: settings.budget, ..Default::default() }) {
        Ok(r) => r.plan,
        Err(e) => {
            row.error = Some(format!("optimal plan: {e}"));
            return row;
        }
    };
    row.opt_cost = Some(opt.cost);
    match score(&opt) {
        Ok(s) => row.opt_score = Some(s),
        Err(e) => {
            row.error = Some(format!("scoring: {e}"));
            return row;
        }
    }
    let options = SearchOptions { budget: settings.budget, k_expected: settings.k_expected, distance: settings.distance };
    let stream = match explicate(epp, model, opt.cost + settings.cost_slack, &options, &mut |_| {}) {
        Ok(Explicated::Done(s)) => s,
        Ok(Explicated::Partial(s)) => {
            row.error = Some("expansion budget exhausted".into());
            s
        }
        Ok(Explicated::NoSolution) => {
            row.error = Some("no plan within the bound".into());
            return row;
        }
        Err(e) => {
            row.error = Some(format!("search: {e:#}"));
            return row;
        }
    };
    if let Some(best) = stream.best() {
        row.expl_cost = Some(best.cost);
        row.best_plan = Some(best.plan.clone());
        match score(&best.plan) {
            Ok(s) => row.expl_score = Some(s),
            Err(e) => row.error = Some(format!("scoring: {e}")),
        }
    }
    row.stream = Some(stream);
    row
}

pub const EVAL_HEADER: &str = "problem,opt_cost,expl_cost,opt_score,expl_score,error";
pub const EVAL_NOTE: &str = "# opt_score and expl_score are rule-based synthetic scores, not human ratings";

pub fn eval_csv(rows: &[EvalRow]) -> String {
    let cell = |v: Option<String>| v.unwrap_or_default();
    let mut out = format!("{EVAL_NOTE}\n{EVAL_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.problem,
            cell(r.opt_cost.map(|v| v.to_string())),
            cell(r.expl_cost.map(|v| v.to_string())),
            cell(r.opt_score.map(|v| v.to_string())),
            cell(r.expl_score.map(|v| v.to_string())),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        );
    }
    out
}

/// Evaluates every problem, in parallel, returning rows in input order.
pub fn evaluate_all(
    run: &mut Run,
    models: &ModelsArgs,
    model: &RegressionModel,
    rules: &RuleSet,
    problems: &[PathBuf],
    settings: &EvalSettings,
) -> Result<Vec<EvalRow>> {
    let epps = problems.iter().map(|p| load_epp(run, models, p)).collect::<Result<Vec<_>>>()?;
    Ok(epps.par_iter().map(|epp| evaluate_problem(epp, model, rules, settings)).collect())
}

pub fn cmd_eval(
    g: &GlobalArgs,
    models: &ModelsArgs,
    model: &Path,
    rules: &Path,
    problems: &[PathBuf],
    settings: &EvalSettings,
    out: Option<&Path>,
) -> Result<u8> {
    let mut run = Run::new("eval", g.seed, g.budget);
    let model = load_model(&mut run, model)?;
    let rules = load_rules(&mut run, rules)?;
    let problems = expand_problem_paths(problems)?;
    let rows = evaluate_all(&mut run, models, &model, &rules, &problems, settings)?;
    emit(&mut run, out, &eval_csv(&rows))?;
    finish_beside(run, out)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} problems failed", rows.len());
        return Ok(EXIT_FAILURE);
    }
    Ok(EXIT_OK)
}
