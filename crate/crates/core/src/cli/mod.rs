//! File formats and commands of the `ncsynth` binary.
//!
//! Every command is also callable as a library function, which is what the
//! examples and integration tests use.

mod bench;
pub mod gradcheck;
mod result;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::gen::{self, GenSpec};
use crate::netmodel::{InstanceFile, ProblemInstance};
use crate::objective::{CompiledObjective, ObjectiveSpec, UtilityTemplate};
use crate::optim::{self, random_start, Method, OptimizerReport, DEFAULT_BUDGET};

pub use bench::{bench, BenchOptions, BenchReport, BenchRow, InstanceRecord, RunRecord};
pub use gradcheck::{check_point, GradCheck, GradCheckOptions};
pub use result::{
    choices_of, vars_of, AssignmentFile, Choice, ResultFile, RunEcho, RESULT_VERSION,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Infeasible(_) => 1,
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ncsynth", version, about = "Path and priority synthesis under network-calculus delay bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print per-flow delay bounds at an integral assignment.
    Analyze(AnalyzeArgs),
    /// Run one optimization method and write a result file.
    Optimize(OptimizeArgs),
    /// Generate random instances.
    Generate(GenerateArgs),
    /// Run several methods over a directory of instances.
    Bench(BenchArgs),
    /// Compare reverse-mode gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveChoice {
    Average,
    Utility,
    MaxTail,
}

impl ObjectiveChoice {
    fn name(self) -> &'static str {
        match self {
            ObjectiveChoice::Average => "average",
            ObjectiveChoice::Utility => "utility",
            ObjectiveChoice::MaxTail => "max-tail",
        }
    }
}

/// Objective and penalty flags shared by the commands that build one.
#[derive(Debug, Clone, Args)]
pub struct ObjectiveArgs {
    #[arg(long, value_enum, default_value = "average")]
    pub objective: ObjectiveChoice,
    /// `linear:LO:HI` or `logistic:STEEPNESS[:MIDPOINT]`; the midpoint
    /// defaults to each flow's deadline.
    #[arg(long, default_value = "linear:0:1")]
    pub utility: UtilityTemplate,
    #[arg(long)]
    pub lambda_cap: Option<f64>,
    #[arg(long)]
    pub lambda_deadline: Option<f64>,
    /// Override of the instance's utilization cap.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Worker threads for evaluation; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub tasks: usize,
    /// Leave a flow's other alternatives out of its cross traffic.
    #[arg(long)]
    pub exclude_siblings: bool,
}

impl Default for ObjectiveArgs {
    fn default() -> Self {
        ObjectiveArgs {
            objective: ObjectiveChoice::Average,
            utility: UtilityTemplate::Linear { lo: 0.0, hi: 1.0 },
            lambda_cap: None,
            lambda_deadline: None,
            rho: None,
            tasks: 1,
            exclude_siblings: false,
        }
    }
}

impl ObjectiveArgs {
    pub fn spec(&self, instance: &ProblemInstance) -> Result<ObjectiveSpec, CliError> {
        let mut spec = match self.objective {
            ObjectiveChoice::Average => ObjectiveSpec::average(),
            ObjectiveChoice::MaxTail => ObjectiveSpec::max_tail(),
            ObjectiveChoice::Utility => ObjectiveSpec::utility(
                self.utility
                    .resolve(instance)
                    .map_err(|e| CliError::Input(e.to_string()))?,
            ),
        };
        spec.lambda_cap = self.lambda_cap;
        spec.lambda_deadline = self.lambda_deadline;
        spec.sibling_interference = !self.exclude_siblings;
        Ok(spec)
    }

    pub fn compile(&self, instance: &ProblemInstance) -> Result<CompiledObjective, CliError> {
        CompiledObjective::build(instance, &self.spec(instance)?, self.tasks)
            .map_err(|e| CliError::Internal(e.to_string()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    pub instance: PathBuf,
    /// Document with a `choices` list, such as a result file.
    #[arg(long)]
    pub assignment: Option<PathBuf>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Print the bounds as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    pub instance: PathBuf,
    #[arg(long, default_value = "frank-wolfe", value_parser = parse_method)]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Iterations of Frank-Wolfe, evaluations of the heuristics.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Result file to write.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Print the result file instead of the summary.
    #[arg(long)]
    pub json: bool,
    /// Record wall-clock time in the result file.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Generator parameters as JSON; omitted fields keep their defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Instances to generate, with consecutive seeds.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Instance file, or directory when `--count` exceeds 1.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Print the statistics as JSON rows.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Directory of instance files.
    pub directory: PathBuf,
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "frank-wolfe,sp-hops")]
    pub methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// Enumerate instances with at most this many combinations.
    #[arg(long)]
    pub limit: Option<u128>,
    /// Report with per-instance records, as JSON.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GradcheckArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random admissible points to check.
    #[arg(long, default_value_t = 3)]
    pub points: usize,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| {
        let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("{e}; expected one of {}", names.join(", "))
    })
}

/// Parses and runs a command line, printing to the given streams. Returns
/// the process exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Entry point of the binary.
pub fn run() -> ExitCode {
    let code = run_from(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    ExitCode::from(code)
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), CliError> {
    let text = match command {
        Command::Analyze(a) => cmd_analyze(a)?,
        Command::Optimize(a) => {
            let (text, result) = cmd_optimize(a)?;
            emit(out, &text)?;
            if !result.feasible {
                return Err(CliError::Infeasible(
                    "no feasible assignment found after repair".into(),
                ));
            }
            return Ok(());
        }
        Command::Generate(a) => cmd_generate(a)?,
        Command::Bench(a) => cmd_bench(a)?,
        Command::Gradcheck(a) => cmd_gradcheck(a)?,
    };
    emit(out, &text)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Internal(format!("cannot write output: {e}")))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Reads and validates an instance file, optionally overriding its cap.
pub fn load_instance(path: &Path, rho: Option<f64>) -> Result<ProblemInstance, CliError> {
    let mut file = parse_instance(&read_text(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if let Some(rho) = rho {
        file.options.utilization_cap = rho;
    }
    ProblemInstance::from_file(&file)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn write_instance(file: &InstanceFile) -> String {
    serde_json::to_string_pretty(file).expect("instance files always serialize") + "\n"
}

/// Delay bound of every flow, and of every destination of multicast flows.
pub fn analyze(instance: &ProblemInstance, chosen: &[usize]) -> Result<Vec<Choice>, CliError> {
    let obj = CompiledObjective::build(instance, &ObjectiveSpec::average(), 1)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let x = instance.one_hot(chosen);
    if instance.capacity_excess(&x) > 0.0 {
        return Err(CliError::Infeasible(
            "assignment exceeds the utilization cap".into(),
        ));
    }
    let e = obj
        .evaluate(&x)
        .map_err(|e| CliError::Infeasible(format!("assignment cannot be analyzed: {e}")))?;
    Ok(choices_of(instance, chosen, Some(&e.flow_values)))
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let instance = load_instance(&args.instance, args.rho)?;
    let choices = match &args.assignment {
        Some(p) => {
            let a: AssignmentFile = serde_json::from_str(&read_text(p)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
            a.choices
        }
        None => Vec::new(),
    };
    let chosen = vars_of(&instance, &choices)?;
    let bounds = analyze(&instance, &chosen)?;
    if args.json {
        return to_json(&AssignmentFile { choices: bounds });
    }
    let width = bounds.iter().map(|c| c.flow.len()).max().unwrap_or(4).max(4);
    let mut s = format!("{:<width$}  alternative  priority  delay bound\n", "flow");
    for (c, f) in bounds.iter().zip(instance.flows()) {
        let d = c.delay_bound.unwrap_or(f64::INFINITY);
        let mark = match f.deadline {
            Some(dl) if d > dl => format!("  (deadline {dl} missed)"),
            _ => String::new(),
        };
        let _ = writeln!(
            s,
            "{:<width$}  {:>11}  {:>8}  {d}{mark}",
            c.flow, c.alternative, c.priority
        );
    }
    Ok(s)
}

/// Runs one method and packages the outcome as a result file.
pub fn optimize(
    instance: &ProblemInstance,
    method: Method,
    seed: u64,
    budget: usize,
    objective: &ObjectiveArgs,
) -> Result<(OptimizerReport, ResultFile), CliError> {
    let mut obj = objective.compile(instance)?;
    let report = optim::run_method(method, instance, &mut obj, seed, budget)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let delays = report.flow_values.clone();
    let (lc, ld) = obj.lambdas();
    let result = ResultFile {
        version: RESULT_VERSION,
        method,
        seed,
        options: RunEcho {
            objective: objective.objective.name().to_string(),
            utility: (objective.objective == ObjectiveChoice::Utility)
                .then(|| objective.utility.to_string()),
            budget,
            utilization_cap: instance.utilization_cap(),
            lambda_cap: objective.lambda_cap,
            lambda_deadline: objective.lambda_deadline,
            lambda_used: [lc, ld],
            tasks: objective.tasks,
            sibling_interference: !objective.exclude_siblings,
        },
        choices: choices_of(instance, &report.chosen, Some(&delays)),
        objective: report.objective,
        feasible: report.feasible,
        termination: report.termination,
        evaluations: report.evaluations,
        polytope_violations: report.polytope_violations,
        trace: report
            .trace
            .iter()
            .map(|&t| t.is_finite().then_some(t))
            .collect(),
        wall_clock_seconds: None,
    };
    Ok((report, result))
}

/// Human summary and result file of one optimize run.
pub fn cmd_optimize(args: &OptimizeArgs) -> Result<(String, ResultFile), CliError> {
    let clock = Instant::now();
    let instance = load_instance(&args.instance, args.objective.rho)?;
    let (report, mut result) = optimize(
        &instance,
        args.method,
        args.seed,
        args.budget,
        &args.objective,
    )?;
    if args.timing {
        result.wall_clock_seconds = Some(clock.elapsed().as_secs_f64());
    }
    let json = to_json(&result)?;
    if let Some(p) = &args.output {
        write_text(p, &json)?;
    }
    if args.json {
        return Ok((json, result));
    }
    let mut s = String::new();
    let _ = writeln!(s, "method      {}", args.method);
    let _ = writeln!(s, "seed        {}", args.seed);
    match report.objective {
        Some(v) => {
            let _ = writeln!(s, "objective   {v}");
        }
        None => {
            let _ = writeln!(s, "objective   not evaluable");
        }
    }
    let _ = writeln!(s, "feasible    {}", report.feasible);
    let _ = writeln!(s, "termination {:?}", report.termination);
    let _ = writeln!(s, "iterations  {}", report.trace.len());
    let _ = writeln!(s, "evaluations {}", report.evaluations);
    let width = result.choices.iter().map(|c| c.flow.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(s, "\n{:<width$}  alternative  priority  delay bound", "flow");
    for c in &result.choices {
        let d = c
            .delay_bound
            .map_or_else(|| "-".to_string(), |d| d.to_string());
        let _ = writeln!(
            s,
            "{:<width$}  {:>11}  {:>8}  {d}",
            c.flow, c.alternative, c.priority
        );
    }
    Ok((s, result))
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<String, CliError> {
    let mut spec: GenSpec = match &args.spec {
        Some(p) => serde_json::from_str(&read_text(p)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        None => GenSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate().map_err(|e| CliError::Input(e.to_string()))?;
    if args.count == 0 {
        return Err(CliError::Input("--count must be at least 1".into()));
    }
    if args.count > 1 {
        fs::create_dir_all(&args.output).map_err(|e| {
            CliError::Input(format!("cannot create {}: {e}", args.output.display()))
        })?;
    }
    let mut rows = Vec::new();
    for i in 0..args.count {
        let s = GenSpec {
            seed: spec.seed + i as u64,
            ..spec.clone()
        };
        let g = gen::generate(&s).map_err(|e| CliError::Infeasible(e.to_string()))?;
        let path = if args.count > 1 {
            args.output.join(format!("instance-{:04}.json", s.seed))
        } else {
            args.output.clone()
        };
        write_text(&path, &write_instance(&g.file))?;
        rows.push((path, gen::stats(&g.instance)));
    }
    if args.json {
        let rows: Vec<serde_json::Value> = rows
            .iter()
            .map(|(p, st)| serde_json::json!({ "file": p.display().to_string(), "stats": st }))
            .collect();
        return to_json(&rows);
    }
    let mut s = format!(
        "{:<28}{:>8}{:>7}{:>7}{:>9}{:>6}{:>14}\n",
        "file", "servers", "ports", "flows", "virtual", "vars", "combos(log10)"
    );
    for (p, st) in &rows {
        let name = p.file_name().map_or_else(
            || p.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        let _ = writeln!(
            s,
            "{:<28}{:>8}{:>7}{:>7}{:>9}{:>6}{:>14.3}",
            name,
            st.servers,
            st.ports,
            st.flows,
            st.virtual_flows,
            st.variables,
            st.log10_combinations
        );
    }
    if rows.len() > 1 {
        let all: Vec<_> = rows.into_iter().map(|(_, st)| st).collect();
        let _ = writeln!(
            s,
            "\n{:<28}{:>10}{:>10}{:>10}{:>10}",
            "statistic", "min", "mean", "median", "max"
        );
        for (name, sm) in gen::dataset_stats(&all) {
            let _ = writeln!(
                s,
                "{:<28}{:>10.2}{:>10.2}{:>10.2}{:>10.2}",
                name, sm.min, sm.mean, sm.median, sm.max
            );
        }
    }
    Ok(s)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<String, CliError> {
    let mut files: Vec<PathBuf> = fs::read_dir(&args.directory)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.directory.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Input(format!(
            "no .json instances in {}",
            args.directory.display()
        )));
    }
    let opts = BenchOptions {
        methods: args.methods.clone(),
        seeds: args.seeds.clone(),
        budget: args.budget,
        objective: args.objective.clone(),
        limit: args.limit,
    };
    let report = bench(&files, &opts);
    if let Some(p) = &args.output {
        write_text(p, &to_json(&report)?)?;
    }
    Ok(report.table())
}

pub fn cmd_gradcheck(args: &GradcheckArgs) -> Result<String, CliError> {
    let instance = load_instance(&args.instance, args.objective.rho)?;
    let obj = args.objective.compile(&instance)?;
    let total = gradcheck_instance(&instance, &obj, args.seed, args.points);
    let opts = GradCheckOptions::default();
    let verdict = if total.hard_failures == 0 && total.passed + total.ties_skipped == total.coordinates {
        "PASS"
    } else {
        "FAIL"
    };
    let mut s = String::new();
    let _ = writeln!(s, "points          {}", args.points);
    let _ = writeln!(s, "coordinates     {}", total.coordinates);
    let _ = writeln!(s, "ties skipped    {}", total.ties_skipped);
    let _ = writeln!(s, "{:<16}{}", format!("within {:e}", opts.tolerance), total.passed);
    let _ = writeln!(s, "hard failures   {}", total.hard_failures);
    let _ = writeln!(s, "max rel. error  {:e}", total.max_rel_error);
    let _ = writeln!(s, "{verdict}");
    Ok(s)
}

/// Gradient check at `points` random admissible points, each pulled toward
/// the capacity witness until the objective is finite there.
pub fn gradcheck_instance(
    instance: &ProblemInstance,
    objective: &CompiledObjective,
    seed: u64,
    points: usize,
) -> GradCheck {
    let opts = GradCheckOptions::default();
    let witness = instance.one_hot(instance.witness());
    let mut total = GradCheck::default();
    for i in 0..points {
        let start = random_start(instance, seed.wrapping_add(i as u64)).p;
        let mut x = start.clone();
        let mut t = 0.0;
        while objective.evaluate(&x).is_err() && t < 1.0 {
            t = if t == 0.0 { 0.5 } else { (1.0 + t) / 2.0 };
            if 1.0 - t < 1e-6 {
                t = 1.0;
            }
            x = start
                .iter()
                .zip(&witness)
                .map(|(&a, &w)| a + t * (w - a))
                .collect();
        }
        total.merge(&check_point(objective, &x, &opts));
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::FlowEntry;

    fn single() -> InstanceFile {
        InstanceFile::new()
            .server("s", "p", 0, 10.0, 3.0)
            .flow(FlowEntry::unicast("f", 1.0, 2.0, vec![vec!["s"]]))
    }

    fn run(args: &[&str]) -> (u8, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_from(
            std::iter::once("ncsynth").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn analyze_single_server() {
        let inst = ProblemInstance::from_file(&single()).unwrap();
        let b = analyze(&inst, &[0]).unwrap();
        assert!((b[0].delay_bound.unwrap() - 3.2).abs() < 1e-12);
    }

    #[test]
    fn missing_server_names_the_id() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = single();
        f.flows[0].candidate_paths = vec![vec![vec!["ghost".into()]]];
        f.flows[0].destinations = vec!["ghost".into()];
        let p = dir.path().join("bad.json");
        fs::write(&p, write_instance(&f)).unwrap();
        let (code, _, err) = run(&["analyze", p.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("ghost"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = serde_json::to_value(single()).unwrap();
        v["colour"] = serde_json::json!("red");
        let e = parse_instance(&v.to_string()).unwrap_err();
        assert!(e.to_string().contains("colour"));
    }

    #[test]
    fn unknown_method_is_a_usage_error() {
        let (code, _, err) = run(&["optimize", "x.json", "--method", "simplex"]);
        assert_eq!(code, 2);
        assert!(err.contains("simplex"));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Infeasible(String::new()).exit_code(), 1);
        assert_eq!(CliError::Input(String::new()).exit_code(), 2);
        assert_eq!(CliError::Internal(String::new()).exit_code(), 3);
        let (code, _, _) = run(&["analyze", "/nonexistent/instance.json"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn overloaded_assignment_is_infeasible() {
        let paths = || vec![vec!["in", "a", "out"], vec!["in", "b", "out"]];
        let f = InstanceFile::new()
            .server("in", "pi", 0, 100.0, 0.0)
            .server("a", "pa", 0, 10.0, 1.0)
            .server("b", "pb", 0, 10.0, 1.0)
            .server("out", "po", 0, 100.0, 0.0)
            .edge("in", "a")
            .edge("in", "b")
            .edge("a", "out")
            .edge("b", "out")
            .flow(FlowEntry::unicast("f1", 6.0, 1.0, paths()))
            .flow(FlowEntry::unicast("f2", 6.0, 1.0, paths()));
        let inst = ProblemInstance::from_file(&f).unwrap();
        assert!(matches!(analyze(&inst, &[0, 2]), Err(CliError::Infeasible(_))));
        assert!(analyze(&inst, &[0, 3]).is_ok());
    }

    #[test]
    fn sp_hops_ignores_the_seed() {
        let inst = ProblemInstance::from_file(&single()).unwrap();
        let o = ObjectiveArgs::default();
        let (_, a) = optimize(&inst, Method::SpHops, 1, 10, &o).unwrap();
        let (_, b) = optimize(&inst, Method::SpHops, 2, 10, &o).unwrap();
        assert_eq!(a.choices, b.choices);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn result_file_round_trips() {
        let inst = ProblemInstance::from_file(&single()).unwrap();
        let (_, r) = optimize(&inst, Method::FrankWolfe, 0, 10, &ObjectiveArgs::default()).unwrap();
        let text = to_json(&r).unwrap();
        let back: ResultFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let a: AssignmentFile = serde_json::from_str(&text).unwrap();
        assert_eq!(vars_of(&inst, &a.choices).unwrap(), vec![0]);
    }

    #[test]
    fn empty_gradcheck_passes() {
        let inst = ProblemInstance::from_file(&single()).unwrap();
        let obj = ObjectiveArgs::default().compile(&inst).unwrap();
        let g = gradcheck_instance(&inst, &obj, 0, 2);
        assert_eq!(g.hard_failures, 0);
        assert_eq!(g.pass_rate(), 1.0);
    }
}
