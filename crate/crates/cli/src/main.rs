//! `cluster-infer`: compile, query and cross-check belief networks.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cluster_infer::condition::{
    greedy_loop_cutset, loop_cutset_infer, run_global, run_serial, GlobalOptions, GlobalResult, Merge, Parallelism,
};
use cluster_infer::fixtures::chest_clinic;
use cluster_infer::io::{parse_evidence, parse_network};
use cluster_infer::oracle::oracle_marginal;
use cluster_infer::restructure::{apply_move, flexible_moves, RestructureMove};
use cluster_infer::treebuild::{
    compile, conditioned_cluster_tree, cutset_cluster_tree, polytree_cluster_tree, verify_cluster_tree,
};
use cluster_infer::{BeliefNetwork, ClusterTree, EngineState, Error, Form, Table, VarId};

const SEED_ENV: &str = "CLUSTER_INFER_SEED";

#[derive(Parser, Debug)]
#[command(name = "cluster-infer", version, about = "Exact inference in discrete belief networks")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Seed for the built-in chest-clinic network used when `--net` is
    /// omitted. Overridden by CLUSTER_INFER_SEED.
    #[arg(long, default_value_t = 1, global = true)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormArg {
    Factored,
    Joint,
}

impl From<FormArg> for Form {
    fn from(f: FormArg) -> Form {
        match f {
            FormArg::Factored => Form::Factored,
            FormArg::Joint => Form::Joint,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    Clustering,
    Polytree,
    Cutset,
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Parallel,
    Serial,
}

#[derive(Args, Debug)]
struct Input {
    /// Network file (.bnet). Defaults to the built-in chest-clinic network.
    #[arg(long)]
    net: Option<PathBuf>,
    /// Evidence file (.bev).
    #[arg(long)]
    ev: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Query {
    /// Comma-separated variable names (default: every variable).
    #[arg(long, value_delimiter = ',')]
    query: Vec<String>,
    /// Report the joint posterior of the query set instead of one marginal
    /// per variable.
    #[arg(long)]
    joint: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a network and check it for structural and numeric problems.
    Validate {
        #[command(flatten)]
        input: Input,
    },
    /// Build a cluster tree and report its statistics.
    Compile {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Engine::Clustering)]
        engine: Engine,
        /// Loop cutset for `--engine cutset` (default: greedy).
        #[arg(long, value_delimiter = ',')]
        cutset: Vec<String>,
        /// Add these variables to every cluster of the compiled tree.
        #[arg(long, value_delimiter = ',')]
        conditioned_on: Vec<String>,
    },
    /// Posterior marginals and the probability of the evidence.
    Infer {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: Query,
        #[arg(long, value_enum, default_value_t = FormArg::Factored)]
        form: FormArg,
        #[arg(long, value_enum, default_value_t = Engine::Clustering)]
        engine: Engine,
        /// Conditioning set for `cutset` and `global` (default: greedy loop cutset).
        #[arg(long, value_delimiter = ',')]
        cutset: Vec<String>,
        /// Worker threads for `global` (0: one per core).
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Global conditioning with a run report.
    Condition {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: Query,
        #[arg(long, value_delimiter = ',')]
        cutset: Vec<String>,
        #[arg(long, value_enum, default_value_t = Mode::Parallel)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = FormArg::Factored)]
        form: FormArg,
        /// Process instantiations even when an island has zero mass.
        #[arg(long)]
        no_skip: bool,
    },
    /// List or apply arc replacements on the compiled tree.
    Restructure {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: Query,
        #[arg(long, conflicts_with = "apply")]
        list: bool,
        /// Move `I,J:A,B` replacing arc I–J by A–B; may be repeated.
        #[arg(long)]
        apply: Vec<RestructureMove>,
        #[arg(long, value_enum, default_value_t = FormArg::Joint)]
        form: FormArg,
    },
    /// Answers by brute-force enumeration of the joint distribution.
    Oracle {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        query: Query,
    },
    /// Run every applicable engine and report deviations from the oracle.
    Compare {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_delimiter = ',')]
        cutset: Vec<String>,
    },
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ImpossibleEvidence => 2,
            Error::QueryNotCoverable(_) => 3,
            Error::NotLoopCutset(_) | Error::NotSinglyConnected => 4,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

type Outcome = Result<(), Failure>;

/// Line-oriented output in either format.
struct Out {
    format: Format,
}

// A closed pipe (`| head`) is not an error worth reporting.
fn emit(line: std::fmt::Arguments) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

impl Out {
    fn text(&self, line: impl AsRef<str>) {
        if self.format == Format::Text {
            emit(format_args!("{}", line.as_ref()));
        }
    }

    fn record(&self, key: impl AsRef<str>, value: impl AsRef<str>) {
        if self.format == Format::Machine {
            emit(format_args!("{}={}", key.as_ref(), value.as_ref()));
        }
    }

    /// Same information in both formats.
    fn both(&self, label: &str, key: &str, value: impl AsRef<str>) {
        match self.format {
            Format::Text => emit(format_args!("{label}: {}", value.as_ref())),
            Format::Machine => emit(format_args!("{key}={}", value.as_ref())),
        }
    }
}

/// Seventeen significant digits.
fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let prec = (16 - mag).max(0) as usize;
        format!("{x:.prec$}")
    } else {
        format!("{x:.16e}")
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn load(input: &Input, seed: u64) -> Result<BeliefNetwork, Failure> {
    let net = match &input.net {
        Some(p) => parse_network(&read(p)?)?,
        None => chest_clinic(seed),
    };
    match &input.ev {
        Some(p) => {
            let ev = parse_evidence(&read(p)?, &net)?;
            Ok(net.with_evidence(ev)?)
        }
        None => Ok(net),
    }
}

fn vars(net: &BeliefNetwork, names: &[String]) -> Result<Vec<VarId>, Failure> {
    let mut out = Vec::with_capacity(names.len());
    for n in names {
        let v = net.find(n)?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

fn query_vars(net: &BeliefNetwork, q: &Query) -> Result<Vec<VarId>, Failure> {
    if q.query.is_empty() {
        Ok(net.ids().collect())
    } else {
        vars(net, &q.query)
    }
}

fn names(net: &BeliefNetwork, vs: &[VarId]) -> String {
    vs.iter().map(|v| net.variable(*v).name.clone()).collect::<Vec<_>>().join(",")
}

fn cutset_or_greedy(net: &BeliefNetwork, names: &[String]) -> Result<Vec<VarId>, Failure> {
    if names.is_empty() {
        Ok(greedy_loop_cutset(net))
    } else {
        vars(net, names)
    }
}

/// Anything that answers unnormalized marginal queries.
trait Answers {
    fn joint_of(&mut self, vars: &[VarId]) -> cluster_infer::Result<Table>;
    fn evidence(&mut self) -> cluster_infer::Result<f64>;
}

impl Answers for EngineState {
    fn joint_of(&mut self, vars: &[VarId]) -> cluster_infer::Result<Table> {
        self.query_marginal(vars)
    }

    fn evidence(&mut self) -> cluster_infer::Result<f64> {
        self.prob_evidence()
    }
}

impl Answers for GlobalResult {
    fn joint_of(&mut self, vars: &[VarId]) -> cluster_infer::Result<Table> {
        self.query_marginal(vars)
    }

    fn evidence(&mut self) -> cluster_infer::Result<f64> {
        Ok(self.prob_evidence())
    }
}

struct Oracle<'a>(&'a BeliefNetwork);

impl Answers for Oracle<'_> {
    fn joint_of(&mut self, vars: &[VarId]) -> cluster_infer::Result<Table> {
        oracle_marginal(self.0, vars)
    }

    fn evidence(&mut self) -> cluster_infer::Result<f64> {
        Ok(oracle_marginal(self.0, &[])?.sum_all())
    }
}

fn normalized(t: &Table, z: f64) -> Result<Vec<f64>, Failure> {
    if z == 0.0 {
        return Err(Error::ImpossibleEvidence.into());
    }
    Ok(t.values().iter().map(|x| x / z).collect())
}

fn report_table(out: &Out, net: &BeliefNetwork, t: &Table, z: f64) -> Outcome {
    let probs = normalized(t, z)?;
    let scope = t.scope();
    for (i, p) in probs.iter().enumerate() {
        let states = scope.unravel(i);
        let cell: Vec<String> = scope
            .vars()
            .iter()
            .zip(&states)
            .map(|(v, s)| format!("{}={}", net.variable(*v).name, net.variable(*v).states[*s]))
            .collect();
        out.text(format!("P({} | e) = {}", cell.join(", "), num(*p)));
        out.record(format!("posterior[{}]", cell.join(",")), num(*p));
    }
    Ok(())
}

fn report_answers(out: &Out, net: &BeliefNetwork, q: &Query, engine: &mut dyn Answers) -> Outcome {
    let vs = query_vars(net, q)?;
    let z = engine.evidence()?;
    if z == 0.0 {
        return Err(Error::ImpossibleEvidence.into());
    }
    if q.joint {
        report_table(out, net, &engine.joint_of(&vs)?, z)?;
    } else {
        for v in &vs {
            report_table(out, net, &engine.joint_of(&[*v])?, z)?;
        }
    }
    out.text(format!("P(e) = {}", num(z)));
    out.record("evidence", num(z));
    Ok(())
}

fn report_tree(out: &Out, net: &BeliefNetwork, tree: &ClusterTree) {
    let stats = tree.stats();
    out.both("clusters", "clusters", stats.clusters.to_string());
    out.both("arcs", "arcs", stats.arcs.to_string());
    out.both("max cluster cardinality", "max_cluster_cardinality", stats.max_cluster_cardinality.to_string());
    out.both("total state space", "total_state_space", stats.total_state_space.to_string());
    for (i, c) in tree.clusters().iter().enumerate() {
        out.text(format!("cluster {i}: {{{}}} table size {}", names(net, c), stats.table_sizes[i]));
        out.record(format!("cluster.{i}"), names(net, c));
        out.record(format!("table_size.{i}"), stats.table_sizes[i].to_string());
    }
    for (k, &(a, b)) in tree.arcs().iter().enumerate() {
        let sep = tree.sepset(k);
        out.text(format!("arc {k}: {a}-{b} sepset {{{}}} size {}", names(net, &sep), stats.sepset_sizes[k]));
        out.record(format!("arc.{k}"), format!("{a},{b}"));
        out.record(format!("sepset.{k}"), names(net, &sep));
    }
}

fn validate(out: &Out, net: &BeliefNetwork) -> Outcome {
    let report = net.validate();
    for v in &report.violations {
        out.text(format!("violation: {v}"));
        out.record("violation", v.to_string());
    }
    if !report.is_ok() {
        return Err(usage(format!("{} violation(s) found", report.violations.len())));
    }
    let tree = compile(net)?;
    let tree_report = verify_cluster_tree(net, &tree);
    if !tree_report.is_ok() {
        return Err(usage(format!("compiled tree is invalid: {:?}", tree_report.violations)));
    }
    out.both("variables", "variables", net.len().to_string());
    out.both("arcs", "arcs", net.arcs().len().to_string());
    out.both("findings", "findings", net.evidence().len().to_string());
    out.both("singly connected", "singly_connected", net.is_singly_connected().to_string());
    out.text("ok");
    out.record("status", "ok");
    Ok(())
}

fn build_tree(net: &BeliefNetwork, engine: Engine, cutset: &[String]) -> Result<(ClusterTree, Vec<VarId>), Failure> {
    match engine {
        Engine::Clustering | Engine::Global => Ok((compile(net)?, Vec::new())),
        Engine::Polytree => Ok((polytree_cluster_tree(net)?, Vec::new())),
        Engine::Cutset => {
            let k = cutset_or_greedy(net, cutset)?;
            Ok((cutset_cluster_tree(net, &k)?, k))
        }
    }
}

fn parallelism(workers: usize) -> Parallelism {
    if workers == 1 {
        Parallelism::Sequential
    } else {
        Parallelism::Workers(workers)
    }
}

fn run(cli: Cli) -> Outcome {
    let out = Out { format: cli.format };
    let seed = match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| usage(format!("{SEED_ENV} must be an unsigned integer, got `{s}`")))?,
        Err(_) => cli.seed,
    };
    match cli.command {
        Command::Validate { input } => validate(&out, &load(&input, seed)?),
        Command::Compile { input, engine, cutset, conditioned_on } => {
            let net = load(&input, seed)?;
            if !cutset.is_empty() && engine != Engine::Cutset {
                return Err(usage("--cutset requires --engine cutset"));
            }
            if engine == Engine::Global {
                return Err(usage("compile supports --engine clustering, polytree or cutset"));
            }
            let (mut tree, k) = build_tree(&net, engine, &cutset)?;
            if !k.is_empty() {
                out.both("cutset", "cutset", names(&net, &k));
            }
            let cond = vars(&net, &conditioned_on)?;
            if !cond.is_empty() {
                tree = conditioned_cluster_tree(&tree, &cond);
                out.both("conditioned on", "conditioned_on", names(&net, &cond));
            }
            report_tree(&out, &net, &tree);
            Ok(())
        }
        Command::Infer { input, query, form, engine, cutset, workers } => {
            let net = load(&input, seed)?;
            if !cutset.is_empty() && !matches!(engine, Engine::Cutset | Engine::Global) {
                return Err(usage("--cutset requires --engine cutset or global"));
            }
            let opts = GlobalOptions { form: form.into(), parallelism: parallelism(workers), ..Default::default() };
            match engine {
                Engine::Clustering | Engine::Polytree => {
                    let (tree, _) = build_tree(&net, engine, &cutset)?;
                    let mut state = EngineState::initialize(&net, &tree, form.into())?;
                    state.propagate()?;
                    report_answers(&out, &net, &query, &mut state)
                }
                Engine::Cutset => {
                    let k = cutset_or_greedy(&net, &cutset)?;
                    let mut g = loop_cutset_infer(&net, &k, &opts)?;
                    report_answers(&out, &net, &query, &mut g)
                }
                Engine::Global => {
                    let k = cutset_or_greedy(&net, &cutset)?;
                    let mut g = run_global(&net, &compile(&net)?, &k, &opts)?;
                    report_answers(&out, &net, &query, &mut g)
                }
            }
        }
        Command::Condition { input, query, cutset, mode, workers, form, no_skip } => {
            let net = load(&input, seed)?;
            let k = cutset_or_greedy(&net, &cutset)?;
            let tree = compile(&net)?;
            let opts = GlobalOptions {
                form: form.into(),
                parallelism: Parallelism::Workers(workers),
                merge: Merge::Partials,
                skip_zero_islands: !no_skip,
            };
            out.both("conditioning set", "cutset", names(&net, &k));
            match mode {
                Mode::Parallel => {
                    let mut g = run_global(&net, &tree, &k, &opts)?;
                    report_stats(&out, &g.stats);
                    report_answers(&out, &net, &query, &mut g)
                }
                Mode::Serial => {
                    let vs = query_vars(&net, &query)?;
                    let sets: Vec<Vec<VarId>> = if query.joint { vec![vs] } else { vs.iter().map(|v| vec![*v]).collect() };
                    let mut tables = Vec::new();
                    let mut peak = 0;
                    let mut stats = None;
                    for set in &sets {
                        let (t, s) = run_serial(&net, &tree, &k, set, &opts)?;
                        peak = peak.max(s.peak_bytes);
                        stats.get_or_insert(s);
                        tables.push(t);
                    }
                    let mut stats = stats.unwrap_or_default();
                    stats.peak_bytes = peak;
                    report_stats(&out, &stats);
                    out.both("peak table bytes", "peak_table_bytes", peak.to_string());
                    let z = tables.first().map_or(0.0, Table::sum_all);
                    for t in &tables {
                        report_table(&out, &net, t, z)?;
                    }
                    out.text(format!("P(e) = {}", num(z)));
                    out.record("evidence", num(z));
                    Ok(())
                }
            }
        }
        Command::Restructure { input, query, list, apply, form } => {
            let net = load(&input, seed)?;
            let tree = compile(&net)?;
            if list || apply.is_empty() {
                for mv in flexible_moves(&tree) {
                    let k = tree.arc_index(mv.old_arc.0, mv.old_arc.1).expect("arc");
                    out.text(format!("{mv}  sepset {{{}}}", names(&net, &tree.sepset(k))));
                    out.record("move", mv.to_string());
                }
                return Ok(());
            }
            let mut state = EngineState::initialize(&net, &tree, form.into())?;
            state.propagate()?;
            for mv in &apply {
                apply_move(&mut state, mv)?;
                out.both("applied", "applied", mv.to_string());
            }
            let arcs: Vec<String> = state.tree().arcs().iter().map(|(a, b)| format!("{a}-{b}")).collect();
            out.both("arcs", "arcs", arcs.join(" "));
            let valid = verify_cluster_tree(&net, state.tree()).is_ok();
            out.both("valid", "valid", valid.to_string());
            state.reset_counter();
            report_answers(&out, &net, &query, &mut state)?;
            out.both("messages recomputed", "messages_recomputed", state.messages_computed().to_string());
            Ok(())
        }
        Command::Oracle { input, query } => {
            let net = load(&input, seed)?;
            report_answers(&out, &net, &query, &mut Oracle(&net))
        }
        Command::Compare { input, cutset } => compare(&out, &load(&input, seed)?, &cutset),
    }
}

fn report_stats(out: &Out, stats: &cluster_infer::condition::RunStats) {
    out.both("instantiations", "instantiations", stats.instantiations.to_string());
    out.both("skipped", "skipped", stats.skipped.to_string());
    let islands: Vec<String> = stats.islands.iter().map(|n| n.to_string()).collect();
    out.both("islands", "islands", islands.join(" "));
}

fn compare(out: &Out, net: &BeliefNetwork, cutset: &[String]) -> Outcome {
    let k = cutset_or_greedy(net, cutset)?;
    let tree = compile(net)?;
    let mut truth = Oracle(net);
    let z = truth.evidence()?;
    if z == 0.0 {
        return Err(Error::ImpossibleEvidence.into());
    }
    let reference: Vec<Table> = net.ids().map(|v| truth.joint_of(&[v])).collect::<Result<_, _>>()?;
    let mut engines: Vec<(&str, Box<dyn Answers>)> = Vec::new();
    for (name, form) in [("clustering-factored", Form::Factored), ("clustering-joint", Form::Joint)] {
        let mut s = EngineState::initialize(net, &tree, form)?;
        s.propagate()?;
        engines.push((name, Box::new(s)));
    }
    if net.is_singly_connected() {
        let mut s = EngineState::initialize(net, &polytree_cluster_tree(net)?, Form::Factored)?;
        s.propagate()?;
        engines.push(("polytree", Box::new(s)));
    }
    engines.push(("loop-cutset", Box::new(loop_cutset_infer(net, &k, &GlobalOptions::default())?)));
    engines.push(("global-conditioning", Box::new(run_global(net, &tree, &k, &GlobalOptions::default())?)));
    out.both("cutset", "cutset", names(net, &k));
    let mut overall: f64 = 0.0;
    for (name, engine) in &mut engines {
        let ze = engine.evidence()?;
        let mut worst: f64 = (ze - z).abs();
        for (v, want) in net.ids().zip(&reference) {
            let got = normalized(&engine.joint_of(&[v])?, ze)?;
            for (a, b) in got.iter().zip(normalized(want, z)?) {
                worst = worst.max((a - b).abs());
            }
        }
        overall = overall.max(worst);
        out.text(format!("{name}: max deviation {}", num(worst)));
        out.record(format!("deviation.{name}"), num(worst));
    }
    out.both("max deviation", "max_deviation", num(overall));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "0.10000000000000001");
        assert_eq!(num(0.5), "0.50000000000000000");
        assert_eq!(num(12.25), "12.250000000000000");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.5e-9), "1.5000000000000000e-9");
        assert_eq!(num(1.0), "1.0000000000000000");
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::ImpossibleEvidence).code, 2);
        assert_eq!(Failure::from(Error::QueryNotCoverable(vec![])).code, 3);
        assert_eq!(Failure::from(Error::NotLoopCutset(vec![])).code, 4);
        assert_eq!(Failure::from(Error::UnknownVariable("x".into())).code, 1);
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from(["cluster-infer", "infer", "--query", "6,7", "--engine", "global", "--cutset", "2"]).unwrap();
        match cli.command {
            Command::Infer { query, engine, cutset, .. } => {
                assert_eq!(query.query, vec!["6", "7"]);
                assert_eq!(engine, Engine::Global);
                assert_eq!(cutset, vec!["2"]);
            }
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from(["cluster-infer", "restructure", "--apply", "nonsense"]).is_err());
    }
}
