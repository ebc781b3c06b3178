//! The `gridtree` command line: flow reports, feasibility checks, solvers,
//! the exhaustive oracle, instance generators and a benchmark harness.
//!
//! Exit codes: 0 on success, 1 when the result is infeasible or empty,
//! 2 on usage or input errors (with a JSON diagnostic on stderr).

pub mod bench;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value};
use thiserror::Error;

use gridtree_core::exact::{solve_min_max_load, valid};
use gridtree_core::flow::{check_feasible_with, compute_flow, objectives, DemandRule, Objective};
use gridtree_core::fptas::{solve_max_min_load_fptas, solve_min_reserve_fptas, FptasSolution};
use gridtree_core::hardgen::{
    gen_gadget, gen_inapprox_instance, gen_random_tree, gen_subset_sum_reduction_with, CapacityMode, GenError,
    Profile,
};
use gridtree_core::model::{parse_network, parse_orientation, ModelError};
use gridtree_core::oracle::{brute_force_optimum, OracleError};
use gridtree_core::rounding::{build_grids, rounded_flow, rounded_objectives, RoundingError};
use gridtree_core::{Network, NodeKind, Rational};

use report::{number, opt_number, render};

#[derive(Debug, Parser)]
#[command(name = "gridtree", version, about = "Orientation problems on tree power networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Flow, loads and violations of an orientation.
    Flow(FlowArgs),
    /// Feasibility of an orientation.
    Check(PairArgs),
    /// Exact min-M, VALID, or the approximation schemes for max-m and min-R.
    Solve(SolveArgs),
    /// Exhaustive optimum over all orientations.
    Oracle(OracleArgs),
    /// Instance generators.
    Generate(GenerateArgs),
    /// Timed runs over seeded random instances, as CSV.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    orientation: PathBuf,
}

#[derive(Debug, Args)]
struct FlowArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Add rounded flows and loads.
    #[arg(long)]
    rounded: bool,
    #[arg(long, default_value = "1/10")]
    eps_prime: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolveObjective {
    #[value(alias = "min-m")]
    MinMaxLoad,
    #[value(alias = "max-m")]
    MaxMinLoad,
    #[value(alias = "min-r")]
    MinReserve,
    Valid,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    objective: SolveObjective,
    #[arg(long)]
    instance: PathBuf,
    /// ε′ in (0, 1/2) for the approximation schemes.
    #[arg(long, default_value = "1/10")]
    eps_prime: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleObjective {
    #[value(alias = "min-max-load")]
    MinM,
    #[value(alias = "max-min-load")]
    MaxM,
    #[value(alias = "min-reserve")]
    MinR,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    objective: OracleObjective,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(subcommand)]
    kind: GenerateKind,
    /// Write the instance here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the generator metadata here.
    #[arg(long, global = true)]
    meta: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Capacities {
    Unbounded,
    Strict,
}

#[derive(Debug, Subcommand)]
enum GenerateKind {
    /// Random tree from a Prüfer sequence.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "balanced")]
        profile: String,
    },
    /// Subset-sum reduction instance.
    Reduction {
        #[arg(long, value_delimiter = ',', required = true)]
        xs: Vec<u64>,
        #[arg(long)]
        b: u64,
        #[arg(long, value_enum, default_value = "unbounded")]
        capacities: Capacities,
    },
    /// Reduction instance with amplified loads.
    Inapprox {
        #[arg(long, value_delimiter = ',', required = true)]
        xs: Vec<u64>,
        #[arg(long)]
        b: u64,
        #[arg(long, default_value_t = 1)]
        c: u32,
    },
    /// Standalone gadget for a sink of power 2 + x·2^{−m}.
    Gadget {
        #[arg(long)]
        x: String,
        #[arg(long)]
        m: u32,
        /// Terminal node as kind:value, e.g. source:3 or sink:1.
        #[arg(long, default_value = "source:3")]
        terminal: String,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
    #[error(transparent)]
    Generate(#[from] GenError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("{0}")]
    Csv(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Read { .. } => "read",
            CliError::Write { .. } => "write",
            CliError::Model(_) => "instance",
            CliError::Rounding(_) => "rounding",
            CliError::Generate(_) => "generate",
            CliError::Oracle(_) => "oracle",
            CliError::Csv(_) => "csv",
        }
    }
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn ok(stdout: String, success: bool) -> Self {
        Output { code: if success { 0 } else { 1 }, stdout, stderr: String::new() }
    }
}

fn diagnostic(kind: &str, message: &str) -> String {
    render(&json!({ "error": { "kind": kind, "message": message } }))
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Output { code: 0, stdout: e.to_string(), stderr: String::new() }
                }
                _ => Output { code: 2, stdout: String::new(), stderr: diagnostic("usage", e.to_string().trim()) },
            };
        }
    };
    match dispatch(cli.command) {
        Ok(out) => out,
        Err(e) => Output { code: 2, stdout: String::new(), stderr: diagnostic(e.kind(), &e.to_string()) },
    }
}

fn dispatch(cmd: Command) -> Result<Output, CliError> {
    match cmd {
        Command::Flow(a) => flow(&a),
        Command::Check(a) => check(&a),
        Command::Solve(a) => solve(&a),
        Command::Oracle(a) => oracle(&a),
        Command::Generate(a) => generate(&a),
        Command::Bench(a) => bench::run(&a),
    }
}

pub(crate) fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Read { path: path.display().to_string(), message: e.to_string() })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Write { path: path.display().to_string(), message: e.to_string() })
}

fn load_instance(path: &Path) -> Result<Network, CliError> {
    Ok(parse_network(&read(path)?)?)
}

pub(crate) fn parse_rational(text: &str, what: &str) -> Result<Rational, CliError> {
    text.trim().parse::<Rational>().map_err(|_| CliError::Usage(format!("{what}: expected a rational such as 1/10, found \"{text}\"")))
}

fn flow(a: &FlowArgs) -> Result<Output, CliError> {
    let net = load_instance(&a.pair.instance)?;
    let o = parse_orientation(&net, &read(&a.pair.orientation)?)?;
    let eps_prime = if a.rounded { Some(parse_rational(&a.eps_prime, "--eps-prime")?) } else { None };
    let fa = compute_flow(&net, &o);
    let rep = check_feasible_with(&net, &o, &fa, DemandRule::Strict);
    let arcs: Vec<Value> = o
        .arcs()
        .iter()
        .enumerate()
        .map(|(e, &(t, h))| json!({ "tail": net.id(t), "head": net.id(h), "flow": number(fa.arc_flow(e)) }))
        .collect();
    let sources: Vec<Value> = net
        .sources()
        .map(|s| {
            json!({
                "id": net.id(s),
                "entering": opt_number(fa.entering(s)),
                "load": opt_number(fa.load(&net, s).as_ref()),
            })
        })
        .collect();
    let obj = if rep.feasible { objectives(&net, &fa).ok() } else { None };
    let mut doc = json!({
        "feasible": rep.feasible,
        "arcs": arcs,
        "sources": sources,
        "objectives": obj.as_ref().map_or(Value::Null, report::objectives),
        "violations": report::violations(&net, &rep),
    });
    if let Some(eps_prime) = eps_prime {
        let ctx = build_grids(&net, &eps_prime)?;
        let rf = rounded_flow(&net, &o, &ctx);
        let arcs: Vec<Value> = o
            .arcs()
            .iter()
            .enumerate()
            .map(|(e, &(t, h))| json!({ "tail": net.id(t), "head": net.id(h), "rounded_flow": number(rf.arc_flow(e)) }))
            .collect();
        let sources: Vec<Value> = net
            .sources()
            .map(|s| {
                json!({
                    "id": net.id(s),
                    "rounded_flow": opt_number(rf.node_flow(s)),
                    "rounded_load": opt_number(rf.load(&net, s).as_ref()),
                })
            })
            .collect();
        let robj = if rep.feasible { rounded_objectives(&net, &o, &ctx).ok() } else { None };
        doc["rounded"] = json!({
            "eps_prime": number(&eps_prime),
            "eps": number(ctx.eps()),
            "arcs": arcs,
            "sources": sources,
            "objectives": robj.as_ref().map_or(Value::Null, report::objectives),
        });
    }
    Ok(Output::ok(render(&doc), rep.feasible))
}

fn check(a: &PairArgs) -> Result<Output, CliError> {
    let net = load_instance(&a.instance)?;
    let o = parse_orientation(&net, &read(&a.orientation)?)?;
    let fa = compute_flow(&net, &o);
    let rep = check_feasible_with(&net, &o, &fa, DemandRule::Strict);
    let doc = json!({ "feasible": rep.feasible, "violations": report::violations(&net, &rep) });
    Ok(Output::ok(render(&doc), rep.feasible))
}

fn objective_name(o: SolveObjective) -> &'static str {
    match o {
        SolveObjective::MinMaxLoad => "min-max-load",
        SolveObjective::MaxMinLoad => "max-min-load",
        SolveObjective::MinReserve => "min-reserve",
        SolveObjective::Valid => "valid",
    }
}

fn fptas_doc(net: &Network, name: &str, eps_prime: &Rational, sol: Option<FptasSolution>) -> (Value, bool) {
    let Some(s) = sol else {
        return (json!({ "objective": name, "eps_prime": number(eps_prime), "value": null }), false);
    };
    let doc = json!({
        "objective": name,
        "eps_prime": number(eps_prime),
        "value": number(&s.value),
        "rounded_value": number(&s.rounded_value),
        "window": { "lo": number(&s.window.lo), "hi": number(&s.window.hi) },
        "orientation": report::orientation(net, &s.orientation),
        "objectives": report::objectives(&s.objectives),
        "table_stats": s.stats,
    });
    (doc, true)
}

fn solve(a: &SolveArgs) -> Result<Output, CliError> {
    let net = load_instance(&a.instance)?;
    let name = objective_name(a.objective);
    let (doc, found) = match a.objective {
        SolveObjective::Valid => match valid(&net) {
            Some(o) => (json!({ "objective": name, "feasible": true, "orientation": report::orientation(&net, &o) }), true),
            None => (json!({ "objective": name, "feasible": false, "orientation": null }), false),
        },
        SolveObjective::MinMaxLoad => match solve_min_max_load(&net) {
            Some(s) => (
                json!({
                    "objective": name,
                    "value": number(&s.value),
                    "orientation": report::orientation(&net, &s.orientation),
                    "objectives": report::objectives(&s.objectives),
                    "iterations": s.iterations,
                }),
                true,
            ),
            None => (json!({ "objective": name, "value": null }), false),
        },
        SolveObjective::MaxMinLoad => {
            let eps = parse_rational(&a.eps_prime, "--eps-prime")?;
            let sol = solve_max_min_load_fptas(&net, &eps)?;
            fptas_doc(&net, name, &eps, sol)
        }
        SolveObjective::MinReserve => {
            let eps = parse_rational(&a.eps_prime, "--eps-prime")?;
            let sol = solve_min_reserve_fptas(&net, &eps)?;
            fptas_doc(&net, name, &eps, sol)
        }
    };
    Ok(Output::ok(render(&doc), found))
}

fn oracle(a: &OracleArgs) -> Result<Output, CliError> {
    let net = load_instance(&a.instance)?;
    let (objective, name) = match a.objective {
        OracleObjective::MinM => (Objective::MinMaxLoad, "min-m"),
        OracleObjective::MaxM => (Objective::MaxMinLoad, "max-m"),
        OracleObjective::MinR => (Objective::MinReserve, "min-r"),
    };
    let best = brute_force_optimum(&net, objective)?;
    let doc = match &best {
        Some(b) => json!({
            "objective": name,
            "value": number(&b.value),
            "orientation": report::orientation(&net, &b.orientation),
            "objectives": report::objectives(&b.objectives),
            "count_feasible": b.count_feasible,
        }),
        None => json!({ "objective": name, "value": null, "count_feasible": 0 }),
    };
    Ok(Output::ok(render(&doc), best.is_some()))
}

fn parse_terminal(text: &str) -> Result<NodeKind, CliError> {
    let bad = || CliError::Usage(format!("--terminal: expected kind:value such as source:3, found \"{text}\""));
    let (kind, value) = text.split_once(':').ok_or_else(bad)?;
    let value: BigInt = value.parse().map_err(|_| bad())?;
    match kind {
        "source" => Ok(NodeKind::source(value)),
        "sink" => Ok(NodeKind::sink(value)),
        "switch" => Ok(NodeKind::switch(value)),
        _ => Err(bad()),
    }
}

fn generate(a: &GenerateArgs) -> Result<Output, CliError> {
    let (net, meta) = match &a.kind {
        GenerateKind::Random { n, seed, profile } => {
            let p = Profile::by_name(profile)
                .ok_or_else(|| CliError::Usage(format!("--profile: unknown profile \"{profile}\"")))?;
            let net = gen_random_tree(*n, *seed, &p)?;
            (net, json!({ "generator": "random", "n": n, "seed": seed, "profile": profile }))
        }
        GenerateKind::Reduction { xs, b, capacities } => {
            let mode = match capacities {
                Capacities::Unbounded => CapacityMode::Unbounded,
                Capacities::Strict => CapacityMode::Strict,
            };
            let (net, meta) = gen_subset_sum_reduction_with(xs, *b, mode)?;
            (net, serde_json::to_value(&meta).expect("metadata serializes"))
        }
        GenerateKind::Inapprox { xs, b, c } => {
            let (net, meta) = gen_inapprox_instance(xs, *b, *c)?;
            (net, serde_json::to_value(&meta).expect("metadata serializes"))
        }
        GenerateKind::Gadget { x, m, terminal } => {
            let xv: BigInt = x.parse().map_err(|_| CliError::Usage(format!("--x: expected an integer, found \"{x}\"")))?;
            let net = gen_gadget(&xv, *m, parse_terminal(terminal)?)?;
            let meta = json!({ "generator": "gadget", "x": x, "m": m, "terminal": "v", "node_count": net.node_count() });
            (net, meta)
        }
    };
    let mut instance = net.to_json();
    instance.push('\n');
    if let Some(path) = &a.meta {
        write(path, &render(&meta))?;
    }
    match &a.out {
        Some(path) => {
            write(path, &instance)?;
            Ok(Output::ok(String::new(), true))
        }
        None => Ok(Output::ok(instance, true)),
    }
}
