//! Seeded benchmark suites reported as CSV.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};

use gridtree_core::exact::solve_min_max_load;
use gridtree_core::flow::Objective;
use gridtree_core::fptas::{solve_max_min_load_fptas, solve_min_reserve_fptas};
use gridtree_core::hardgen::{gen_random_tree, Profile};
use gridtree_core::oracle::brute_force_optimum;
use gridtree_core::rounding::build_grids;
use gridtree_core::Rational;

use crate::report::exact;
use crate::{parse_rational, CliError, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchObjective {
    MinMaxLoad,
    MaxMinLoad,
    MinReserve,
    /// Exhaustive min-R, for comparison.
    OracleMinR,
}

impl BenchObjective {
    fn name(self) -> &'static str {
        match self {
            BenchObjective::MinMaxLoad => "min-max-load",
            BenchObjective::MaxMinLoad => "max-min-load",
            BenchObjective::MinReserve => "min-reserve",
            BenchObjective::OracleMinR => "oracle-min-r",
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum, default_value = "random")]
    suite: Suite,
    /// Node counts.
    #[arg(long, value_delimiter = ',', default_value = "6,8,10")]
    sizes: Vec<usize>,
    /// Seeds 0..N per size.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value = "balanced")]
    profile: String,
    #[arg(long, default_value = "1/10")]
    eps_prime: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "min-max-load,max-min-load,min-reserve")]
    objectives: Vec<BenchObjective>,
    /// Leave the wall-time column empty so reports are reproducible.
    #[arg(long)]
    omit_time: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One CSV row.
#[derive(Debug, serde::Serialize)]
pub struct Row {
    pub instance: String,
    pub n: usize,
    pub grid_size: String,
    pub eps_prime: String,
    pub objective: &'static str,
    pub value: String,
    pub wall_ms: String,
    pub rational_ops: String,
    /// Dichotomy iterations for min-M; window tables built for the schemes;
    /// orientations enumerated for the oracle.
    pub iterations: String,
}

pub fn run(a: &BenchArgs) -> Result<Output, CliError> {
    let eps = parse_rational(&a.eps_prime, "--eps-prime")?;
    let profile = Profile::by_name(&a.profile)
        .ok_or_else(|| CliError::Usage(format!("--profile: unknown profile \"{}\"", a.profile)))?;
    let mut rows = Vec::new();
    for &n in &a.sizes {
        for seed in 0..a.seeds {
            let net = gen_random_tree(n, seed, &profile)?;
            let id = format!("random-n{n}-s{seed}");
            for &obj in &a.objectives {
                rows.push(measure(&id, &net, obj, &eps, a.omit_time)?);
            }
        }
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Csv(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("CSV output is UTF-8");
    match &a.out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| CliError::Write { path: path.display().to_string(), message: e.to_string() })?;
            Ok(Output { code: 0, stdout: String::new(), stderr: String::new() })
        }
        None => Ok(Output { code: 0, stdout: text, stderr: String::new() }),
    }
}

fn measure(
    id: &str,
    net: &gridtree_core::Network,
    obj: BenchObjective,
    eps: &Rational,
    omit_time: bool,
) -> Result<Row, CliError> {
    let start = Instant::now();
    let mut row = Row {
        instance: id.to_string(),
        n: net.node_count(),
        grid_size: String::new(),
        eps_prime: String::new(),
        objective: obj.name(),
        value: String::new(),
        wall_ms: String::new(),
        rational_ops: String::new(),
        iterations: String::new(),
    };
    let show = |v: Option<&Rational>| v.map_or("infeasible".to_string(), exact);
    match obj {
        BenchObjective::MinMaxLoad => {
            let s = solve_min_max_load(net);
            row.value = show(s.as_ref().map(|s| &s.value));
            row.iterations = s.map_or(String::new(), |s| s.iterations.to_string());
        }
        BenchObjective::MaxMinLoad | BenchObjective::MinReserve => {
            let s = if obj == BenchObjective::MaxMinLoad {
                solve_max_min_load_fptas(net, eps)?
            } else {
                solve_min_reserve_fptas(net, eps)?
            };
            row.eps_prime = exact(eps);
            row.grid_size = build_grids(net, eps)?.flow_grid().len().to_string();
            row.value = show(s.as_ref().map(|s| &s.value));
            if let Some(s) = s {
                row.rational_ops = s.stats.rational_ops.to_string();
                row.iterations = s.stats.tables.to_string();
            }
        }
        BenchObjective::OracleMinR => {
            let best = brute_force_optimum(net, Objective::MinReserve)?;
            row.value = show(best.as_ref().map(|b| &b.value));
            row.iterations = (1u64 << net.edge_count()).to_string();
        }
    }
    if !omit_time {
        row.wall_ms = format!("{:.3}", start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(row)
}
