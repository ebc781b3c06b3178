use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gridtree_bench::{eps_primes, feasible_tree};
use gridtree_core::exact::solve_min_max_load;
use gridtree_core::flow::{compute_flow, objectives, Objective};
use gridtree_core::fptas::{solve_max_min_load_fptas, solve_min_reserve_fptas};
use gridtree_core::oracle::brute_force_optimum;
use gridtree_core::rounding::rounded_flow;
use gridtree_core::build_grids;

fn flow(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow");
    for n in [8, 12, 16] {
        let (net, o) = feasible_tree(n);
        g.bench_with_input(BenchmarkId::new("exact", n), &n, |b, _| {
            b.iter(|| objectives(&net, &compute_flow(&net, &o)).unwrap())
        });
        let ctx = build_grids(&net, &eps_primes()[1]).unwrap();
        g.bench_with_input(BenchmarkId::new("rounded", n), &n, |b, _| b.iter(|| rounded_flow(&net, &o, &ctx)));
    }
    g.finish();
}

fn exact_vs_oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("min_max_load");
    g.sample_size(10);
    for n in [6, 9, 12] {
        let (net, _) = feasible_tree(n);
        g.bench_with_input(BenchmarkId::new("dichotomy", n), &n, |b, _| b.iter(|| solve_min_max_load(&net)));
        g.bench_with_input(BenchmarkId::new("oracle", n), &n, |b, _| {
            b.iter(|| brute_force_optimum(&net, Objective::MinMaxLoad).unwrap())
        });
    }
    g.finish();
}

fn schemes(c: &mut Criterion) {
    let mut g = c.benchmark_group("schemes");
    g.sample_size(10);
    let (net, _) = feasible_tree(10);
    for eps in eps_primes() {
        let label = eps.to_string();
        if let Ok(Some(s)) = solve_min_reserve_fptas(&net, &eps) {
            println!(
                "min-reserve eps'={label}: grid {} tables {} entries {} rational ops {}",
                s.stats.grid_size, s.stats.tables, s.stats.entries, s.stats.rational_ops
            );
        }
        g.bench_with_input(BenchmarkId::new("max_min_load", &label), &eps, |b, eps| {
            b.iter(|| solve_max_min_load_fptas(&net, eps).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("min_reserve", &label), &eps, |b, eps| {
            b.iter(|| solve_min_reserve_fptas(&net, eps).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, flow, exact_vs_oracle, schemes);
criterion_main!(benches);
