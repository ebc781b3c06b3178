//! Exact algorithms: VALID by a two-value tree DP, and the min-M dichotomy.

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::flow::{evaluate, Objectives};
use crate::model::{Capacity, Network, NodeKind, Orientation, Rational};

/// Every pair (x, y) of adjacent nodes, read as "the side of x away from y",
/// ordered by side size so that a side comes after all sides it contains.
pub(crate) fn sides_bottom_up(net: &Network) -> Vec<(usize, usize)> {
    let n = net.node_count();
    let mut parent = vec![usize::MAX; n];
    let mut order = vec![0usize];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut head = 0;
    while head < order.len() {
        let x = order[head];
        head += 1;
        for &(y, _) in net.neighbors(x) {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                order.push(y);
            }
        }
    }
    let mut size = vec![1usize; n];
    for &x in order.iter().skip(1).rev() {
        size[parent[x]] += size[x];
    }
    let mut sides = Vec::with_capacity(2 * net.edge_count());
    for x in 1..n {
        let p = parent[x];
        sides.push((size[x], x, p));
        sides.push((n - size[x], p, x));
    }
    sides.sort();
    sides.into_iter().map(|(_, x, y)| (x, y)).collect()
}

/// Neighbors of `x` other than `y`, in numbering order.
pub(crate) fn children(net: &Network, x: usize, y: usize) -> Vec<usize> {
    net.neighbors(x).iter().map(|&(c, _)| c).filter(|&c| c != y).collect()
}

/// Exact values for one directed edge (u, v).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DartValues {
    /// Least flow demanded by a feasible outgoing semi-orientation of T_v;
    /// `None` is +∞.
    pub i: Option<Rational>,
    /// Greatest flow a feasible entering semi-orientation of T_u can send;
    /// `None` is −∞.
    pub o: Option<Rational>,
    /// Children of v entering v in the i-witness.
    i_enter: Vec<usize>,
    /// Children of u entering u in the o-witness.
    o_enter: Vec<usize>,
}

/// Exact i/o values of every directed edge.
#[derive(Debug, Clone)]
pub struct ExactTables {
    values: std::collections::HashMap<(usize, usize), DartValues>,
}

impl ExactTables {
    pub fn get(&self, u: usize, v: usize) -> &DartValues {
        &self.values[&(u, v)]
    }
}

fn rat(x: &BigInt) -> Rational {
    Rational::from_integer(x.clone())
}

fn rat_usize(x: usize) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

fn min_opt(a: Option<Rational>, b: Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Candidate entering sets: for each child k (in ascending o order) that
/// can enter, and each size d, the set {k} plus the d−1 children of higher
/// o-rank with the largest i. Yields (J, min o over J).
fn entering_sets<'a>(
    i_of: &'a [Option<Rational>],
    o_of: &'a [Option<Rational>],
) -> impl Iterator<Item = (Vec<usize>, Rational)> + 'a {
    let mut by_o: Vec<usize> = (0..i_of.len()).filter(|&j| o_of[j].is_some()).collect();
    by_o.sort_by(|&a, &b| o_of[a].cmp(&o_of[b]).then(a.cmp(&b)));
    (0..by_o.len()).flat_map(move |r| {
        let k = by_o[r];
        let mut rest: Vec<usize> = by_o[r + 1..].to_vec();
        // +∞ first, then descending i.
        rest.sort_by(|&a, &b| match (&i_of[a], &i_of[b]) {
            (None, None) => a.cmp(&b),
            (None, _) => std::cmp::Ordering::Less,
            (_, None) => std::cmp::Ordering::Greater,
            (Some(x), Some(y)) => y.cmp(x).then(a.cmp(&b)),
        });
        let bound = o_of[k].clone().expect("filtered");
        (0..=rest.len()).map(move |extra| {
            let mut j = vec![k];
            j.extend_from_slice(&rest[..extra]);
            j.sort();
            (j, bound.clone())
        })
    })
}

/// Sum of i over children outside `enter`; `None` when one is +∞.
fn outside_sum(i_of: &[Option<Rational>], enter: &[usize]) -> Option<Rational> {
    let mut s = Rational::zero();
    for (j, x) in i_of.iter().enumerate() {
        if enter.binary_search(&j).is_err() {
            s += x.as_ref()?;
        }
    }
    Some(s)
}

fn cap_of(kind: &NodeKind) -> Option<&BigInt> {
    match kind {
        NodeKind::Switch { cap: Capacity::Finite(c) } => Some(c),
        _ => None,
    }
}

/// Least flow into v through (u, v).
fn solve_i(net: &Network, v: usize, i_of: &[Option<Rational>], o_of: &[Option<Rational>]) -> (Option<Rational>, Vec<usize>) {
    let kind = net.kind(v);
    let mut best: Option<(Rational, Vec<usize>)> = None;
    let mut consider = |enter: Vec<usize>, bound: Option<Rational>| {
        let Some(sum) = outside_sum(i_of, &enter) else { return };
        let d = enter.len();
        let (flow, limit) = match kind {
            NodeKind::Source { prod } => (sum / rat_usize(d + 2), min_opt(bound, Some(rat(prod)))),
            NodeKind::Switch { .. } => {
                let cap = cap_of(kind).map(|c| rat(c) / rat_usize(d + 1));
                (sum / rat_usize(d + 1), min_opt(bound, cap))
            }
            NodeKind::Sink { pow } => ((sum + rat(pow)) / rat_usize(d + 1), bound),
        };
        if limit.as_ref().is_some_and(|l| &flow > l) {
            return;
        }
        if best.as_ref().is_none_or(|(b, _)| &flow < b) {
            best = Some((flow, enter));
        }
    };
    consider(Vec::new(), None);
    for (enter, bound) in entering_sets(i_of, o_of) {
        consider(enter, Some(bound));
    }
    match best {
        Some((f, j)) => (Some(f), j),
        None => (None, Vec::new()),
    }
}

/// Greatest flow out of u through (u, v).
fn solve_o(net: &Network, u: usize, i_of: &[Option<Rational>], o_of: &[Option<Rational>]) -> (Option<Rational>, Vec<usize>) {
    let kind = net.kind(u);
    let mut best: Option<(Rational, Vec<usize>)> = None;
    let mut consider = |enter: Vec<usize>, bound: Option<Rational>| {
        let Some(sum) = outside_sum(i_of, &enter) else { return };
        let d = enter.len();
        let f = match kind {
            NodeKind::Source { prod } => {
                let top = min_opt(bound, Some(rat(prod))).expect("production bounds");
                top * rat_usize(d + 1) - sum
            }
            NodeKind::Switch { .. } => {
                if d == 0 {
                    return;
                }
                let cap = cap_of(kind).map(|c| rat(c) / rat_usize(d));
                let top = min_opt(bound, cap).expect("entering set bounds");
                top * rat_usize(d) - sum
            }
            NodeKind::Sink { pow } => {
                if d == 0 {
                    return;
                }
                bound.expect("entering set bounds") * rat_usize(d) - sum - rat(pow)
            }
        };
        if f.is_negative() {
            return;
        }
        if best.as_ref().is_none_or(|(b, _)| &f > b) {
            best = Some((f, enter));
        }
    };
    consider(Vec::new(), None);
    for (enter, bound) in entering_sets(i_of, o_of) {
        consider(enter, Some(bound));
    }
    match best {
        Some((f, j)) => (Some(f), j),
        None => (None, Vec::new()),
    }
}

/// Exact i and o for every directed edge.
pub fn exact_tables(net: &Network) -> ExactTables {
    let mut values: std::collections::HashMap<(usize, usize), DartValues> = Default::default();
    for (x, y) in sides_bottom_up(net) {
        let kids = children(net, x, y);
        let i_of: Vec<Option<Rational>> = kids.iter().map(|&c| values[&(x, c)].i.clone()).collect();
        let o_of: Vec<Option<Rational>> = kids.iter().map(|&c| values[&(c, x)].o.clone()).collect();
        let (i, i_enter) = solve_i(net, x, &i_of, &o_of);
        let (o, o_enter) = solve_o(net, x, &i_of, &o_of);
        let i_enter = i_enter.into_iter().map(|j| kids[j]).collect();
        let o_enter = o_enter.into_iter().map(|j| kids[j]).collect();
        // Side (x away from y) holds i for the dart (y, x) and o for (x, y).
        values.entry((y, x)).or_insert_with(empty_dart).set_i(i, i_enter);
        values.entry((x, y)).or_insert_with(empty_dart).set_o(o, o_enter);
    }
    ExactTables { values }
}

fn empty_dart() -> DartValues {
    DartValues { i: None, o: None, i_enter: Vec::new(), o_enter: Vec::new() }
}

impl DartValues {
    fn set_i(&mut self, i: Option<Rational>, enter: Vec<usize>) {
        self.i = i;
        self.i_enter = enter;
    }

    fn set_o(&mut self, o: Option<Rational>, enter: Vec<usize>) {
        self.o = o;
        self.o_enter = enter;
    }
}

/// Orients the sides named by `todo` following the witnesses. An entry
/// (a, b, true) expands T_b with the i-witness of (a, b); (a, b, false)
/// expands T_a with the o-witness of (a, b).
fn expand(net: &Network, tables: &ExactTables, mut todo: Vec<(usize, usize, bool)>, arcs: &mut [(usize, usize)]) {
    while let Some((a, b, outgoing)) = todo.pop() {
        let (x, away, enter) = if outgoing {
            (b, a, &tables.get(a, b).i_enter)
        } else {
            (a, b, &tables.get(a, b).o_enter)
        };
        for c in children(net, x, away) {
            let e = net.edge_between(x, c).expect("adjacent");
            if enter.contains(&c) {
                arcs[e] = (c, x);
                todo.push((c, x, false));
            } else {
                arcs[e] = (x, c);
                todo.push((x, c, true));
            }
        }
    }
}

/// A feasible orientation, when one exists.
pub fn valid(net: &Network) -> Option<Orientation> {
    valid_with_tables(net, &exact_tables(net))
}

pub(crate) fn valid_with_tables(net: &Network, tables: &ExactTables) -> Option<Orientation> {
    if net.edge_count() == 0 {
        return None;
    }
    let e = net.edges_by_rank()[0];
    let (a, b) = net.edge(e);
    let (a, b) = if net.rank(a) < net.rank(b) { (a, b) } else { (b, a) };
    for (u, v) in [(a, b), (b, a)] {
        let d = tables.get(u, v);
        let (Some(i), Some(o)) = (&d.i, &d.o) else { continue };
        if i > o {
            continue;
        }
        let mut arcs = net.edges().to_vec();
        arcs[e] = (u, v);
        expand(net, tables, vec![(u, v, true), (u, v, false)], &mut arcs);
        return Some(Orientation::from_edge_arcs(arcs));
    }
    None
}

/// The integer instance whose feasible orientations are those of `net` with
/// every load at most `m`: all values are scaled by the denominator of `m`
/// and each production is then replaced by its numerator times Prod.
pub fn truncate_productions(net: &Network, m: &Rational) -> Network {
    assert!(m.is_positive() && m <= &Rational::one(), "truncation factor must lie in (0, 1]");
    let (p, q) = (m.numer(), m.denom());
    let kinds = net
        .nodes()
        .iter()
        .map(|node| match &node.kind {
            NodeKind::Source { prod } => NodeKind::Source { prod: prod * p },
            NodeKind::Switch { cap: Capacity::Finite(c) } => NodeKind::switch(c * q),
            NodeKind::Switch { cap: Capacity::Unbounded } => NodeKind::unbounded_switch(),
            NodeKind::Sink { pow } => NodeKind::Sink { pow: pow * q },
        })
        .collect();
    net.with_kinds(kinds).expect("truncation preserves validity")
}

/// Exact min-M optimum with the number of bisection steps taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinMaxSolution {
    pub orientation: Orientation,
    pub value: Rational,
    pub objectives: Objectives,
    pub iterations: u64,
}

/// Bisection stops once b − a drops below 1/(n^n·σ)²; two distinct loads
/// differ by at least that much.
pub fn termination_gap(net: &Network) -> Rational {
    let n = BigInt::from(net.node_count());
    let nn: BigInt = Pow::pow(&n, net.node_count() as u32);
    let base = nn * net.max_prod();
    Rational::new(BigInt::one(), &base * &base)
}

/// Minimizes the maximum load by bisection over truncated productions.
pub fn solve_min_max_load(net: &Network) -> Option<MinMaxSolution> {
    let first = valid(net)?;
    let first_obj = evaluate(net, &first).expect("VALID returns feasible orientations");
    let gap = termination_gap(net);
    let mut a = Rational::zero();
    let mut best = (first, first_obj);
    let mut iterations = 0u64;
    while &best.1.max_load - &a >= gap {
        iterations += 1;
        let mid = (&a + &best.1.max_load) / Rational::from_integer(BigInt::from(2));
        if mid.is_zero() {
            break;
        }
        match valid(&truncate_productions(net, &mid)) {
            Some(o) => {
                let obj = evaluate(net, &o).expect("truncated feasibility implies feasibility");
                debug_assert!(obj.max_load <= mid);
                best = (o, obj);
            }
            None => a = mid,
        }
    }
    let (orientation, objectives) = best;
    Some(MinMaxSolution { value: objectives.max_load.clone(), orientation, objectives, iterations })
}

/// Upper bound 4·n·log₂(n·σ) on bisection steps.
pub fn iteration_bound(net: &Network) -> f64 {
    let n = net.node_count() as f64;
    let sigma = net.max_prod();
    let log_sigma = match sigma.to_f64() {
        Some(x) if x.is_finite() => x.log2(),
        _ => sigma.bits() as f64,
    };
    4.0 * n * (n.log2() + log_sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{check_feasible, Objective};
    use crate::model::{example_network, NetworkBuilder};
    use crate::oracle::brute_force_optimum;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn pair(prod: u64, pow: u64) -> Network {
        let mut b = NetworkBuilder::new();
        b.source("s", prod).sink("p", pow).edge("s", "p");
        b.build().unwrap()
    }

    #[test]
    fn example_is_valid() {
        let net = example_network();
        let o = valid(&net).unwrap();
        assert!(check_feasible(&net, &o).feasible);
    }

    #[test]
    fn overloaded_pair_is_invalid() {
        assert!(valid(&pair(4, 5)).is_none());
        assert!(solve_min_max_load(&pair(4, 5)).is_none());
    }

    #[test]
    fn truncation_values() {
        let net = example_network();
        let t = truncate_productions(&net, &q(7, 10));
        assert_eq!(t.prod(0).unwrap(), &BigInt::from(700));
        assert_eq!(t.prod(1).unwrap(), &BigInt::from(140));
        assert_eq!(t.kind(5), &NodeKind::sink(500));
        assert_eq!(t.kind(2), &NodeKind::switch(600));
        assert!(valid(&t).is_some());
        assert!(valid(&truncate_productions(&net, &q(1, 2))).is_none());
        let same = truncate_productions(&net, &Rational::one());
        assert_eq!(same.prod(0).unwrap(), &BigInt::from(100));
    }

    #[test]
    fn min_max_load_values() {
        let sol = solve_min_max_load(&example_network()).unwrap();
        assert_eq!(sol.value, q(7, 10));
        assert!(sol.iterations as f64 <= iteration_bound(&example_network()));
        assert_eq!(solve_min_max_load(&pair(4, 4)).unwrap().value, Rational::one());
        assert_eq!(solve_min_max_load(&pair(10, 5)).unwrap().value, q(1, 2));
    }

    #[test]
    fn matches_oracle_on_example() {
        let net = example_network();
        let oracle = brute_force_optimum(&net, Objective::MinMaxLoad).unwrap().unwrap();
        assert_eq!(solve_min_max_load(&net).unwrap().value, oracle.value);
    }

    #[test]
    fn exact_values_on_example() {
        let net = example_network();
        let t = exact_tables(&net);
        let (s1, w1, w2, p2, w3) = (0, 2, 3, 6, 4);
        // Leaf sink: demand equals its power; a sink cannot feed an edge.
        assert_eq!(t.get(w3, p2).i, Some(q(20, 1)));
        assert_eq!(t.get(p2, w3).o, None);
        // T_{w1} away from w2, with s1 feeding w1: w1 demands p1 only.
        assert_eq!(t.get(w2, w1).i, Some(q(25, 1)));
        assert!(t.get(s1, w1).o.is_some());
    }

    #[test]
    fn iteration_bound_value() {
        let b = iteration_bound(&pair(4, 4));
        assert!((b - 4.0 * 2.0 * 3.0).abs() < 1e-9);
    }
}
