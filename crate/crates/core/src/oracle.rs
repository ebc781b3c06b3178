//! Exhaustive ground truth: every orientation of a small tree, and every
//! semi-orientation on either side of a directed edge.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::flow::{evaluate, Objective, Objectives};
use crate::model::{Capacity, Network, NodeKind, Orientation, Rational};
use crate::rounding::{LoadWindow, RoundingContext};

pub const DEFAULT_LIMIT: usize = 24;
/// Environment variable overriding the enumeration limit.
pub const LIMIT_ENV: &str = "GRIDTREE_ORACLE_LIMIT";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    /// Largest number of free edges the oracle will enumerate.
    pub limit: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { limit: DEFAULT_LIMIT }
    }
}

impl OracleConfig {
    /// Default configuration, with the limit taken from `GRIDTREE_ORACLE_LIMIT`
    /// when it is set to an integer.
    pub fn from_env() -> Self {
        std::env::var(LIMIT_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(|limit| OracleConfig { limit })
            .unwrap_or_default()
    }

    fn admit(&self, edges: usize) -> Result<(), OracleError> {
        if edges > self.limit || edges >= 64 {
            Err(OracleError::LimitExceeded { edges, limit: self.limit })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{edges} edges exceed the enumeration limit of {limit}")]
    LimitExceeded { edges: usize, limit: usize },
}

/// Every orientation of a network, in counter order.
///
/// Edges are sorted by (smaller endpoint rank, larger endpoint rank); bit `j`
/// of the counter orients the `j`-th edge from its lower-ranked endpoint when
/// clear and toward it when set.
#[derive(Debug, Clone)]
pub struct Orientations<'a> {
    net: &'a Network,
    order: Vec<usize>,
    next: u64,
    end: u64,
}

impl Orientations<'_> {
    pub fn total(&self) -> u64 {
        self.end
    }
}

impl Iterator for Orientations<'_> {
    type Item = Orientation;

    fn next(&mut self) -> Option<Orientation> {
        if self.next >= self.end {
            return None;
        }
        let o = orientation_from_mask(self.net, &self.order, self.next);
        self.next += 1;
        Some(o)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

/// Orientation selected by counter value `mask` in the enumeration order.
pub fn orientation_from_mask(net: &Network, order: &[usize], mask: u64) -> Orientation {
    let mut arcs = net.edges().to_vec();
    for (bit, &e) in order.iter().enumerate() {
        let (a, b) = net.edge(e);
        let (lo, hi) = if net.rank(a) < net.rank(b) { (a, b) } else { (b, a) };
        arcs[e] = if mask >> bit & 1 == 0 { (lo, hi) } else { (hi, lo) };
    }
    Orientation::from_edge_arcs(arcs)
}

pub fn enumerate_orientations(net: &Network) -> Result<Orientations<'_>, OracleError> {
    enumerate_orientations_with(net, &OracleConfig::from_env())
}

pub fn enumerate_orientations_with<'a>(
    net: &'a Network,
    cfg: &OracleConfig,
) -> Result<Orientations<'a>, OracleError> {
    cfg.admit(net.edge_count())?;
    Ok(Orientations {
        net,
        order: net.edges_by_rank(),
        next: 0,
        end: 1u64 << net.edge_count(),
    })
}

/// Best orientation found by exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOptimum {
    pub orientation: Orientation,
    pub value: Rational,
    pub objectives: Objectives,
    /// Number of feasible orientations seen.
    pub count_feasible: u64,
}

/// Exact optimum of `objective`; ties go to the earliest orientation.
pub fn brute_force_optimum(
    net: &Network,
    objective: Objective,
) -> Result<Option<OracleOptimum>, OracleError> {
    brute_force_optimum_with(net, objective, &OracleConfig::from_env())
}

pub fn brute_force_optimum_with(
    net: &Network,
    objective: Objective,
    cfg: &OracleConfig,
) -> Result<Option<OracleOptimum>, OracleError> {
    let mut best: Option<OracleOptimum> = None;
    let mut count = 0u64;
    for o in enumerate_orientations_with(net, cfg)? {
        let Some(obj) = evaluate(net, &o) else { continue };
        count += 1;
        let value = objective.value(&obj).clone();
        let better = match &best {
            None => true,
            Some(b) => objective.improves(&value, &b.value),
        };
        if better {
            best = Some(OracleOptimum { orientation: o, value, objectives: obj, count_feasible: 0 });
        }
    }
    Ok(best.map(|b| OracleOptimum { count_feasible: count, ..b }))
}

/// Values of i and o for one directed edge and rounded flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoValues {
    /// Minimum demanded flow; `None` stands for +∞.
    pub i: Option<Rational>,
    /// Maximum producible flow; `None` stands for −∞.
    pub o: Option<Rational>,
}

/// Exhaustive i(u,v,f̃) and o(u,v,f̃) under the rounded-load window.
pub fn brute_force_io(
    net: &Network,
    arc: (usize, usize),
    f_tilde: &Rational,
    window: &LoadWindow,
    ctx: &RoundingContext,
) -> Result<IoValues, OracleError> {
    let cfg = OracleConfig::from_env();
    Ok(IoValues {
        i: brute_force_i(net, arc, f_tilde, window, ctx, &cfg)?,
        o: brute_force_o(net, arc, f_tilde, window, ctx, &cfg)?,
    })
}

/// Minimum exact flow on (u,v) over feasible outgoing semi-orientations of
/// T_v whose rounded flow on (u,v) is `f_tilde`.
pub fn brute_force_i(
    net: &Network,
    (u, v): (usize, usize),
    f_tilde: &Rational,
    window: &LoadWindow,
    ctx: &RoundingContext,
    cfg: &OracleConfig,
) -> Result<Option<Rational>, OracleError> {
    let side = Side::new(net, v, u);
    cfg.admit(side.edges.len())?;
    let mut best: Option<Rational> = None;
    for mask in 0..1u64 << side.edges.len() {
        let arcs = side.arcs(net, mask, (u, v));
        let Some(eval) = side.evaluate(net, &arcs, None, window, ctx) else { continue };
        if eval.rounded[v].as_ref() != Some(f_tilde) || eval.max_entering.is_some() {
            continue;
        }
        let f = eval.flow[v].as_ref().expect("head has an entering arc").0.clone();
        if best.as_ref().is_none_or(|b| &f < b) {
            best = Some(f);
        }
    }
    Ok(best)
}

/// Maximum flow f on (u,v) over feasible entering semi-orientations of T_u
/// when (u,v) carries rounded flow `f_tilde`.
pub fn brute_force_o(
    net: &Network,
    (u, v): (usize, usize),
    f_tilde: &Rational,
    window: &LoadWindow,
    ctx: &RoundingContext,
    cfg: &OracleConfig,
) -> Result<Option<Rational>, OracleError> {
    let side = Side::new(net, u, v);
    cfg.admit(side.edges.len())?;
    let mut best: Option<Rational> = None;
    for mask in 0..1u64 << side.edges.len() {
        let arcs = side.arcs(net, mask, (u, v));
        let Some(eval) = side.evaluate(net, &arcs, Some((v, f_tilde)), window, ctx) else {
            continue;
        };
        let f = eval
            .max_entering
            .expect("a feasible entering semi-orientation bounds its flow");
        if best.as_ref().is_none_or(|b| &f > b) {
            best = Some(f);
        }
    }
    Ok(best)
}

/// Exact i-value of every finite entry for one directed edge: rounded flow
/// on the edge mapped to the least exact flow.
pub fn brute_force_i_map(
    net: &Network,
    (u, v): (usize, usize),
    window: &LoadWindow,
    ctx: &RoundingContext,
    cfg: &OracleConfig,
) -> Result<Vec<(Rational, Rational)>, OracleError> {
    let side = Side::new(net, v, u);
    cfg.admit(side.edges.len())?;
    let mut map: std::collections::BTreeMap<Rational, Rational> = Default::default();
    for mask in 0..1u64 << side.edges.len() {
        let arcs = side.arcs(net, mask, (u, v));
        let Some(eval) = side.evaluate(net, &arcs, None, window, ctx) else { continue };
        let key = eval.rounded[v].clone().expect("head has an entering arc");
        let f = eval.flow[v].as_ref().expect("head has an entering arc").0.clone();
        map.entry(key)
            .and_modify(|cur| {
                if f < *cur {
                    *cur = f.clone()
                }
            })
            .or_insert(f);
    }
    Ok(map.into_iter().collect())
}

/// One side of the tree split at an edge.
struct Side {
    inside: Vec<bool>,
    edges: Vec<usize>,
}

struct SideEval {
    /// Affine flow α + β·f per inside node (f is the flow on the cut arc
    /// when the side is its tail).
    flow: Vec<Option<(Rational, Rational)>>,
    rounded: Vec<Option<Rational>>,
    /// Largest admissible f when the cut arc leaves the side.
    max_entering: Option<Rational>,
}

impl Side {
    /// Component of `root` once the edge to `other` is removed.
    fn new(net: &Network, root: usize, other: usize) -> Self {
        let mut inside = vec![false; net.node_count()];
        inside[root] = true;
        let mut edges = Vec::new();
        let mut stack = vec![root];
        while let Some(x) = stack.pop() {
            for &(y, e) in net.neighbors(x) {
                if !inside[y] && !(x == root && y == other) {
                    inside[y] = true;
                    edges.push(e);
                    stack.push(y);
                }
            }
        }
        edges.sort_by_key(|&e| net.rank_key(e));
        Side { inside, edges }
    }

    /// Arc per edge index (only inside edges and the cut edge are set).
    fn arcs(&self, net: &Network, mask: u64, cut: (usize, usize)) -> Vec<Option<(usize, usize)>> {
        let mut arcs = vec![None; net.edge_count()];
        for (bit, &e) in self.edges.iter().enumerate() {
            let (a, b) = net.edge(e);
            let (lo, hi) = if net.rank(a) < net.rank(b) { (a, b) } else { (b, a) };
            arcs[e] = Some(if mask >> bit & 1 == 0 { (lo, hi) } else { (hi, lo) });
        }
        let e = net.edge_between(cut.0, cut.1).expect("cut arc is an edge");
        arcs[e] = Some(cut);
        arcs
    }

    /// Flows of the inside nodes; `external` is the outside head of the cut
    /// arc with its rounded flow. Returns `None` when some constraint fails
    /// for every f ≥ 0.
    fn evaluate(
        &self,
        net: &Network,
        arcs: &[Option<(usize, usize)>],
        external: Option<(usize, &Rational)>,
        window: &LoadWindow,
        ctx: &RoundingContext,
    ) -> Option<SideEval> {
        let n = net.node_count();
        let mut flow: Vec<Option<(Rational, Rational)>> = vec![None; n];
        let mut rounded: Vec<Option<Rational>> = vec![None; n];
        let mut in_deg = vec![0usize; n];
        let mut pending = vec![0usize; n];
        let ext = external.map(|(x, _)| x);
        for x in (0..n).filter(|&x| self.inside[x]) {
            for &(_, e) in net.neighbors(x) {
                match arcs[e] {
                    Some((_, h)) if h == x => in_deg[x] += 1,
                    Some((t, h)) if t == x && Some(h) != ext => pending[x] += 1,
                    _ => {}
                }
            }
        }
        let mut ready: Vec<usize> = (0..n).filter(|&x| self.inside[x] && pending[x] == 0).collect();
        let mut head = 0;
        while head < ready.len() {
            let x = ready[head];
            head += 1;
            let mut alpha = Rational::zero();
            let mut beta = Rational::zero();
            let mut items: Vec<Rational> = Vec::new();
            for &(y, e) in net.neighbors(x) {
                if let Some((t, _)) = arcs[e] {
                    if t != x {
                        continue;
                    }
                    match external {
                        Some((z, ft)) if z == y => {
                            beta += Rational::one();
                            items.push(ft.clone());
                        }
                        _ => {
                            let (a, b) = flow[y].as_ref().expect("successor evaluated first");
                            alpha += a;
                            beta += b;
                            items.push(rounded[y].clone().expect("successor evaluated first"));
                        }
                    }
                }
            }
            let din = in_deg[x];
            let (divisor, extra) = match net.kind(x) {
                NodeKind::Source { .. } => (din + 1, None),
                NodeKind::Switch { .. } => (din, None),
                NodeKind::Sink { pow } => (din, Some(Rational::from_integer(pow.clone()))),
            };
            if divisor == 0 {
                return None;
            }
            let d = Rational::from_integer(BigInt::from(divisor));
            if let Some(p) = &extra {
                alpha += p;
            }
            flow[x] = Some((alpha / &d, beta / &d));
            let list: Vec<&Rational> = extra.iter().chain(items.iter()).collect();
            rounded[x] = Some(ctx.oplus(list, divisor));
            for &(y, e) in net.neighbors(x) {
                if let Some((t, h)) = arcs[e] {
                    if h == x && self.inside[y] && t == y {
                        pending[y] -= 1;
                        if pending[y] == 0 {
                            ready.push(y);
                        }
                    }
                }
            }
        }

        let mut max_entering: Option<Rational> = None;
        let mut tighten = |alpha: &Rational, beta: &Rational, limit: Rational| -> bool {
            if alpha > &limit {
                return false;
            }
            if beta.is_positive() {
                let bound = (limit - alpha) / beta;
                if max_entering.as_ref().is_none_or(|m| &bound < m) {
                    max_entering = Some(bound);
                }
            }
            true
        };
        for x in (0..n).filter(|&x| self.inside[x]) {
            let (alpha, beta) = flow[x].as_ref()?;
            match net.kind(x) {
                NodeKind::Switch { cap: Capacity::Finite(c) } => {
                    let d = Rational::from_integer(BigInt::from(in_deg[x]));
                    if !tighten(&(alpha * &d), &(beta * &d), Rational::from_integer(c.clone())) {
                        return None;
                    }
                }
                NodeKind::Source { prod } => {
                    if !tighten(alpha, beta, Rational::from_integer(prod.clone())) {
                        return None;
                    }
                    if !window.admits(rounded[x].as_ref()?, prod) {
                        return None;
                    }
                }
                _ => {}
            }
        }
        if external.is_some() {
            debug_assert!(max_entering.as_ref().is_none_or(|m| !m.is_negative()));
        }
        Some(SideEval { flow, rounded, max_entering })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{example_network, NetworkBuilder};
    use crate::rounding::build_grids;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn orientation_counts() {
        let mut b = NetworkBuilder::new();
        b.source("s", 4).sink("p", 4).edge("s", "p");
        let net = b.build().unwrap();
        assert_eq!(enumerate_orientations(&net).unwrap().count(), 2);
        let mut b = NetworkBuilder::new();
        b.source("s", 4).unbounded_switch("w").sink("p", 4).edge("s", "w").edge("w", "p");
        let net = b.build().unwrap();
        assert_eq!(enumerate_orientations(&net).unwrap().count(), 4);
        let all: Vec<_> = enumerate_orientations(&example_network()).unwrap().collect();
        assert_eq!(all.len(), 128);
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 128);
    }

    #[test]
    fn limit_is_enforced() {
        let cfg = OracleConfig { limit: 6 };
        let err = enumerate_orientations_with(&example_network(), &cfg).unwrap_err();
        assert_eq!(err, OracleError::LimitExceeded { edges: 7, limit: 6 });
    }

    #[test]
    fn example_optima() {
        let net = example_network();
        let min_m = brute_force_optimum(&net, Objective::MinMaxLoad).unwrap().unwrap();
        assert_eq!(min_m.value, q(7, 10));
        let arcs: Vec<(&str, &str)> = min_m
            .orientation
            .arcs()
            .iter()
            .map(|&(t, h)| (net.id(t), net.id(h)))
            .collect();
        assert!(arcs.contains(&("w1", "w2")) && arcs.contains(&("w2", "w3")));
        let max_m = brute_force_optimum(&net, Objective::MaxMinLoad).unwrap().unwrap();
        assert_eq!(max_m.value, q(3, 5));
        let min_r = brute_force_optimum(&net, Objective::MinReserve).unwrap().unwrap();
        assert_eq!(min_r.value, q(1, 5));
        assert_eq!(min_m.count_feasible, max_m.count_feasible);
    }

    #[test]
    fn leaf_sink_entry() {
        let net = example_network();
        let ctx = build_grids(&net, &q(1, 10)).unwrap();
        let (w3, p2) = (4, 6);
        let w = LoadWindow::full();
        let a20 = ctx.round_down(&q(20, 1));
        let io = brute_force_io(&net, (w3, p2), &a20, &w, &ctx).unwrap();
        assert_eq!(io.i, Some(q(20, 1)));
        let io = brute_force_io(&net, (w3, p2), &q(20, 1), &w, &ctx).unwrap();
        assert_eq!(io.i, None);
    }

    #[test]
    fn semi_orientation_example() {
        let net = example_network();
        let ctx = build_grids(&net, &q(1, 10)).unwrap();
        let (w1, w2) = (2, 3);
        let full = LoadWindow::full();
        let map = brute_force_i_map(&net, (w2, w1), &full, &ctx, &OracleConfig::default()).unwrap();
        // T_{w1} oriented w1→s1, s1→p3, w1→p1 demands 55; with s1→w1 the
        // demand drops to 25.
        let key55 = map.iter().find(|(_, f)| f == &q(55, 1)).unwrap().0.clone();
        let key25 = map.iter().find(|(_, f)| f == &q(25, 1)).unwrap().0.clone();
        assert!(key55 < q(55, 1) && key55 > q(54, 1));
        assert!(key25 < q(25, 1) && key25 > q(24, 1));
        let io = brute_force_io(&net, (w2, w1), &key25, &full, &ctx).unwrap();
        assert_eq!(io.i, Some(q(25, 1)));
        // s2 would carry its own 20 plus the rounded 25: load above 1.
        assert_eq!(io.o, None);
        let wide = LoadWindow::new(Rational::zero(), q(4, 1));
        let io = brute_force_io(&net, (w2, w1), &key25, &wide, &ctx).unwrap();
        assert_eq!(io.o, Some(Rational::zero()));
    }

    #[test]
    fn downward_closure_on_example_arcs() {
        let net = example_network();
        let ctx = build_grids(&net, &q(1, 4)).unwrap();
        let w = LoadWindow::full();
        let cfg = OracleConfig::default();
        for &(a, b) in net.edges() {
            for (u, v) in [(a, b), (b, a)] {
                for (key, _) in brute_force_i_map(&net, (u, v), &w, &ctx, &cfg).unwrap() {
                    let Some(top) = brute_force_o(&net, (u, v), &key, &w, &ctx, &cfg).unwrap() else {
                        continue;
                    };
                    let side = Side::new(&net, u, v);
                    let mut witnessed = false;
                    for mask in 0..1u64 << side.edges.len() {
                        let arcs = side.arcs(&net, mask, (u, v));
                        let Some(eval) = side.evaluate(&net, &arcs, Some((v, &key)), &w, &ctx) else {
                            continue;
                        };
                        let limit = eval.max_entering.unwrap();
                        if limit == top {
                            witnessed = true;
                        }
                        // Every f' in [0, limit] keeps all constraints.
                        for f in [Rational::zero(), &limit / Rational::from_integer(2.into()), limit.clone()] {
                            for x in (0..net.node_count()).filter(|&x| side.inside[x]) {
                                let (al, be) = eval.flow[x].clone().unwrap();
                                let fx = al + be * &f;
                                match net.kind(x) {
                                    NodeKind::Source { prod } => {
                                        assert!(fx <= Rational::from_integer(prod.clone()))
                                    }
                                    NodeKind::Switch { cap: Capacity::Finite(c) } => {
                                        let d = Rational::from_integer(BigInt::from(
                                            net.neighbors(x)
                                                .iter()
                                                .filter(|&&(_, e)| arcs[e].unwrap().1 == x)
                                                .count(),
                                        ));
                                        assert!(fx * d <= Rational::from_integer(c.clone()));
                                    }
                                    _ => {}
                                }
                            }
                        }
                    }
                    assert!(witnessed);
                }
            }
        }
    }
}
