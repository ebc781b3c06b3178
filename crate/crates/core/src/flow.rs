//! Equal-split flows, feasibility, and load objectives.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Capacity, Network, NodeKind, Orientation, Rational};

/// Exact flow induced by an orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowAssignment {
    arc_flow: Vec<Rational>,
    entering: Vec<Option<Rational>>,
    in_degree: Vec<usize>,
}

impl FlowAssignment {
    /// Flow carried by edge `e` in its oriented direction.
    pub fn arc_flow(&self, e: usize) -> &Rational {
        &self.arc_flow[e]
    }

    pub fn arc_flows(&self) -> &[Rational] {
        &self.arc_flow
    }

    /// F(v), or `None` for a switch or sink without entering arc.
    pub fn entering(&self, v: usize) -> Option<&Rational> {
        self.entering[v].as_ref()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_degree[v]
    }

    /// load(s) = F(s)/Prod(s) for a source `s`.
    pub fn load(&self, net: &Network, s: usize) -> Option<Rational> {
        let prod = net.prod(s)?;
        let f = self.entering[s].as_ref()?;
        Some(f / Rational::from_integer(prod.clone()))
    }

    /// Loads of all sources, in node order.
    pub fn loads(&self, net: &Network) -> Vec<(usize, Rational)> {
        net.sources()
            .filter_map(|s| self.load(net, s).map(|l| (s, l)))
            .collect()
    }
}

/// Nodes of `net` ordered so that every arc goes from a later to an earlier
/// position: successors come first.
pub(crate) fn successor_first_order(net: &Network, o: &Orientation) -> Vec<usize> {
    let n = net.node_count();
    let mut pending: Vec<usize> = (0..n)
        .map(|v| net.degree(v) - o.in_degree(net, v))
        .collect();
    let mut order: Vec<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(u, e) in net.neighbors(v) {
            if o.arc(e) == (u, v) {
                pending[u] -= 1;
                if pending[u] == 0 {
                    order.push(u);
                }
            }
        }
    }
    debug_assert_eq!(order.len(), n);
    order
}

/// Computes the equal-split flow of `o` by sweeping from the sinks upward.
pub fn compute_flow(net: &Network, o: &Orientation) -> FlowAssignment {
    let n = net.node_count();
    let mut entering: Vec<Option<Rational>> = vec![None; n];
    let mut in_degree = vec![0usize; n];
    for v in successor_first_order(net, o) {
        let mut out = Rational::zero();
        let mut din = 0usize;
        for &(w, e) in net.neighbors(v) {
            if o.arc(e).0 == v {
                out += entering[w].as_ref().expect("successor computed first");
            } else {
                din += 1;
            }
        }
        in_degree[v] = din;
        entering[v] = match net.kind(v) {
            NodeKind::Source { .. } => Some(out / Rational::from_integer(BigInt::from(din + 1))),
            NodeKind::Switch { .. } if din > 0 => {
                Some(out / Rational::from_integer(BigInt::from(din)))
            }
            NodeKind::Sink { pow } if din > 0 => {
                Some((out + Rational::from_integer(pow.clone())) / Rational::from_integer(BigInt::from(din)))
            }
            _ => None,
        };
    }
    let arc_flow = o
        .arcs()
        .iter()
        .map(|&(_, h)| entering[h].clone().expect("head of an arc has an entering arc"))
        .collect();
    FlowAssignment { arc_flow, entering, in_degree }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Demand,
    Capacity,
    Production,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub node: usize,
    pub kind: ViolationKind,
    /// Offending quantity: F(v)·d⁻(v) for switches, F(v) for sources.
    pub value: Option<Rational>,
    /// Capacity or production that was exceeded.
    pub limit: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// How the demand constraint treats switches without entering arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemandRule {
    /// Every switch and sink needs an entering arc.
    #[default]
    Strict,
    /// A switch without entering arc is accepted when its outgoing flow is
    /// zero (the switch is simply not activated).
    AllowIdleSwitches,
}

/// Checks the demand and capacity constraints of `o`.
pub fn check_feasible(net: &Network, o: &Orientation) -> FeasibilityReport {
    check_feasible_with(net, o, &compute_flow(net, o), DemandRule::Strict)
}

/// Checks feasibility of a precomputed flow under the given demand rule.
pub fn check_feasible_with(
    net: &Network,
    o: &Orientation,
    fa: &FlowAssignment,
    rule: DemandRule,
) -> FeasibilityReport {
    let mut violations = Vec::new();
    for v in 0..net.node_count() {
        let din = fa.in_degree(v);
        match (net.kind(v), fa.entering(v)) {
            (NodeKind::Switch { .. }, None) => {
                let idle = rule == DemandRule::AllowIdleSwitches
                    && net
                        .neighbors(v)
                        .iter()
                        .filter(|&&(_, e)| o.arc(e).0 == v)
                        .all(|&(_, e)| fa.arc_flow(e).is_zero());
                if !idle {
                    violations.push(Violation { node: v, kind: ViolationKind::Demand, value: None, limit: None });
                }
            }
            (NodeKind::Sink { .. }, None) => {
                violations.push(Violation { node: v, kind: ViolationKind::Demand, value: None, limit: None });
            }
            (NodeKind::Switch { cap: Capacity::Finite(cap) }, Some(f)) => {
                let total = f * Rational::from_integer(BigInt::from(din));
                let cap = Rational::from_integer(cap.clone());
                if total > cap {
                    violations.push(Violation {
                        node: v,
                        kind: ViolationKind::Capacity,
                        value: Some(total),
                        limit: Some(cap),
                    });
                }
            }
            (NodeKind::Source { prod }, Some(f)) => {
                let prod = Rational::from_integer(prod.clone());
                if f > &prod {
                    violations.push(Violation {
                        node: v,
                        kind: ViolationKind::Production,
                        value: Some(f.clone()),
                        limit: Some(prod),
                    });
                }
            }
            _ => {}
        }
    }
    FeasibilityReport { feasible: violations.is_empty(), violations }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objectives {
    pub min_load: Rational,
    pub max_load: Rational,
    pub reserve: Rational,
}

impl Objectives {
    /// Min, max and reserve of a nonempty list of loads.
    pub fn from_loads<'a>(loads: impl IntoIterator<Item = &'a Rational>) -> Option<Self> {
        let mut it = loads.into_iter();
        let first = it.next()?;
        let (mut lo, mut hi) = (first, first);
        for l in it {
            if l < lo {
                lo = l;
            }
            if l > hi {
                hi = l;
            }
        }
        Some(Objectives { min_load: lo.clone(), max_load: hi.clone(), reserve: hi - lo })
    }
}

/// The three optimization problems over feasible orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    /// Minimize the maximum load.
    MinMaxLoad,
    /// Maximize the minimum load.
    MaxMinLoad,
    /// Minimize the load reserve (max − min).
    MinReserve,
}

impl Objective {
    pub fn value(self, obj: &Objectives) -> &Rational {
        match self {
            Objective::MinMaxLoad => &obj.max_load,
            Objective::MaxMinLoad => &obj.min_load,
            Objective::MinReserve => &obj.reserve,
        }
    }

    /// Whether `candidate` is strictly better than `incumbent`.
    pub fn improves(self, candidate: &Rational, incumbent: &Rational) -> bool {
        match self {
            Objective::MaxMinLoad => candidate > incumbent,
            Objective::MinMaxLoad | Objective::MinReserve => candidate < incumbent,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("network has no source")]
    NoSource,
}

/// Minimum load, maximum load and load reserve over all sources.
pub fn objectives(net: &Network, fa: &FlowAssignment) -> Result<Objectives, FlowError> {
    let loads = fa.loads(net);
    Objectives::from_loads(loads.iter().map(|(_, l)| l)).ok_or(FlowError::NoSource)
}

/// Objectives of `o` when it is feasible.
pub fn evaluate(net: &Network, o: &Orientation) -> Option<Objectives> {
    let fa = compute_flow(net, o);
    if !check_feasible_with(net, o, &fa, DemandRule::Strict).feasible {
        return None;
    }
    objectives(net, &fa).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{example_network, NetworkBuilder};
    use num_traits::One;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn orient(arcs: &[(&str, &str)]) -> (Network, Orientation) {
        let net = example_network();
        let o = Orientation::from_ids(&net, arcs).unwrap();
        (net, o)
    }

    #[test]
    fn orientation_b_flows() {
        let (net, o) = orient(&[
            ("s1", "w1"), ("s1", "p3"), ("s2", "w3"), ("w1", "p1"),
            ("w1", "w2"), ("w3", "w2"), ("w3", "p2"),
        ]);
        let fa = compute_flow(&net, &o);
        assert_eq!(fa.arc_flow(0), &q(50, 1));
        assert_eq!(fa.arc_flow(1), &q(10, 1));
        assert_eq!(fa.arc_flow(2), &q(20, 1));
        assert_eq!(fa.entering(0), Some(&q(60, 1)));
        assert_eq!(fa.entering(1), Some(&q(20, 1)));
        // w2 has two entering arcs and nothing to feed.
        assert_eq!(fa.entering(3), Some(&q(0, 1)));
        assert!(check_feasible(&net, &o).feasible);
        let obj = objectives(&net, &fa).unwrap();
        assert_eq!((obj.min_load, obj.max_load, obj.reserve), (q(3, 5), q(1, 1), q(2, 5)));
    }

    #[test]
    fn orientation_d_flows() {
        let (net, o) = orient(&[
            ("s1", "w1"), ("s1", "p3"), ("s2", "w3"), ("w1", "p1"),
            ("w1", "w2"), ("w2", "w3"), ("w3", "p2"),
        ]);
        let fa = compute_flow(&net, &o);
        assert_eq!(fa.arc_flow(0), &q(60, 1));
        assert_eq!(fa.arc_flow(4), &q(10, 1));
        assert_eq!(fa.arc_flow(5), &q(10, 1));
        assert_eq!(fa.entering(0), Some(&q(70, 1)));
        assert_eq!(fa.entering(1), Some(&q(10, 1)));
        let obj = evaluate(&net, &o).unwrap();
        assert_eq!((obj.min_load, obj.max_load, obj.reserve), (q(1, 2), q(7, 10), q(1, 5)));
    }

    #[test]
    fn orientation_c_capacity_violations() {
        let (net, o) = orient(&[
            ("w1", "s1"), ("s1", "p3"), ("s2", "w3"), ("w1", "p1"),
            ("w2", "w1"), ("w3", "w2"), ("w3", "p2"),
        ]);
        let report = check_feasible(&net, &o);
        assert!(!report.feasible);
        let w2 = report.violations.iter().find(|v| v.node == 3).unwrap();
        assert_eq!(w2.kind, ViolationKind::Capacity);
        assert_eq!(w2.value, Some(q(55, 1)));
        let s2 = report.violations.iter().find(|v| v.node == 1).unwrap();
        assert_eq!(s2.kind, ViolationKind::Production);
        assert_eq!(s2.value, Some(q(75, 1)));
        // w3 carries 75 through a single entering arc as well.
        let w3 = report.violations.iter().find(|v| v.node == 4).unwrap();
        assert_eq!(w3.kind, ViolationKind::Capacity);
    }

    #[test]
    fn orientations_e_and_f_demand_violations() {
        let (net, e) = orient(&[
            ("s1", "w1"), ("s1", "p3"), ("s2", "w3"), ("w1", "p1"),
            ("w2", "w1"), ("w3", "w2"), ("p2", "w3"),
        ]);
        let report = check_feasible(&net, &e);
        assert!(report
            .violations
            .iter()
            .any(|v| v.node == 6 && v.kind == ViolationKind::Demand));
        let (net, f) = orient(&[
            ("s1", "w1"), ("s1", "p3"), ("s2", "w3"), ("w1", "p1"),
            ("w2", "w1"), ("w2", "w3"), ("w3", "p2"),
        ]);
        let fa = compute_flow(&net, &f);
        assert_eq!(fa.entering(3), None);
        assert_eq!(fa.arc_flow(4), &q(25, 1));
        let report = check_feasible(&net, &f);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].node, 3);
        assert_eq!(report.violations[0].kind, ViolationKind::Demand);
        // The idle-switch rule does not apply: w2 sends flow.
        let relaxed = check_feasible_with(&net, &f, &fa, DemandRule::AllowIdleSwitches);
        assert!(!relaxed.feasible);
    }

    #[test]
    fn idle_switch_rule() {
        let mut b = NetworkBuilder::new();
        b.source("s", 4).sink("p", 4).switch("w", 1).sink("z", 0);
        b.edge("s", "p").edge("s", "z").edge("w", "z");
        let net = b.build().unwrap();
        let o = Orientation::from_ids(&net, &[("s", "p"), ("s", "z"), ("w", "z")]).unwrap();
        let fa = compute_flow(&net, &o);
        assert!(!check_feasible(&net, &o).feasible);
        assert!(check_feasible_with(&net, &o, &fa, DemandRule::AllowIdleSwitches).feasible);
    }

    #[test]
    fn two_node_arc() {
        let mut b = NetworkBuilder::new();
        b.source("s", 4).sink("p", 4).edge("s", "p");
        let net = b.build().unwrap();
        let o = Orientation::from_ids(&net, &[("s", "p")]).unwrap();
        let fa = compute_flow(&net, &o);
        assert_eq!(fa.arc_flow(0), &q(4, 1));
        let obj = objectives(&net, &fa).unwrap();
        assert_eq!(obj.min_load, Rational::one());
        assert_eq!(obj.reserve, Rational::zero());
    }

    #[test]
    fn no_source_is_an_error() {
        let mut b = NetworkBuilder::new();
        b.unbounded_switch("w").sink("p", 0).edge("w", "p");
        let net = b.build().unwrap();
        let o = Orientation::from_ids(&net, &[("w", "p")]).unwrap();
        assert_eq!(objectives(&net, &compute_flow(&net, &o)), Err(FlowError::NoSource));
    }

    mod props {
        use super::*;
        use crate::hardgen::{gen_random_tree, Profile};
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sources_supply_total_power(n in 2usize..14, seed in 0u64..500, pick in any::<usize>()) {
                let net = gen_random_tree(n, seed, &Profile::balanced()).unwrap();
                let sources: Vec<usize> = net.sources().collect();
                let root = sources[pick % sources.len()];
                // orient every edge away from the root so each other node is entered
                let mut arcs = Vec::new();
                let mut stack = vec![(root, usize::MAX)];
                while let Some((v, parent)) = stack.pop() {
                    for &(w, _) in net.neighbors(v) {
                        if w != parent {
                            arcs.push((v, w));
                            stack.push((w, v));
                        }
                    }
                }
                let o = Orientation::from_arcs(&net, &arcs).unwrap();
                let fa = compute_flow(&net, &o);
                let supplied = net.sources().filter_map(|s| fa.entering(s).cloned()).sum::<Rational>();
                prop_assert_eq!(supplied, Rational::from_integer(net.total_power()));
            }

            #[test]
            fn arcs_into_a_node_carry_equal_flow(n in 2usize..12, seed in 0u64..500, mask in any::<u64>()) {
                let net = gen_random_tree(n, seed, &Profile::balanced()).unwrap();
                let o = Orientation::from_flags(&net, |e| mask >> e & 1 == 1);
                let fa = compute_flow(&net, &o);
                for (e, &(_, h)) in o.arcs().iter().enumerate() {
                    prop_assert_eq!(Some(fa.arc_flow(e)), fa.entering(h));
                }
            }
        }
    }
}
