//! Rounded-flow dynamic program: i/o tables per directed edge and rounded
//! flow, feasibility under a rounded-load window, and the two approximation
//! schemes built on it (max min-load and min reserve).
//!
//! Tables are sparse: i-entries are kept only for rounded flows some
//! semi-orientation reaches, and o-entries are filled on demand.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::exact::children;
use crate::flow::{evaluate, Objectives};
use crate::model::{Capacity, Network, NodeKind, Orientation, Rational};
use crate::rounding::{build_grids, rounded_objectives, LoadWindow, RoundingContext, RoundingError};

/// How the choice of entering children is searched at each node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Combine {
    /// Every subset of children, one fold DP per subset.
    #[default]
    Subsets,
    /// The rank DP: fix |J| and the child of J with the least o-value, then
    /// minimize over the remaining free children. Polynomial in the degree.
    RankDp,
}

/// Role of a child slot in a fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChildMode {
    /// The child sends flow in (belongs to J).
    In,
    /// The child receives flow (its rounded flow is folded).
    Out,
    /// Either.
    Free,
}

/// One element of the fold at a node, in numbering order.
#[derive(Debug, Clone)]
pub enum Slot<'a> {
    /// A rounded value that is always folded (Pow or the parent arc).
    Fixed(&'a Rational),
    /// A child with its finite i-entries as (rounded flow, exact flow).
    Child { options: Vec<(&'a Rational, &'a Rational)>, mode: ChildMode },
}

/// Best assignment found by the fold DP for one fold result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XiSolution {
    /// Sum of the exact flows of the outgoing children.
    pub sum: Rational,
    /// Per slot: the rounded flow chosen for an outgoing child, `None` for
    /// fixed slots and entering children.
    pub parts: Vec<Option<Rational>>,
}

/// Folds `slots` with divisor `divisor` and exactly `entering` children in J.
/// Returns, per fold result, the least sum of outgoing exact flows.
///
/// Ties keep the first assignment met, which is the one with the smallest
/// rounded flows in numbering order.
pub fn fold_dp(
    ctx: &RoundingContext,
    slots: &[Slot<'_>],
    divisor: usize,
    entering: usize,
    ops: &mut u64,
) -> BTreeMap<Rational, XiSolution> {
    let n = slots.len();
    let mut can_enter_after = vec![0usize; n + 1];
    for i in (0..n).rev() {
        let c = matches!(slots[i], Slot::Child { mode: ChildMode::In | ChildMode::Free, .. });
        can_enter_after[i] = can_enter_after[i + 1] + c as usize;
    }
    let mut states: BTreeMap<(Rational, usize), XiSolution> = BTreeMap::new();
    states.insert(
        (Rational::zero(), 0),
        XiSolution { sum: Rational::zero(), parts: vec![None; n] },
    );
    for (i, slot) in slots.iter().enumerate() {
        let mut next: BTreeMap<(Rational, usize), XiSolution> = BTreeMap::new();
        let mut offer = |key: (Rational, usize), sol: XiSolution| {
            if key.1 > entering || entering - key.1 > can_enter_after[i + 1] {
                return;
            }
            match next.get(&key) {
                Some(cur) if cur.sum <= sol.sum => {}
                _ => {
                    next.insert(key, sol);
                }
            }
        };
        for ((acc, s), sol) in states {
            match slot {
                Slot::Fixed(x) => {
                    *ops += 1;
                    offer((ctx.fold_step(&acc, x, divisor), s), sol);
                }
                Slot::Child { options, mode } => {
                    if *mode != ChildMode::Out {
                        offer((acc.clone(), s + 1), sol.clone());
                    }
                    if *mode != ChildMode::In {
                        for &(key, val) in options {
                            *ops += 2;
                            let mut parts = sol.parts.clone();
                            parts[i] = Some(key.clone());
                            let next_sol = XiSolution { sum: &sol.sum + val, parts };
                            offer((ctx.fold_step(&acc, key, divisor), s), next_sol);
                        }
                    }
                }
            }
        }
        states = next;
    }
    let mut out: BTreeMap<Rational, XiSolution> = BTreeMap::new();
    for ((acc, s), sol) in states {
        if s == entering {
            out.insert(acc, sol);
        }
    }
    out
}

/// The fold DP restricted to one target value of the fold.
pub fn xi_dp(
    ctx: &RoundingContext,
    slots: &[Slot<'_>],
    divisor: usize,
    entering: usize,
    target: &Rational,
    ops: &mut u64,
) -> Option<XiSolution> {
    fold_dp(ctx, slots, divisor, entering, ops).remove(target)
}

/// A finite table entry together with the choice that attains it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    /// i-value or o-value.
    pub value: Rational,
    /// Rounded flow of the node the choice is made at: f̃ for an i-entry,
    /// g̃ for an o-entry.
    pub node_flow: Rational,
    /// Children sending flow into the node.
    pub entering: Vec<usize>,
    /// Children receiving flow, with their rounded flows.
    pub outgoing: Vec<(usize, Rational)>,
}

/// Work counters for one or more table constructions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TableStats {
    /// |F̃|.
    #[serde(serialize_with = "crate::hardgen::decimal")]
    pub grid_size: BigInt,
    /// Number of (window) tables built.
    pub tables: u64,
    /// Finite entries computed.
    pub entries: u64,
    /// Fold steps and additions on rationals.
    pub rational_ops: u64,
}

impl TableStats {
    fn absorb(&mut self, t: &IoTables<'_>) {
        self.tables += 1;
        self.entries += t.entries();
        self.rational_ops += t.ops;
    }
}

type IMap = BTreeMap<Rational, Witness>;

/// i/o tables for one rounded-load window.
pub struct IoTables<'a> {
    net: &'a Network,
    ctx: &'a RoundingContext,
    window: LoadWindow,
    combine: Combine,
    i_maps: HashMap<(usize, usize), Rc<IMap>>,
    o_memo: HashMap<(usize, usize, Rational), Option<Rc<Witness>>>,
    ops: u64,
}

/// Builds the i-tables of every directed edge for `window`; o-entries are
/// filled as they are queried.
pub fn compute_tables<'a>(net: &'a Network, ctx: &'a RoundingContext, window: &LoadWindow) -> IoTables<'a> {
    let mut t = IoTables::new(net, ctx, window.clone());
    t.fill();
    t
}

fn int(x: &BigInt) -> Rational {
    Rational::from_integer(x.clone())
}

fn count(k: usize) -> Rational {
    Rational::from_integer(BigInt::from(k))
}

impl<'a> IoTables<'a> {
    pub fn new(net: &'a Network, ctx: &'a RoundingContext, window: LoadWindow) -> Self {
        Self::with_combine(net, ctx, window, Combine::default())
    }

    pub fn with_combine(net: &'a Network, ctx: &'a RoundingContext, window: LoadWindow, combine: Combine) -> Self {
        IoTables {
            net,
            ctx,
            window,
            combine,
            i_maps: HashMap::new(),
            o_memo: HashMap::new(),
            ops: 0,
        }
    }

    pub fn window(&self) -> &LoadWindow {
        &self.window
    }

    /// Computes the i-table of every directed edge.
    pub fn fill(&mut self) {
        for &(a, b) in self.net.edges() {
            self.i_map(a, b);
            self.i_map(b, a);
        }
    }

    /// Finite entries computed so far.
    pub fn entries(&self) -> u64 {
        let i: usize = self.i_maps.values().map(|m| m.len()).sum();
        let o = self.o_memo.values().filter(|w| w.is_some()).count();
        (i + o) as u64
    }

    pub fn rational_ops(&self) -> u64 {
        self.ops
    }

    /// Finite i-entries of (u,v) as (rounded flow, least exact flow).
    pub fn i_entries(&mut self, u: usize, v: usize) -> Vec<(Rational, Rational)> {
        self.i_map(u, v).iter().map(|(k, w)| (k.clone(), w.value.clone())).collect()
    }

    /// i(u,v,f̃); `None` is +∞.
    pub fn i_val(&mut self, u: usize, v: usize, f: &Rational) -> Option<Rational> {
        self.h_i(u, v, f).map(|w| w.value)
    }

    /// o(u,v,f̃); `None` is −∞.
    pub fn o_val(&mut self, u: usize, v: usize, f: &Rational) -> Option<Rational> {
        self.h_o(u, v, f).map(|w| w.value)
    }

    /// The i-entry of (u,v) at f̃ with its witness.
    pub fn h_i(&mut self, u: usize, v: usize, f: &Rational) -> Option<Witness> {
        self.i_map(u, v).get(f).cloned()
    }

    /// The o-entry of (u,v) at f̃ with its witness.
    pub fn h_o(&mut self, u: usize, v: usize, f: &Rational) -> Option<Witness> {
        self.o_entry(u, v, f).map(|w| (*w).clone())
    }

    fn i_map(&mut self, u: usize, v: usize) -> Rc<IMap> {
        if let Some(m) = self.i_maps.get(&(u, v)) {
            return m.clone();
        }
        let kids = children(self.net, v, u);
        let maps: Vec<Rc<IMap>> = kids.iter().map(|&c| self.i_map(v, c)).collect();
        let map = match self.combine {
            Combine::Subsets => self.i_subsets(v, &kids, &maps),
            Combine::RankDp => self.i_rank(v, &kids, &maps),
        };
        let map = Rc::new(map);
        self.i_maps.insert((u, v), map.clone());
        map
    }

    /// Pow of a sink as a leading fold element.
    fn lead(&self, x: usize) -> Option<Rational> {
        match self.net.kind(x) {
            NodeKind::Sink { pow } => Some(int(pow)),
            _ => None,
        }
    }

    /// Slots at `x` for the i-side: Pow, then the children.
    fn i_slots<'m>(lead: &'m Option<Rational>, maps: &'m [Rc<IMap>], modes: &[ChildMode]) -> Vec<Slot<'m>> {
        let mut slots: Vec<Slot<'m>> = lead.iter().map(Slot::Fixed).collect();
        for (m, &mode) in maps.iter().zip(modes) {
            slots.push(Slot::Child { options: m.iter().map(|(k, w)| (k, &w.value)).collect(), mode });
        }
        slots
    }

    /// Flow F of v for the i-side, if v's own constraints hold.
    fn i_flow(&mut self, v: usize, f: &Rational, sum: &Rational, d: usize) -> Option<Rational> {
        let (divisor, pow) = match self.net.kind(v) {
            NodeKind::Source { .. } => (d + 2, None),
            NodeKind::Switch { .. } => (d + 1, None),
            NodeKind::Sink { pow } => (d + 1, Some(int(pow))),
        };
        self.ops += 1;
        let total = match pow {
            Some(p) => sum + p,
            None => sum.clone(),
        };
        let flow = total / count(divisor);
        match self.net.kind(v) {
            NodeKind::Source { prod } => {
                if flow > int(prod) || !self.window.admits(f, prod) {
                    return None;
                }
            }
            NodeKind::Switch { cap: Capacity::Finite(c) } => {
                if &flow * count(d + 1) > int(c) {
                    return None;
                }
            }
            _ => {}
        }
        Some(flow)
    }

    fn i_divisor(&self, v: usize, d: usize) -> usize {
        if self.net.kind(v).is_source() {
            d + 2
        } else {
            d + 1
        }
    }

    fn i_subsets(&mut self, v: usize, kids: &[usize], maps: &[Rc<IMap>]) -> IMap {
        let p = kids.len();
        let lead = self.lead(v);
        let off = lead.is_some() as usize;
        let mut out = IMap::new();
        for mask in subsets_by_size(p) {
            let d = mask.count_ones() as usize;
            let modes: Vec<ChildMode> =
                (0..p).map(|j| if mask >> j & 1 == 1 { ChildMode::In } else { ChildMode::Out }).collect();
            let slots = Self::i_slots(&lead, maps, &modes);
            let folded = fold_dp(self.ctx, &slots, self.i_divisor(v, d), d, &mut self.ops);
            drop(slots);
            for (f, sol) in folded {
                let Some(flow) = self.i_flow(v, &f, &sol.sum, d) else { continue };
                if out.get(&f).is_some_and(|w| w.value <= flow) {
                    continue;
                }
                let mut ok = true;
                for j in (0..p).filter(|&j| mask >> j & 1 == 1) {
                    match self.o_entry(kids[j], v, &f) {
                        Some(w) if w.value >= flow => {}
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    let w = witness(flow, f.clone(), kids, &sol.parts[off..]);
                    out.insert(f, w);
                }
            }
        }
        out
    }

    fn i_rank(&mut self, v: usize, kids: &[usize], maps: &[Rc<IMap>]) -> IMap {
        let p = kids.len();
        let lead = self.lead(v);
        let off = lead.is_some() as usize;
        let mut out = IMap::new();
        for d in 0..=p {
            let divisor = self.i_divisor(v, d);
            let free = vec![ChildMode::Free; p];
            let reach: Vec<Rational> = {
                let slots = Self::i_slots(&lead, maps, &free);
                fold_dp(self.ctx, &slots, divisor, d, &mut self.ops).into_keys().collect()
            };
            for f in reach {
                let mut best: Option<(Rational, XiSolution)> = None;
                let consider = |flow: Rational, sol: XiSolution, best: &mut Option<(Rational, XiSolution)>| {
                    if best.as_ref().is_none_or(|(b, _)| flow < *b) {
                        *best = Some((flow, sol));
                    }
                };
                if d == 0 {
                    let slots = Self::i_slots(&lead, maps, &vec![ChildMode::Out; p]);
                    let sol = xi_dp(self.ctx, &slots, divisor, 0, &f, &mut self.ops);
                    drop(slots);
                    if let Some(sol) = sol {
                        if let Some(flow) = self.i_flow(v, &f, &sol.sum, 0) {
                            consider(flow, sol, &mut best);
                        }
                    }
                } else {
                    let order = self.rank_children(kids, v, &f);
                    for (r, (k, ok)) in order.iter().enumerate() {
                        let mut modes = vec![ChildMode::Out; p];
                        for &(j, _) in &order[r + 1..] {
                            modes[j] = ChildMode::Free;
                        }
                        modes[*k] = ChildMode::In;
                        let slots = Self::i_slots(&lead, maps, &modes);
                        let sol = xi_dp(self.ctx, &slots, divisor, d, &f, &mut self.ops);
                        drop(slots);
                        let Some(sol) = sol else { continue };
                        let Some(flow) = self.i_flow(v, &f, &sol.sum, d) else { continue };
                        if &flow <= ok {
                            consider(flow, sol, &mut best);
                        }
                    }
                }
                if let Some((flow, sol)) = best {
                    if out.get(&f).is_none_or(|w| flow < w.value) {
                        let w = witness(flow, f.clone(), kids, &sol.parts[off..]);
                        out.insert(f, w);
                    }
                }
            }
        }
        out
    }

    /// Children of `x` that may send flow into `x` at rounded flow `g`,
    /// sorted by increasing o-value (numbering breaks ties), with that value.
    fn rank_children(&mut self, kids: &[usize], x: usize, g: &Rational) -> Vec<(usize, Rational)> {
        let mut order: Vec<(usize, Rational)> = Vec::new();
        for (j, &c) in kids.iter().enumerate() {
            if let Some(w) = self.o_entry(c, x, g) {
                order.push((j, w.value.clone()));
            }
        }
        order.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
        order
    }

    /// Slots at `u` for the o-side: Pow, then the neighbors in numbering
    /// order with `v` carrying the fixed rounded flow `f`.
    fn o_slots<'m>(
        &self,
        u: usize,
        v: usize,
        f: &'m Rational,
        lead: &'m Option<Rational>,
        maps: &'m [Rc<IMap>],
        modes: &[ChildMode],
    ) -> (Vec<Slot<'m>>, Vec<Option<usize>>) {
        let mut slots: Vec<Slot<'m>> = lead.iter().map(Slot::Fixed).collect();
        let mut kid_of: Vec<Option<usize>> = vec![None; slots.len()];
        let mut j = 0;
        for &(y, _) in self.net.neighbors(u) {
            if y == v {
                slots.push(Slot::Fixed(f));
                kid_of.push(None);
            } else {
                let m = &maps[j];
                slots.push(Slot::Child {
                    options: m.iter().map(|(k, w)| (k, &w.value)).collect(),
                    mode: modes[j],
                });
                kid_of.push(Some(j));
                j += 1;
            }
        }
        (slots, kid_of)
    }

    fn o_divisor(&self, u: usize, d: usize) -> usize {
        if self.net.kind(u).is_source() {
            d + 1
        } else {
            d
        }
    }

    /// Upper bound on the flow of `u` from its own constraints; `None` when
    /// the window rejects `g`.
    fn o_cap(&self, u: usize, g: &Rational, d: usize) -> Option<Option<Rational>> {
        match self.net.kind(u) {
            NodeKind::Source { prod } => {
                if !self.window.admits(g, prod) {
                    return None;
                }
                Some(Some(int(prod)))
            }
            NodeKind::Switch { cap: Capacity::Finite(c) } => Some(Some(int(c) / count(d))),
            _ => Some(None),
        }
    }

    fn o_entry(&mut self, u: usize, v: usize, f: &Rational) -> Option<Rc<Witness>> {
        let key = (u, v, f.clone());
        if let Some(w) = self.o_memo.get(&key) {
            return w.clone();
        }
        let kids = children(self.net, u, v);
        let maps: Vec<Rc<IMap>> = kids.iter().map(|&c| self.i_map(u, c)).collect();
        let best = match self.combine {
            Combine::Subsets => self.o_subsets(u, v, f, &kids, &maps),
            Combine::RankDp => self.o_rank(u, v, f, &kids, &maps),
        };
        let best = best.map(Rc::new);
        self.o_memo.insert(key, best.clone());
        best
    }

    /// o-value for a fixed choice: d⁻·bound − Σ − Pow, when non-negative.
    fn o_value(&mut self, u: usize, d: usize, bound: Rational, sum: &Rational) -> Option<Rational> {
        self.ops += 2;
        let mut value = count(self.o_divisor(u, d)) * bound - sum;
        if let Some(p) = self.lead(u) {
            value -= p;
        }
        (!value.is_negative()).then_some(value)
    }

    fn o_subsets(&mut self, u: usize, v: usize, f: &Rational, kids: &[usize], maps: &[Rc<IMap>]) -> Option<Witness> {
        let p = kids.len();
        let lead = self.lead(u);
        let mut best: Option<Witness> = None;
        for mask in subsets_by_size(p) {
            let d = mask.count_ones() as usize;
            let divisor = self.o_divisor(u, d);
            if divisor == 0 {
                continue;
            }
            let modes: Vec<ChildMode> =
                (0..p).map(|j| if mask >> j & 1 == 1 { ChildMode::In } else { ChildMode::Out }).collect();
            let (folded, kid_of) = {
                let (slots, kid_of) = self.o_slots(u, v, f, &lead, maps, &modes);
                (fold_dp(self.ctx, &slots, divisor, d, &mut self.ops), kid_of)
            };
            for (g, sol) in folded {
                let Some(cap) = self.o_cap(u, &g, d) else { continue };
                let mut bound = cap;
                let mut ok = true;
                for j in (0..p).filter(|&j| mask >> j & 1 == 1) {
                    match self.o_entry(kids[j], u, &g) {
                        Some(w) => {
                            if bound.as_ref().is_none_or(|b| w.value < *b) {
                                bound = Some(w.value.clone());
                            }
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let bound = bound.expect("a source or an entering child bounds the flow");
                let Some(value) = self.o_value(u, d, bound, &sol.sum) else { continue };
                if best.as_ref().is_none_or(|b| value > b.value) {
                    best = Some(o_witness(value, g, kids, &sol.parts, &kid_of));
                }
            }
        }
        best
    }

    fn o_rank(&mut self, u: usize, v: usize, f: &Rational, kids: &[usize], maps: &[Rc<IMap>]) -> Option<Witness> {
        let p = kids.len();
        let lead = self.lead(u);
        let mut best: Option<Witness> = None;
        for d in 0..=p {
            let divisor = self.o_divisor(u, d);
            if divisor == 0 {
                continue;
            }
            let reach: Vec<Rational> = {
                let (slots, _) = self.o_slots(u, v, f, &lead, maps, &vec![ChildMode::Free; p]);
                fold_dp(self.ctx, &slots, divisor, d, &mut self.ops).into_keys().collect()
            };
            for g in reach {
                let Some(cap) = self.o_cap(u, &g, d) else { continue };
                // (modes, bound) candidates: one per choice of the least child
                let mut plans: Vec<(Vec<ChildMode>, Option<Rational>)> = Vec::new();
                if d == 0 {
                    plans.push((vec![ChildMode::Out; p], cap.clone()));
                } else {
                    let order = self.rank_children(kids, u, &g);
                    for (r, (k, ok)) in order.iter().enumerate() {
                        let mut modes = vec![ChildMode::Out; p];
                        for &(j, _) in &order[r + 1..] {
                            modes[j] = ChildMode::Free;
                        }
                        modes[*k] = ChildMode::In;
                        let bound = match &cap {
                            Some(c) if c < ok => c.clone(),
                            _ => ok.clone(),
                        };
                        plans.push((modes, Some(bound)));
                    }
                }
                for (modes, bound) in plans {
                    let (sol, kid_of) = {
                        let (slots, kid_of) = self.o_slots(u, v, f, &lead, maps, &modes);
                        (xi_dp(self.ctx, &slots, divisor, d, &g, &mut self.ops), kid_of)
                    };
                    let Some(sol) = sol else { continue };
                    let bound = bound.expect("a source or an entering child bounds the flow");
                    let Some(value) = self.o_value(u, d, bound, &sol.sum) else { continue };
                    if best.as_ref().is_none_or(|b| value > b.value) {
                        best = Some(o_witness(value, g.clone(), kids, &sol.parts, &kid_of));
                    }
                }
            }
        }
        best
    }

    /// Orients T_v for the i-entry (u,v,f̃).
    fn expand_i(&mut self, u: usize, v: usize, f: &Rational, arcs: &mut [(usize, usize)]) {
        let w = self.h_i(u, v, f).expect("expanded entries are finite");
        self.expand(v, &w, arcs);
    }

    /// Orients T_u for the o-entry (u,v,f̃).
    fn expand_o(&mut self, u: usize, v: usize, f: &Rational, arcs: &mut [(usize, usize)]) {
        let w = self.h_o(u, v, f).expect("expanded entries are finite");
        self.expand(u, &w, arcs);
    }

    fn expand(&mut self, x: usize, w: &Witness, arcs: &mut [(usize, usize)]) {
        for &c in &w.entering {
            let e = self.net.edge_between(c, x).expect("child is adjacent");
            arcs[e] = (c, x);
            self.expand_o(c, x, &w.node_flow, arcs);
        }
        for (c, fc) in &w.outgoing {
            let e = self.net.edge_between(*c, x).expect("child is adjacent");
            arcs[e] = (x, *c);
            self.expand_i(x, *c, fc, arcs);
        }
    }

    /// A feasible orientation whose rounded loads lie in the window, when
    /// one exists. Decided on the edge that comes first in the numbering.
    pub fn feasible_orientation(&mut self) -> Option<Orientation> {
        let net = self.net;
        let e = *net.edges_by_rank().first()?;
        let (a, b) = net.edge(e);
        let (a, b) = if net.rank(a) < net.rank(b) { (a, b) } else { (b, a) };
        for (u, v) in [(a, b), (b, a)] {
            for (f, i) in self.i_entries(u, v) {
                let Some(o) = self.o_val(u, v, &f) else { continue };
                if i > o {
                    continue;
                }
                let mut arcs = net.edges().to_vec();
                arcs[e] = (u, v);
                self.expand_i(u, v, &f, &mut arcs);
                self.expand_o(u, v, &f, &mut arcs);
                return Some(Orientation::from_edge_arcs(arcs));
            }
        }
        None
    }
}

/// All subsets of {0..p} as bit masks, by size and then by value.
fn subsets_by_size(p: usize) -> Vec<u64> {
    assert!(p < 64, "node degree too large for subset enumeration");
    let mut all: Vec<u64> = (0..1u64 << p).collect();
    all.sort_by_key(|&m| (m.count_ones(), m.reverse_bits()));
    all
}

/// Witness for an i-entry from a fold solution over the children slots.
fn witness(value: Rational, node_flow: Rational, kids: &[usize], parts: &[Option<Rational>]) -> Witness {
    let mut entering = Vec::new();
    let mut outgoing = Vec::new();
    for (&c, part) in kids.iter().zip(parts) {
        match part {
            Some(fc) => outgoing.push((c, fc.clone())),
            None => entering.push(c),
        }
    }
    Witness { value, node_flow, entering, outgoing }
}

/// Witness for an o-entry; `kid_of` maps slots to children.
fn o_witness(
    value: Rational,
    node_flow: Rational,
    kids: &[usize],
    parts: &[Option<Rational>],
    kid_of: &[Option<usize>],
) -> Witness {
    let mut entering = Vec::new();
    let mut outgoing = Vec::new();
    for (part, j) in parts.iter().zip(kid_of) {
        let Some(j) = j else { continue };
        match part {
            Some(fc) => outgoing.push((kids[*j], fc.clone())),
            None => entering.push(kids[*j]),
        }
    }
    Witness { value, node_flow, entering, outgoing }
}

/// A feasible orientation with every rounded load in `window`, if any.
pub fn feasible_with_bounds(net: &Network, ctx: &RoundingContext, window: &LoadWindow) -> Option<Orientation> {
    IoTables::new(net, ctx, window.clone()).feasible_orientation()
}

/// Every rounded load a source can take in some orientation, sorted and
/// deduplicated, restricted to [0, 1]. A superset of the loads that matter
/// to the window searches.
pub fn candidate_loads(net: &Network, ctx: &RoundingContext) -> Vec<Rational> {
    let mut t = IoTables::new(net, ctx, LoadWindow::full());
    let one = Rational::from_integer(1.into());
    let mut loads: Vec<Rational> = vec![Rational::zero()];
    for s in net.sources().collect::<Vec<_>>() {
        let prod = int(net.prod(s).expect("source"));
        let nbrs: Vec<usize> = net.neighbors(s).iter().map(|&(c, _)| c).collect();
        let maps: Vec<Rc<IMap>> = nbrs.iter().map(|&c| t.i_map(s, c)).collect();
        let none = None;
        let slots = IoTables::i_slots(&none, &maps, &vec![ChildMode::Free; nbrs.len()]);
        for d in 0..=nbrs.len() {
            for f in fold_dp(ctx, &slots, d + 1, d, &mut t.ops).into_keys() {
                let l = f / &prod;
                if l <= one {
                    loads.push(l);
                }
            }
        }
    }
    loads.sort();
    loads.dedup();
    loads
}

/// Result of an approximation scheme.
#[derive(Debug, Clone)]
pub struct FptasSolution {
    pub orientation: Orientation,
    /// Exact value of the objective on the returned orientation.
    pub value: Rational,
    /// Same objective on rounded loads.
    pub rounded_value: Rational,
    pub objectives: Objectives,
    pub window: LoadWindow,
    pub stats: TableStats,
}

fn finish(
    net: &Network,
    ctx: &RoundingContext,
    o: Orientation,
    window: LoadWindow,
    stats: TableStats,
    pick: fn(&Objectives) -> Rational,
) -> FptasSolution {
    let objectives = evaluate(net, &o).expect("reconstructed orientations are feasible");
    let rounded = rounded_objectives(net, &o, ctx).expect("network has a source");
    FptasSolution {
        value: pick(&objectives),
        rounded_value: pick(&rounded),
        orientation: o,
        objectives,
        window,
        stats,
    }
}

struct Probe<'a> {
    net: &'a Network,
    ctx: &'a RoundingContext,
    stats: TableStats,
}

impl Probe<'_> {
    fn run(&mut self, lo: &Rational, hi: &Rational) -> Option<Orientation> {
        let mut t = IoTables::new(self.net, self.ctx, LoadWindow::new(lo.clone(), hi.clone()));
        let o = t.feasible_orientation();
        self.stats.absorb(&t);
        o
    }
}

/// Max min-load within (1 − ε′) and ε′ of the optimum: the largest rounded
/// lower bound m̃ that stays feasible, found by bisection over the candidate
/// loads with M̃ = 1.
pub fn solve_max_min_load_fptas(net: &Network, eps_prime: &Rational) -> Result<Option<FptasSolution>, RoundingError> {
    let ctx = build_grids(net, eps_prime)?;
    let cands = candidate_loads(net, &ctx);
    let one = Rational::from_integer(1.into());
    let mut probe = Probe { net, ctx: &ctx, stats: TableStats { grid_size: ctx.flow_grid().len(), ..Default::default() } };
    let Some(mut best) = probe.run(&cands[0], &one) else { return Ok(None) };
    let (mut lo, mut hi) = (0usize, cands.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        match probe.run(&cands[mid], &one) {
            Some(o) => {
                best = o;
                lo = mid;
            }
            None => hi = mid,
        }
    }
    let window = LoadWindow::new(cands[lo].clone(), one);
    Ok(Some(finish(net, &ctx, best, window, probe.stats, |o| o.min_load.clone())))
}

/// Min reserve within 3ε′ of the optimum: the narrowest feasible window
/// [m̃, M̃] over candidate loads. The least feasible M̃ grows with m̃, so a
/// single increasing sweep of both ends finds it.
pub fn solve_min_reserve_fptas(net: &Network, eps_prime: &Rational) -> Result<Option<FptasSolution>, RoundingError> {
    let ctx = build_grids(net, eps_prime)?;
    let cands = candidate_loads(net, &ctx);
    let mut probe = Probe { net, ctx: &ctx, stats: TableStats { grid_size: ctx.flow_grid().len(), ..Default::default() } };
    let mut best: Option<(Rational, usize, usize, Orientation)> = None;
    let mut j = 0;
    for i in 0..cands.len() {
        j = j.max(i);
        let mut found = None;
        while j < cands.len() {
            if let Some(o) = probe.run(&cands[i], &cands[j]) {
                found = Some(o);
                break;
            }
            j += 1;
        }
        let Some(o) = found else { break };
        let width = &cands[j] - &cands[i];
        if best.as_ref().is_none_or(|(w, ..)| width <= *w) {
            best = Some((width, i, j, o));
        }
    }
    Ok(best.map(|(_, i, j, o)| {
        let window = LoadWindow::new(cands[i].clone(), cands[j].clone());
        finish(net, &ctx, o, window, probe.stats, |o| o.reserve.clone())
    }))
}
