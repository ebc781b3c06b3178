//! Rounded arithmetic: e(f), a(f), the ⊕ fold, rounded flows and loads, and
//! the grids F̃ and L̃ of representable rounded values.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::flow::{successor_first_order, FlowError, Objectives};
use crate::model::{Network, NodeKind, Orientation, Rational};

/// Default cap on |F̃| accepted by [`build_grids`].
pub const DEFAULT_GRID_BUDGET: u64 = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoundingError {
    #[error("eps' must lie strictly between 0 and 1/2, got {0}")]
    EpsPrime(Rational),
    #[error("eps must be positive, got {0}")]
    Eps(Rational),
    #[error("rounded-flow grid has {size} values, budget is {budget}")]
    GridTooLarge { size: BigInt, budget: u64 },
}

/// ⌊log₂ x⌋ for x > 0.
pub fn floor_log2(x: &Rational) -> i64 {
    debug_assert!(x.is_positive());
    let (p, q) = (x.numer(), x.denom());
    let k = p.bits() as i64 - q.bits() as i64;
    let at_least = if k >= 0 { *p >= (q << k as usize) } else { (p << (-k) as usize) >= *q };
    if at_least {
        k
    } else {
        k - 1
    }
}

/// 2^i as a rational.
pub fn pow2(i: i64) -> Rational {
    if i >= 0 {
        Rational::from_integer(BigInt::one() << i as usize)
    } else {
        Rational::new(BigInt::one(), BigInt::one() << (-i) as usize)
    }
}

/// Admissible range [m̃, M̃] for rounded source loads.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LoadWindow {
    pub lo: Rational,
    pub hi: Rational,
}

impl LoadWindow {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        LoadWindow { lo, hi }
    }

    /// The window [0, 1].
    pub fn full() -> Self {
        LoadWindow { lo: Rational::zero(), hi: Rational::one() }
    }

    /// Whether the rounded flow `flow` of a source with production `prod`
    /// has its rounded load inside the window.
    pub fn admits(&self, flow: &Rational, prod: &BigInt) -> bool {
        let load = flow / Rational::from_integer(prod.clone());
        self.lo <= load && load <= self.hi
    }
}

/// Rounding parameters and the grids they induce for one network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundingContext {
    eps_prime: Option<Rational>,
    eps: Rational,
    n: usize,
    numbering: Vec<usize>,
    grid: FlowGrid,
    prods: Vec<BigInt>,
}

/// Builds the rounding context for `net` with eps = eps′/(n²+1)².
pub fn build_grids(net: &Network, eps_prime: &Rational) -> Result<RoundingContext, RoundingError> {
    build_grids_with_budget(net, eps_prime, DEFAULT_GRID_BUDGET)
}

pub fn build_grids_with_budget(
    net: &Network,
    eps_prime: &Rational,
    budget: u64,
) -> Result<RoundingContext, RoundingError> {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    if !eps_prime.is_positive() || eps_prime >= &half {
        return Err(RoundingError::EpsPrime(eps_prime.clone()));
    }
    let n = net.node_count() as u64;
    let denom = BigInt::from((n * n + 1) * (n * n + 1));
    let eps = eps_prime / Rational::from_integer(denom);
    let ctx = RoundingContext::assemble(net, Some(eps_prime.clone()), eps);
    let size = ctx.grid.len();
    if size > BigInt::from(budget) {
        return Err(RoundingError::GridTooLarge { size, budget });
    }
    Ok(ctx)
}

impl RoundingContext {
    /// Context with an explicit eps, bypassing the eps′ relation.
    pub fn with_eps(net: &Network, eps: Rational) -> Result<Self, RoundingError> {
        if !eps.is_positive() {
            return Err(RoundingError::Eps(eps));
        }
        Ok(RoundingContext::assemble(net, None, eps))
    }

    fn assemble(net: &Network, eps_prime: Option<Rational>, eps: Rational) -> Self {
        let grid = FlowGrid::new(eps.clone(), flow_exponent_floor(net), &net.total_power());
        RoundingContext {
            eps_prime,
            eps,
            n: net.node_count(),
            numbering: net.numbering().to_vec(),
            grid,
            prods: net.sources().filter_map(|s| net.prod(s).cloned()).collect(),
        }
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn eps_prime(&self) -> Option<&Rational> {
        self.eps_prime.as_ref()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn numbering(&self) -> &[usize] {
        &self.numbering
    }

    pub fn flow_grid(&self) -> &FlowGrid {
        &self.grid
    }

    pub fn load_grid(&self) -> LoadGrid<'_> {
        LoadGrid { ctx: self }
    }

    /// e(f) = 2^⌊log₂ f⌋ · eps.
    pub fn unit(&self, f: &Rational) -> Rational {
        pow2(floor_log2(f)) * &self.eps
    }

    /// a(f): the largest multiple of e(f) not above f; a(0) = 0.
    pub fn round_down(&self, f: &Rational) -> Rational {
        if !f.is_positive() {
            assert!(f.is_zero(), "round_down needs a non-negative argument");
            return Rational::zero();
        }
        let i = floor_log2(f);
        let (ep, eq) = (self.eps.numer(), self.eps.denom());
        // f / (2^i·ep/eq) = f.numer·eq / (f.denom·ep·2^i)
        let mut num = f.numer() * eq;
        let mut den = f.denom() * ep;
        if i >= 0 {
            den <<= i as usize;
        } else {
            num <<= (-i) as usize;
        }
        let k = num.div_floor(&den);
        let mut out_num = k * ep;
        let mut out_den = eq.clone();
        if i >= 0 {
            out_num <<= i as usize;
        } else {
            out_den <<= (-i) as usize;
        }
        Rational::new(out_num, out_den)
    }

    /// One fold step: a(acc + x/d).
    pub fn fold_step(&self, acc: &Rational, x: &Rational, d: usize) -> Rational {
        let sum = if d == 1 { acc + x } else { acc + x / Rational::from_integer(BigInt::from(d)) };
        self.round_down(&sum)
    }

    /// ⊕(values, d): left fold of `fold_step` starting from 0.
    pub fn oplus<'a>(&self, values: impl IntoIterator<Item = &'a Rational>, d: usize) -> Rational {
        assert!(d >= 1, "oplus divisor must be positive");
        values
            .into_iter()
            .fold(Rational::zero(), |acc, x| self.fold_step(&acc, x, d))
    }
}

/// Smallest exponent a nonzero rounded flow of `net` can have.
///
/// A nonzero flow is at least 1/P where P is the largest product of node
/// degrees along a path of the tree; its rounding loses less than half.
fn flow_exponent_floor(net: &Network) -> i64 {
    let n = net.node_count();
    let mut best = BigInt::one();
    for start in 0..n {
        let mut stack = vec![(start, usize::MAX, BigInt::from(net.degree(start).max(1)))];
        while let Some((v, parent, prod)) = stack.pop() {
            if prod > best {
                best = prod.clone();
            }
            for &(w, _) in net.neighbors(v) {
                if w != parent {
                    stack.push((w, v, &prod * BigInt::from(net.degree(w))));
                }
            }
        }
    }
    let ceil_log = if best.is_one() { 0 } else { (&best - 1u32).bits() as i64 };
    -ceil_log - 1
}

/// F̃: 0 together with the multiples k·2^i·eps lying in [2^i(1−eps), 2^{i+1}]
/// for every exponent i of the grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGrid {
    eps: Rational,
    i_lo: i64,
    i_hi: Option<i64>,
    k_lo: BigInt,
    k_hi: BigInt,
}

impl FlowGrid {
    fn new(eps: Rational, i_lo: i64, total_power: &BigInt) -> Self {
        let i_hi = if total_power.is_positive() {
            Some(floor_log2(&Rational::from_integer(total_power.clone())))
        } else {
            None
        };
        let one = Rational::one();
        let k_lo = ((&one - &eps) / &eps).ceil().to_integer().max(BigInt::zero());
        let k_hi = (Rational::from_integer(BigInt::from(2)) / &eps).floor().to_integer();
        FlowGrid { eps, i_lo, i_hi, k_lo, k_hi }
    }

    /// Inclusive exponent range, or `None` when only 0 is representable.
    pub fn exponents(&self) -> Option<(i64, i64)> {
        self.i_hi.map(|hi| (self.i_lo, hi))
    }

    fn step(&self, i: i64) -> Rational {
        pow2(i) * &self.eps
    }

    fn in_band(&self, x: &Rational, i: i64) -> bool {
        let Some((lo, hi)) = self.exponents() else { return false };
        if i < lo || i > hi {
            return false;
        }
        let k = x / self.step(i);
        k.is_integer() && k.numer() >= &self.k_lo && k.numer() <= &self.k_hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        if x.is_zero() {
            return true;
        }
        if x.is_negative() {
            return false;
        }
        let i = floor_log2(x);
        (i - 1..=i + 1).any(|j| self.in_band(x, j))
    }

    /// Exact |F̃|.
    pub fn len(&self) -> BigInt {
        let Some((lo, hi)) = self.exponents() else { return BigInt::one() };
        let exps = BigInt::from(hi - lo + 1);
        let per_band = (&self.k_hi - &self.k_lo + 1u32).max(BigInt::zero());
        // Adjacent bands share the multiples of 2^{i+1}·eps in [2^{i+1}(1−eps), 2^{i+1}].
        let k_top = (Rational::one() / &self.eps).floor().to_integer();
        let shared = (&k_top - &self.k_lo + 1u32).max(BigInt::zero());
        BigInt::one() + &exps * per_band - (exps - 1u32) * shared
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = Rational> + '_ {
        let bands = self
            .exponents()
            .map(|(lo, hi)| lo..=hi)
            .into_iter()
            .flatten();
        let mut last = Rational::zero();
        std::iter::once(Rational::zero()).chain(bands.flat_map(move |i| {
            let step = self.step(i);
            let mut k = self.k_lo.clone();
            let k_hi = self.k_hi.clone();
            std::iter::from_fn(move || {
                if k > k_hi {
                    return None;
                }
                let v = &step * Rational::from_integer(k.clone());
                k += 1u32;
                Some(v)
            })
        }).filter(move |v| {
            if v > &last {
                last = v.clone();
                true
            } else {
                false
            }
        }))
    }

    /// All members, refusing grids above `budget` entries.
    pub fn materialize(&self, budget: u64) -> Result<Vec<Rational>, RoundingError> {
        let size = self.len();
        if size > BigInt::from(budget) {
            return Err(RoundingError::GridTooLarge { size, budget });
        }
        Ok(self.iter().collect())
    }
}

/// L̃: rounded loads f̃/Prod(s) in [0, 1].
#[derive(Debug, Clone, Copy)]
pub struct LoadGrid<'a> {
    ctx: &'a RoundingContext,
}

impl LoadGrid<'_> {
    pub fn contains(&self, x: &Rational) -> bool {
        if x.is_negative() || x > &Rational::one() {
            return false;
        }
        x.is_zero()
            || self
                .ctx
                .prods
                .iter()
                .any(|p| self.ctx.grid.contains(&(x * Rational::from_integer(p.clone()))))
    }

    /// All members in increasing order, refusing sets above `budget`.
    pub fn materialize(&self, budget: u64) -> Result<Vec<Rational>, RoundingError> {
        let flows = self.ctx.grid.materialize(budget)?;
        let mut out: Vec<Rational> = Vec::new();
        for p in &self.ctx.prods {
            let p = Rational::from_integer(p.clone());
            out.extend(flows.iter().map(|f| f / &p).take_while(|l| l <= &Rational::one()));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

/// Rounded flow of an orientation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundedFlow {
    arc: Vec<Rational>,
    node: Vec<Option<Rational>>,
}

impl RoundedFlow {
    pub fn arc_flow(&self, e: usize) -> &Rational {
        &self.arc[e]
    }

    pub fn arc_flows(&self) -> &[Rational] {
        &self.arc
    }

    /// F̃(v); `None` stands for +∞ (switch or sink without entering arc).
    pub fn node_flow(&self, v: usize) -> Option<&Rational> {
        self.node[v].as_ref()
    }

    pub fn load(&self, net: &Network, s: usize) -> Option<Rational> {
        let prod = net.prod(s)?;
        Some(self.node[s].as_ref()? / Rational::from_integer(prod.clone()))
    }
}

/// Rounded flow: successors folded in 𝒩 order, Pow first at sinks.
pub fn rounded_flow(net: &Network, o: &Orientation, ctx: &RoundingContext) -> RoundedFlow {
    let n = net.node_count();
    let mut node: Vec<Option<Rational>> = vec![None; n];
    for v in successor_first_order(net, o) {
        let mut din = 0;
        let mut items: Vec<&Rational> = Vec::new();
        for &(w, e) in net.neighbors(v) {
            if o.arc(e).0 == v {
                items.push(node[w].as_ref().expect("successor computed first"));
            } else {
                din += 1;
            }
        }
        let value = match net.kind(v) {
            NodeKind::Source { .. } => Some(ctx.oplus(items, din + 1)),
            NodeKind::Switch { .. } if din > 0 => Some(ctx.oplus(items, din)),
            NodeKind::Sink { pow } if din > 0 => {
                let pow = Rational::from_integer(pow.clone());
                Some(ctx.oplus(std::iter::once(&pow).chain(items), din))
            }
            _ => None,
        };
        node[v] = value;
    }
    let arc = o
        .arcs()
        .iter()
        .map(|&(_, h)| node[h].clone().expect("head of an arc has an entering arc"))
        .collect();
    RoundedFlow { arc, node }
}

/// Minimum, maximum and reserve of the rounded loads.
pub fn rounded_objectives(
    net: &Network,
    o: &Orientation,
    ctx: &RoundingContext,
) -> Result<Objectives, FlowError> {
    let rf = rounded_flow(net, o, ctx);
    let loads: Vec<Rational> = net.sources().filter_map(|s| rf.load(net, s)).collect();
    Objectives::from_loads(loads.iter()).ok_or(FlowError::NoSource)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{example_network, NetworkBuilder};
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn example_ctx() -> RoundingContext {
        build_grids(&example_network(), &q(1, 10)).unwrap()
    }

    #[test]
    fn eps_for_the_example() {
        assert_eq!(example_ctx().eps(), &q(1, 42250));
    }

    #[test]
    fn floor_log2_values() {
        assert_eq!(floor_log2(&q(1, 1)), 0);
        assert_eq!(floor_log2(&q(10, 1)), 3);
        assert_eq!(floor_log2(&q(8, 1)), 3);
        assert_eq!(floor_log2(&q(7, 1)), 2);
        assert_eq!(floor_log2(&q(1, 3)), -2);
        assert_eq!(floor_log2(&q(1, 4)), -2);
        assert_eq!(floor_log2(&q(3, 8)), -2);
    }

    #[test]
    fn round_down_examples() {
        let ctx = example_ctx();
        assert_eq!(ctx.round_down(&q(10, 1)), q(52812 * 8, 42250));
        assert_eq!(ctx.round_down(&q(20, 1)), q(52812 * 16, 42250));
        assert_eq!(ctx.round_down(&q(50, 1)), q(66015 * 32, 42250));
        assert_eq!(ctx.round_down(&Rational::zero()), Rational::zero());
        let unit = RoundingContext::with_eps(&example_network(), Rational::one()).unwrap();
        assert_eq!(unit.round_down(&q(4, 1)), q(4, 1));
        assert_eq!(unit.round_down(&q(15, 1)), q(8, 1));
    }

    #[test]
    fn oplus_examples() {
        let unit = RoundingContext::with_eps(&example_network(), Rational::one()).unwrap();
        assert_eq!(unit.oplus([], 3), Rational::zero());
        assert_eq!(unit.oplus([&q(4, 1), &q(8, 1)], 1), q(8, 1));
        assert_eq!(unit.oplus([&q(8, 1)], 2), q(4, 1));
    }

    #[test]
    fn grid_count_matches_enumeration() {
        let mut b = NetworkBuilder::new();
        b.source("s", 5).switch("w", 9).sink("p", 3).sink("r", 2);
        b.edge("s", "w").edge("w", "p").edge("w", "r");
        let net = b.build().unwrap();
        for eps in [q(1, 4), q(1, 9), q(2, 7), q(1, 3)] {
            let ctx = RoundingContext::with_eps(&net, eps).unwrap();
            let members = ctx.flow_grid().materialize(1 << 20).unwrap();
            assert_eq!(BigInt::from(members.len()), ctx.flow_grid().len());
            assert!(members.windows(2).all(|w| w[0] < w[1]));
            assert!(members.iter().all(|m| ctx.flow_grid().contains(m)));
        }
    }

    #[test]
    fn load_grid_membership() {
        let mut b = NetworkBuilder::new();
        b.source("s", 10).sink("p", 10).edge("s", "p");
        let net = b.build().unwrap();
        let ctx = build_grids(&net, &q(1, 4)).unwrap();
        assert!(ctx.flow_grid().contains(&q(5, 1)));
        assert!(ctx.load_grid().contains(&q(1, 2)));
        assert!(ctx.load_grid().contains(&Rational::zero()));
        assert!(!ctx.load_grid().contains(&q(3, 2)));
        let all = ctx.load_grid().materialize(1 << 20).unwrap();
        assert!(all.contains(&q(1, 2)));
    }

    #[test]
    fn rejects_out_of_range_eps_prime() {
        let net = example_network();
        assert!(build_grids(&net, &q(1, 2)).is_err());
        assert!(build_grids(&net, &Rational::zero()).is_err());
        assert!(matches!(
            build_grids_with_budget(&net, &q(1, 10), 1000),
            Err(RoundingError::GridTooLarge { .. })
        ));
    }

    proptest! {
        #[test]
        fn round_down_bracket(num in 1u64..1_000_000, den in 1u64..5000, e in 1u64..200) {
            let net = example_network();
            let ctx = RoundingContext::with_eps(&net, q(1, (e + 2) as i64)).unwrap();
            let f = Rational::new(num.into(), den.into());
            let a = ctx.round_down(&f);
            prop_assert!(a <= f);
            prop_assert!(a > &f * (Rational::one() - ctx.eps()));
            prop_assert!((&a / ctx.unit(&f)).is_integer());
            prop_assert_eq!(ctx.round_down(&a), a);
        }

        #[test]
        fn oplus_bracket(vals in proptest::collection::vec((0u64..500, 1u64..40), 0..7), d in 1usize..6) {
            let ctx = example_ctx();
            let xs: Vec<Rational> = vals.iter().map(|&(a, b)| Rational::new(a.into(), b.into())).collect();
            let sum: Rational = xs.iter().sum::<Rational>() / Rational::from_integer(BigInt::from(d));
            let folded = ctx.oplus(xs.iter(), d);
            prop_assert!(folded <= sum);
            let mut lower = sum.clone();
            for _ in 0..xs.len() {
                lower *= Rational::one() - ctx.eps();
            }
            prop_assert!(folded >= lower);
        }

        #[test]
        fn rounding_lands_in_grid(num in 1u64..4_000, den in 1u64..36) {
            let ctx = example_ctx();
            let f = Rational::new(num.into(), den.into());
            let (lo, hi) = ctx.flow_grid().exponents().unwrap();
            prop_assume!(f >= pow2(lo) && f < pow2(hi + 1));
            prop_assert!(ctx.flow_grid().contains(&ctx.round_down(&f)));
        }
    }
}
