//! Instance generators: seeded random trees, the binary path gadget, the
//! Subset-Sum reduction and its amplified variant.

use std::collections::BinaryHeap;
use std::cmp::Reverse;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Network, NetworkBuilder, NodeKind, Orientation, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("gadget needs m >= 3 and x + 2 < 2^m (x = {x}, m = {m})")]
    Gadget { x: BigInt, m: u32 },
    #[error("reduction needs at least 7 items, got {0}")]
    TooFewItems(usize),
    #[error("items must satisfy 1 <= x_i <= B")]
    ItemRange,
    #[error("tree needs at least 2 nodes")]
    TooSmall,
    #[error("profile yields no sources")]
    NoSources,
    #[error("amplified instance needs {bits} bits, budget is {budget}")]
    Budget { bits: u64, budget: u64 },
    #[error("index {0} is out of range")]
    Index(usize),
}

/// Bits b_0..b_{m−1} of x + 2, lowest first.
fn gadget_bits(x: &BigInt, m: u32) -> Result<Vec<bool>, GenError> {
    let y = x + 2u32;
    if m < 3 || x < &BigInt::zero() || y.bits() > m as u64 {
        return Err(GenError::Gadget { x: x.clone(), m });
    }
    Ok((0..m as u64).map(|j| y.bit(j)).collect())
}

/// Adds the 2m-node path p_1, s_1, …, p_m, s_m with ids `{prefix}p{j}`,
/// `{prefix}s{j}` and joins s_m to `terminal`.
fn add_gadget(
    b: &mut NetworkBuilder,
    prefix: &str,
    x: &BigInt,
    m: u32,
    terminal: &str,
) -> Result<Vec<String>, GenError> {
    let bits = gadget_bits(x, m)?;
    let mut ids: Vec<String> = Vec::with_capacity(2 * m as usize);
    for j in 1..=m as usize {
        let p = format!("{prefix}p{j}");
        let s = format!("{prefix}s{j}");
        b.sink(p.clone(), 2 + bits[j - 1] as u32);
        b.source(s.clone(), if j == 1 { 2u32 } else { 3 });
        if let Some(prev) = ids.last() {
            b.edge(prev.clone(), p.clone());
        }
        b.edge(p.clone(), s.clone());
        ids.push(p);
        ids.push(s);
    }
    b.edge(ids.last().expect("m >= 3").clone(), terminal.to_string());
    Ok(ids)
}

/// Standalone gadget encoding a sink of power 2 + x·2^{−m}, with terminal
/// node `v` of the given kind.
pub fn gen_gadget(x: &BigInt, m: u32, terminal: NodeKind) -> Result<Network, GenError> {
    let mut b = NetworkBuilder::new();
    add_gadget(&mut b, "", x, m, "v")?;
    b.node("v", terminal);
    Ok(b.build().expect("gadget is a tree"))
}

/// The orientation of a standalone gadget directing every edge toward p_1,
/// including v→s_m.
pub fn gadget_orientation(net: &Network) -> Orientation {
    // Gadget edges are declared left to right.
    Orientation::from_flags(net, |_| true)
}

/// Whether switch capacities are emitted as unbounded or as Σ Pow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapacityMode {
    #[default]
    Unbounded,
    /// Every switch gets the total sink power as capacity.
    Strict,
}

/// Parameters and node roles of a reduction instance. Role lists are
/// indexed by item, 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionMeta {
    pub n_items: usize,
    /// Items as encoded (doubled together with B when some item is 1).
    #[serde(serialize_with = "decimal_list")]
    pub xs: Vec<BigInt>,
    #[serde(serialize_with = "decimal")]
    pub b: BigInt,
    pub doubled: bool,
    pub m: u32,
    pub node_count: usize,
    pub w: Vec<String>,
    pub v: Vec<String>,
    pub t: Vec<String>,
    pub r: Vec<String>,
    pub s_items: Vec<String>,
    pub q: Vec<String>,
    pub p_terminals: Vec<String>,
    pub p_gadgets: Vec<Vec<String>>,
    pub p_gadget: Vec<String>,
    pub s: String,
    pub hub: String,
    pub s_c: String,
    pub w_c: String,
    pub p_c: String,
    /// Amplification data, present for the inapproximability instance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplified: Option<Amplification>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Amplification {
    pub c: u32,
    /// log₂ r = |T|^c.
    pub log2_r: u64,
    #[serde(serialize_with = "decimal")]
    pub h: BigInt,
    /// L as "num/den" before clearing denominators.
    pub l: String,
    /// Factor applied to every value to clear L's denominator.
    #[serde(serialize_with = "decimal")]
    pub scale: BigInt,
    /// (source, attached sink) pairs.
    pub h_sinks: Vec<(String, String)>,
}

pub(crate) fn decimal<S: serde::Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(x)
}

fn decimal_list<S: serde::Serializer>(xs: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(xs.iter().map(|x| x.to_string()))
}

/// Smallest m meeting every condition of the construction.
fn choose_m(xs: &[BigInt], b: &BigInt) -> u32 {
    let n = xs.len();
    let total: BigInt = xs.iter().sum();
    let mut m = 3u32;
    loop {
        let two_m = BigInt::one() << m;
        let ok = &two_m > b
            && two_m > &total - b
            && xs.iter().all(|x| x * (3 * n + 1) < two_m)
            && b + 2u32 < two_m
            && xs.iter().all(|x| x > &BigInt::one());
        if ok {
            return m;
        }
        m += 1;
    }
}

/// Builds the reduction instance from (x_1, …, x_n, B).
pub fn gen_subset_sum_reduction(xs: &[u64], b: u64) -> Result<(Network, ReductionMeta), GenError> {
    gen_subset_sum_reduction_with(xs, b, CapacityMode::Unbounded)
}

pub fn gen_subset_sum_reduction_with(
    xs: &[u64],
    b: u64,
    mode: CapacityMode,
) -> Result<(Network, ReductionMeta), GenError> {
    let (builder, meta) = reduction_builder(xs, b)?;
    let net = builder.build().expect("reduction is a tree");
    Ok((apply_mode(net, mode), meta))
}

fn apply_mode(net: Network, mode: CapacityMode) -> Network {
    if mode == CapacityMode::Unbounded {
        return net;
    }
    let total = net.total_power();
    let kinds = net
        .nodes()
        .iter()
        .map(|node| match &node.kind {
            NodeKind::Switch { .. } => NodeKind::switch(total.clone()),
            k => k.clone(),
        })
        .collect();
    net.with_kinds(kinds).expect("capacities keep validity")
}

fn reduction_builder(xs: &[u64], b: u64) -> Result<(NetworkBuilder, ReductionMeta), GenError> {
    let n = xs.len();
    if n < 7 {
        return Err(GenError::TooFewItems(n));
    }
    if xs.iter().any(|&x| x == 0 || x > b) {
        return Err(GenError::ItemRange);
    }
    // x_i = 1 would make the p_i gadget encode exactly 2^m; doubling every
    // value keeps the instance equivalent.
    let doubled = xs.contains(&1);
    let k = if doubled { 2u32 } else { 1 };
    let xs: Vec<BigInt> = xs.iter().map(|&x| BigInt::from(x) * k).collect();
    let bb = BigInt::from(b) * k;
    let m = choose_m(&xs, &bb);
    let two_m = BigInt::one() << m;

    let mut g = NetworkBuilder::new();
    let name = |p: &str, i: usize| format!("{p}{}", i + 1);
    let mut meta = ReductionMeta {
        n_items: n,
        xs: xs.clone(),
        b: bb.clone(),
        doubled,
        m,
        node_count: 2 * m as usize * (n + 1) + 7 * n + 5,
        w: (0..n).map(|i| name("w", i)).collect(),
        v: (0..n).map(|i| name("v", i)).collect(),
        t: (0..n).map(|i| name("t", i)).collect(),
        r: (0..n).map(|i| name("r", i)).collect(),
        s_items: (0..n).map(|i| name("s", i)).collect(),
        q: (0..n).map(|i| name("q", i)).collect(),
        p_terminals: (0..n).map(|i| name("p", i)).collect(),
        p_gadgets: Vec::new(),
        p_gadget: Vec::new(),
        s: "s".into(),
        hub: "w".into(),
        s_c: "sc".into(),
        w_c: "wc".into(),
        p_c: "pc".into(),
        amplified: None,
    };
    g.unbounded_switch("w");
    for i in 0..n {
        g.unbounded_switch(meta.w[i].clone());
        g.unbounded_switch(meta.v[i].clone());
    }
    g.unbounded_switch("wc");
    for i in 0..n {
        g.sink(meta.p_terminals[i].clone(), 1u32);
        g.sink(meta.q[i].clone(), 4u32);
        g.source(meta.t[i].clone(), 4u32);
        g.source(meta.r[i].clone(), 4u32);
        g.source(meta.s_items[i].clone(), 2u32);
    }
    g.sink("pc", 10u32).source("s", 6u32).source("sc", 10u32);
    for i in 0..n {
        let x = &two_m - &xs[i] * 2u32;
        let prefix = format!("{}.", meta.p_terminals[i]);
        let ids = add_gadget(&mut g, &prefix, &x, m, &meta.p_terminals[i])?;
        meta.p_gadgets.push(ids);
    }
    meta.p_gadget = add_gadget(&mut g, "p.", &bb, m, "w")?;
    for i in 0..n {
        g.edge(meta.p_terminals[i].clone(), meta.t[i].clone())
            .edge(meta.t[i].clone(), meta.w[i].clone())
            .edge(meta.w[i].clone(), "w")
            .edge(meta.q[i].clone(), meta.r[i].clone())
            .edge(meta.r[i].clone(), meta.v[i].clone())
            .edge(meta.v[i].clone(), "w")
            .edge(meta.s_items[i].clone(), "w");
    }
    g.edge(meta.s_items[n - 1].clone(), "wc")
        .edge("wc", "sc")
        .edge("pc", "sc")
        .edge("s", "w");
    Ok((g, meta))
}

/// The orientation of the correctness proof: forced arcs everywhere, and for
/// item i, w_i→t_i and r_i→v_i exactly when i ∈ `subset` (0-based).
pub fn witness_orientation(
    net: &Network,
    meta: &ReductionMeta,
    subset: &[usize],
) -> Result<Orientation, GenError> {
    if let Some(&bad) = subset.iter().find(|&&i| i >= meta.n_items) {
        return Err(GenError::Index(bad));
    }
    let chosen: Vec<bool> = (0..meta.n_items).map(|i| subset.contains(&i)).collect();
    Ok(restricted_orientation(net, meta, |i| (chosen[i], chosen[i])))
}

/// Forced arcs plus, per item, `free(i) = (w_i→t_i, r_i→v_i)`.
pub fn restricted_orientation(
    net: &Network,
    meta: &ReductionMeta,
    free: impl Fn(usize) -> (bool, bool),
) -> Orientation {
    let mut arcs: Vec<(String, String)> = Vec::new();
    let mut arc = |a: &str, b: &str| arcs.push((a.to_string(), b.to_string()));
    let gadget = |arc: &mut dyn FnMut(&str, &str), ids: &[String], terminal: &str| {
        for pair in ids.chunks(2) {
            arc(&pair[1], &pair[0]);
        }
        for j in (1..ids.len() - 1).step_by(2) {
            arc(&ids[j + 1], &ids[j]);
        }
        arc(terminal, &ids[ids.len() - 1]);
    };
    for i in 0..meta.n_items {
        gadget(&mut arc, &meta.p_gadgets[i], &meta.p_terminals[i]);
        arc(&meta.t[i], &meta.p_terminals[i]);
        arc(&meta.r[i], &meta.q[i]);
        arc(&meta.hub, &meta.w[i]);
        arc(&meta.hub, &meta.v[i]);
        arc(&meta.s_items[i], &meta.hub);
        let (tw, rv) = free(i);
        if tw {
            arc(&meta.w[i], &meta.t[i]);
        } else {
            arc(&meta.t[i], &meta.w[i]);
        }
        if rv {
            arc(&meta.r[i], &meta.v[i]);
        } else {
            arc(&meta.v[i], &meta.r[i]);
        }
    }
    gadget(&mut arc, &meta.p_gadget, &meta.hub);
    arc(&meta.s, &meta.hub);
    arc(&meta.s_c, &meta.p_c);
    arc(&meta.s_c, &meta.w_c);
    arc(&meta.s_items[meta.n_items - 1], &meta.w_c);
    if let Some(amp) = &meta.amplified {
        for (src, sink) in &amp.h_sinks {
            arc(src, sink);
        }
    }
    let pairs: Vec<(&str, &str)> = arcs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    Orientation::from_ids(net, &pairs).expect("roles name the edges of the instance")
}

/// Default bit budget for the scale factor of the amplified instance.
pub const INAPPROX_BIT_BUDGET: u64 = 4096;

/// Amplified instance: every source other than s gets an extra sink of
/// power H and H more production; Prod(s) becomes L = 2 + 2^{−m}/(r(n+1))
/// with r = 2^{|T|^c}; all values are then scaled to integers.
pub fn gen_inapprox_instance(xs: &[u64], b: u64, c: u32) -> Result<(Network, ReductionMeta), GenError> {
    gen_inapprox_instance_with(xs, b, c, INAPPROX_BIT_BUDGET)
}

pub fn gen_inapprox_instance_with(
    xs: &[u64],
    b: u64,
    c: u32,
    bit_budget: u64,
) -> Result<(Network, ReductionMeta), GenError> {
    let (base, mut meta) = reduction_builder(xs, b)?;
    let base_net = base.build().expect("reduction is a tree");
    let sources: Vec<String> = base_net
        .sources()
        .map(|s| base_net.id(s).to_string())
        .filter(|id| id != &meta.s)
        .collect();
    let total_nodes = (base_net.node_count() + sources.len()) as u64;
    let log2_r = total_nodes.checked_pow(c).unwrap_or(u64::MAX);
    let n1 = BigInt::from(meta.n_items + 1);
    // L − 2 = 1/(2^m · r · (n+1)).
    let den_bits = meta.m as u64 + log2_r + n1.bits();
    if den_bits > bit_budget {
        return Err(GenError::Budget { bits: den_bits, budget: bit_budget });
    }
    let den = (BigInt::one() << (meta.m as u64 + log2_r)) * &n1;
    let l = Rational::from_integer(BigInt::from(2)) + Rational::new(BigInt::one(), den.clone());
    // Smallest H with H/(H+10) > 2/L, i.e. H > 20/(L − 2).
    let h = &den * 20u32 + 1u32;

    let mut g = NetworkBuilder::new();
    let scale = l.denom().clone();
    let mut h_sinks = Vec::new();
    for node in base_net.nodes() {
        let kind = match &node.kind {
            NodeKind::Source { .. } if node.id == meta.s => NodeKind::Source { prod: l.numer().clone() },
            NodeKind::Source { prod } => NodeKind::Source { prod: (prod + &h) * &scale },
            NodeKind::Sink { pow } => NodeKind::Sink { pow: pow * &scale },
            NodeKind::Switch { .. } => NodeKind::unbounded_switch(),
        };
        g.node(node.id.clone(), kind);
    }
    for &(a, bnode) in base_net.edges() {
        g.edge(base_net.id(a).to_string(), base_net.id(bnode).to_string());
    }
    for src in &sources {
        let sink = format!("h.{src}");
        g.sink(sink.clone(), &h * &scale);
        g.edge(src.clone(), sink.clone());
        h_sinks.push((src.clone(), sink));
    }
    let net = g.build().expect("amplified instance is a tree");
    meta.node_count = net.node_count();
    meta.amplified = Some(Amplification {
        c,
        log2_r,
        h,
        l: l.to_string(),
        scale,
        h_sinks,
    });
    Ok((net, meta))
}

/// Kind mix and value ranges for random trees.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub source_weight: u32,
    pub switch_weight: u32,
    pub sink_weight: u32,
    pub prod: (u64, u64),
    pub cap: (u64, u64),
    pub pow: (u64, u64),
    /// Probability that a switch has unbounded capacity.
    pub unbounded: f64,
}

impl Profile {
    /// Roughly a third of each kind, moderate values.
    pub fn balanced() -> Self {
        Profile {
            source_weight: 1,
            switch_weight: 1,
            sink_weight: 1,
            prod: (5, 30),
            cap: (5, 40),
            pow: (1, 15),
            unbounded: 0.25,
        }
    }

    /// Large productions and capacities; most instances are feasible.
    pub fn generous() -> Self {
        Profile {
            source_weight: 2,
            switch_weight: 1,
            sink_weight: 1,
            prod: (20, 60),
            cap: (30, 100),
            pow: (1, 10),
            unbounded: 0.5,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "balanced" => Some(Self::balanced()),
            "generous" => Some(Self::generous()),
            _ => None,
        }
    }
}

impl Default for Profile {
    fn default() -> Self {
        Self::balanced()
    }
}

/// Tree edges decoded from a Prüfer sequence over `0..seq.len() + 2`.
pub fn prufer_edges(seq: &[usize]) -> Vec<(usize, usize)> {
    let n = seq.len() + 2;
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let Reverse(leaf) = leaves.pop().expect("a tree always has a leaf");
        edges.push((leaf, x));
        degree[x] -= 1;
        if degree[x] == 1 {
            leaves.push(Reverse(x));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    edges.push((a, b));
    edges
}

/// Seeded random tree on `n` nodes with kinds drawn from `profile`.
pub fn gen_random_tree(n: usize, seed: u64, profile: &Profile) -> Result<Network, GenError> {
    if n < 2 {
        return Err(GenError::TooSmall);
    }
    if profile.source_weight == 0 {
        return Err(GenError::NoSources);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    let edges = prufer_edges(&seq);
    let total = profile.source_weight + profile.switch_weight + profile.sink_weight;
    let mut kinds: Vec<u32> = (0..n)
        .map(|_| {
            let x = rng.gen_range(0..total);
            if x < profile.source_weight {
                0
            } else if x < profile.source_weight + profile.switch_weight {
                1
            } else {
                2
            }
        })
        .collect();
    if !kinds.contains(&0) {
        kinds[rng.gen_range(0..n)] = 0;
    }
    if !kinds.contains(&2) {
        let keep = kinds.iter().position(|&k| k == 0).expect("a source exists");
        let others: Vec<usize> = (0..n).filter(|&v| v != keep).collect();
        kinds[others[rng.gen_range(0..others.len())]] = 2;
    }
    let mut b = NetworkBuilder::new();
    for (v, &k) in kinds.iter().enumerate() {
        let id = format!("n{v}");
        let kind = match k {
            0 => NodeKind::source(rng.gen_range(profile.prod.0..=profile.prod.1)),
            1 if rng.gen_bool(profile.unbounded) => NodeKind::unbounded_switch(),
            1 => NodeKind::switch(rng.gen_range(profile.cap.0..=profile.cap.1)),
            _ => NodeKind::sink(rng.gen_range(profile.pow.0..=profile.pow.1)),
        };
        b.node(id, kind);
    }
    for (a, c) in edges {
        b.edge(format!("n{a}"), format!("n{c}"));
    }
    Ok(b.build().expect("Prüfer decoding yields a tree"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::valid;
    use crate::flow::{check_feasible, compute_flow, evaluate};
    use crate::oracle::enumerate_orientations;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn pows(net: &Network) -> Vec<u32> {
        net.nodes()
            .iter()
            .filter_map(|node| match &node.kind {
                NodeKind::Sink { pow } => Some(u32::try_from(pow).unwrap()),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn gadget_powers_follow_bits() {
        let net = gen_gadget(&BigInt::from(2), 3, NodeKind::source(3)).unwrap();
        assert_eq!(pows(&net), vec![2, 2, 3]);
        assert_eq!(net.node_count(), 7);
        assert!(gen_gadget(&BigInt::from(6), 3, NodeKind::source(3)).is_err());
        assert!(gen_gadget(&BigInt::from(6), 2, NodeKind::source(3)).is_err());
    }

    #[test]
    fn gadget_terminal_flow() {
        for m in 3..=5u32 {
            for x in 0..(1i64 << m) - 2 {
                let net = gen_gadget(&BigInt::from(x), m, NodeKind::source(3)).unwrap();
                let o = gadget_orientation(&net);
                let fa = compute_flow(&net, &o);
                let e = net.edge_count() - 1;
                assert_eq!(fa.arc_flow(e), &(q(2, 1) + q(x, 1 << m)));
                assert!(check_feasible(&net, &o).feasible);
            }
        }
    }

    #[test]
    fn gadget_is_forced() {
        let net = gen_gadget(&BigInt::from(5), 3, NodeKind::source(3)).unwrap();
        let feasible: Vec<_> = enumerate_orientations(&net)
            .unwrap()
            .filter(|o| check_feasible(&net, o).feasible)
            .collect();
        assert_eq!(feasible, vec![gadget_orientation(&net)]);
        assert!(valid(&net).is_some());
    }

    #[test]
    fn random_trees_are_deterministic() {
        let p = Profile::balanced();
        let a = gen_random_tree(8, 1, &p).unwrap();
        assert_eq!(a, gen_random_tree(8, 1, &p).unwrap());
        assert_ne!(a, gen_random_tree(8, 2, &p).unwrap());
        for seed in 0..50 {
            let net = gen_random_tree(2 + seed as usize % 10, seed, &p).unwrap();
            assert!(net.sources().count() > 0);
            assert!(net.nodes().iter().any(|n| n.kind.is_sink()));
        }
        let none = Profile { source_weight: 0, ..Profile::balanced() };
        assert_eq!(gen_random_tree(5, 0, &none), Err(GenError::NoSources));
        assert_eq!(gen_random_tree(1, 0, &p), Err(GenError::TooSmall));
    }

    #[test]
    fn prufer_decoding() {
        assert_eq!(prufer_edges(&[]), vec![(0, 1)]);
        let mut e = prufer_edges(&[3, 3, 3]);
        e.sort();
        assert_eq!(e, vec![(0, 3), (1, 3), (2, 3), (3, 4)]);
    }

    #[test]
    fn reduction_size_and_witness() {
        let xs = [2, 3, 5, 7, 11, 13, 17];
        let (net, meta) = gen_subset_sum_reduction(&xs, 20).unwrap();
        assert!(!meta.doubled);
        assert_eq!(net.node_count(), meta.node_count);
        assert_eq!(meta.node_count, 2 * meta.m as usize * 8 + 54);
        let o = witness_orientation(&net, &meta, &[1, 6]).unwrap();
        let obj = evaluate(&net, &o).unwrap();
        assert_eq!((obj.min_load, obj.max_load, obj.reserve), (q(1, 3), q(1, 1), q(2, 3)));
        // Σ = 11 + 13 + 17 = 41 > 20: feasible, but s falls below 1/3.
        let o = witness_orientation(&net, &meta, &[4, 5, 6]).unwrap();
        let obj = evaluate(&net, &o).unwrap();
        assert!(obj.min_load < q(1, 3) && obj.reserve > q(2, 3));
        // Σ = 2 + 3 = 5 < 20: s pushes the s_i above their production.
        let o = witness_orientation(&net, &meta, &[0, 1]).unwrap();
        let report = check_feasible(&net, &o);
        assert!(!report.feasible);
        assert!(report.violations.iter().all(|v| net.id(v.node).starts_with('s')));
    }

    #[test]
    fn unit_items_are_doubled() {
        let (net, meta) = gen_subset_sum_reduction(&[1; 7], 3).unwrap();
        assert!(meta.doubled);
        assert_eq!(meta.b, BigInt::from(6));
        assert_eq!(net.node_count(), 2 * meta.m as usize * 8 + 54);
        let o = witness_orientation(&net, &meta, &[0, 1, 2]).unwrap();
        assert_eq!(evaluate(&net, &o).unwrap().reserve, q(2, 3));
    }

    #[test]
    fn reduction_values_are_small() {
        let (net, _) = gen_subset_sum_reduction(&[2, 3, 5, 7, 11, 13, 17], 20).unwrap();
        for node in net.nodes() {
            match &node.kind {
                NodeKind::Source { prod } => assert!(prod >= &BigInt::from(2) && prod <= &BigInt::from(10)),
                NodeKind::Sink { pow } if !node.id.contains('.') && node.id.starts_with('p') && node.id != "pc" => {
                    assert_eq!(pow, &BigInt::one())
                }
                NodeKind::Sink { pow } => assert!(pow >= &BigInt::from(2) && pow <= &BigInt::from(10)),
                NodeKind::Switch { .. } => {}
            }
        }
        assert!(gen_subset_sum_reduction(&[2; 6], 20).is_err());
        assert!(gen_subset_sum_reduction(&[2, 3, 5, 7, 11, 13, 21], 20).is_err());
    }

    #[test]
    fn strict_capacities() {
        let (net, meta) =
            gen_subset_sum_reduction_with(&[2, 3, 5, 7, 11, 13, 17], 20, CapacityMode::Strict).unwrap();
        let o = witness_orientation(&net, &meta, &[1, 6]).unwrap();
        assert_eq!(evaluate(&net, &o).unwrap().reserve, q(2, 3));
    }

    #[test]
    fn amplified_instance() {
        let (net, meta) = gen_inapprox_instance(&[2, 3, 5, 7, 11, 13, 17], 20, 1).unwrap();
        let amp = meta.amplified.as_ref().unwrap();
        let l: Rational = amp.l.parse().unwrap();
        assert_eq!(amp.scale, l.denom().clone());
        assert_eq!(net.index_of("s").map(|s| net.prod(s).unwrap().clone()), Some(l.numer().clone()));
        // A source with an entering arc splits its extra sink with that arc,
        // so half of H flows back up the tree and the witness is overloaded.
        let o = witness_orientation(&net, &meta, &[1, 6]).unwrap();
        let report = check_feasible(&net, &o);
        assert!(!report.feasible);
        let s = net.index_of("s").unwrap();
        assert!(report.violations.iter().any(|v| v.node == s));
        // Every gadget source is entered as well, so the chains carry H/2
        // each: the amplified instance has no feasible orientation at all.
        assert!(valid(&net).is_none());
        assert!(gen_inapprox_instance(&[2, 3, 5, 7, 11, 13, 17], 20, 2).is_err());
    }
}
