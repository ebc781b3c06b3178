//! Tree networks, orientations, and the JSON instance/orientation documents.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Exact rational number: arbitrary precision, always in lowest terms.
pub type Rational = BigRational;

/// Capacity of a switch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Capacity {
    Finite(BigInt),
    Unbounded,
}

impl Capacity {
    pub fn finite(&self) -> Option<&BigInt> {
        match self {
            Capacity::Finite(c) => Some(c),
            Capacity::Unbounded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Source { prod: BigInt },
    Switch { cap: Capacity },
    Sink { pow: BigInt },
}

impl NodeKind {
    pub fn source(prod: impl Into<BigInt>) -> Self {
        NodeKind::Source { prod: prod.into() }
    }

    pub fn switch(cap: impl Into<BigInt>) -> Self {
        NodeKind::Switch { cap: Capacity::Finite(cap.into()) }
    }

    pub fn unbounded_switch() -> Self {
        NodeKind::Switch { cap: Capacity::Unbounded }
    }

    pub fn sink(pow: impl Into<BigInt>) -> Self {
        NodeKind::Sink { pow: pow.into() }
    }

    pub fn is_source(&self) -> bool {
        matches!(self, NodeKind::Source { .. })
    }

    pub fn is_sink(&self) -> bool {
        matches!(self, NodeKind::Sink { .. })
    }

    pub fn is_switch(&self) -> bool {
        matches!(self, NodeKind::Switch { .. })
    }

    fn validate(&self) -> Result<(), String> {
        match self {
            NodeKind::Source { prod } if !prod.is_positive() => {
                Err(format!("production must be positive, got {prod}"))
            }
            NodeKind::Switch { cap: Capacity::Finite(c) } if c.is_negative() => {
                Err(format!("capacity must be non-negative, got {c}"))
            }
            NodeKind::Sink { pow } if pow.is_negative() => {
                Err(format!("power must be non-negative, got {pow}"))
            }
            _ => Ok(()),
        }
    }

    fn scaled(&self, q: &BigInt) -> NodeKind {
        match self {
            NodeKind::Source { prod } => NodeKind::Source { prod: prod * q },
            NodeKind::Switch { cap: Capacity::Finite(c) } => {
                NodeKind::Switch { cap: Capacity::Finite(c * q) }
            }
            NodeKind::Switch { cap: Capacity::Unbounded } => self.clone(),
            NodeKind::Sink { pow } => NodeKind::Sink { pow: pow * q },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("node `{id}`, field `{field}`: {message}")]
    Field { id: String, field: &'static str, message: String },
    #[error("network has no nodes")]
    Empty,
    #[error("duplicate node id `{0}`")]
    DuplicateId(String),
    #[error("edge references unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("edge set is not a tree: {0}")]
    NotTree(String),
    #[error("invalid numbering: {0}")]
    Numbering(String),
    #[error("invalid orientation: {0}")]
    Orientation(String),
}

/// Immutable tree network with a node numbering 𝒩.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<(usize, usize)>,
    order: Vec<usize>,
    rank: Vec<usize>,
    adj: Vec<Vec<(usize, usize)>>,
    index: HashMap<String, usize>,
}

impl Network {
    /// Builds and validates a network. `numbering` lists node indices in 𝒩
    /// order; `None` means declaration order.
    pub fn new(
        nodes: Vec<Node>,
        edges: Vec<(usize, usize)>,
        numbering: Option<Vec<usize>>,
    ) -> Result<Self, ModelError> {
        let n = nodes.len();
        if n == 0 {
            return Err(ModelError::Empty);
        }
        let mut index = HashMap::with_capacity(n);
        for (i, node) in nodes.iter().enumerate() {
            node.kind.validate().map_err(|message| ModelError::Field {
                id: node.id.clone(),
                field: match node.kind {
                    NodeKind::Source { .. } => "prod",
                    NodeKind::Switch { .. } => "cap",
                    NodeKind::Sink { .. } => "pow",
                },
                message,
            })?;
            if index.insert(node.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateId(node.id.clone()));
            }
        }
        if edges.len() != n - 1 {
            return Err(ModelError::NotTree(format!(
                "{} nodes need {} edges, found {}",
                n,
                n - 1,
                edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for (e, &(a, b)) in edges.iter().enumerate() {
            for x in [a, b] {
                if x >= n {
                    return Err(ModelError::UnknownNode(format!("#{x}")));
                }
            }
            if a == b {
                return Err(ModelError::SelfLoop(nodes[a].id.clone()));
            }
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        // n - 1 edges and connected implies a tree.
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut reached = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    stack.push(w);
                }
            }
        }
        if reached != n {
            return Err(ModelError::NotTree(
                "edges contain a cycle or leave the graph disconnected".into(),
            ));
        }

        let order = numbering.unwrap_or_else(|| (0..n).collect());
        if order.len() != n {
            return Err(ModelError::Numbering(format!(
                "expected {n} entries, found {}",
                order.len()
            )));
        }
        let mut rank = vec![usize::MAX; n];
        for (r, &v) in order.iter().enumerate() {
            if v >= n || rank[v] != usize::MAX {
                return Err(ModelError::Numbering(
                    "numbering must list every node exactly once".into(),
                ));
            }
            rank[v] = r;
        }
        for list in &mut adj {
            list.sort_by_key(|&(w, _)| rank[w]);
        }
        Ok(Network { nodes, edges, order, rank, adj, index })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, v: usize) -> &Node {
        &self.nodes[v]
    }

    pub fn kind(&self, v: usize) -> &NodeKind {
        &self.nodes[v].kind
    }

    pub fn id(&self, v: usize) -> &str {
        &self.nodes[v].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Neighbors of `v` as `(neighbor, edge)` pairs, sorted by 𝒩.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Edge joining `u` and `v`, if any.
    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    /// Position of `v` in 𝒩 (0-based).
    pub fn rank(&self, v: usize) -> usize {
        self.rank[v]
    }

    /// Node indices in 𝒩 order.
    pub fn numbering(&self) -> &[usize] {
        &self.order
    }

    pub fn sources(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&v| self.nodes[v].kind.is_source())
    }

    pub fn prod(&self, v: usize) -> Option<&BigInt> {
        match &self.nodes[v].kind {
            NodeKind::Source { prod } => Some(prod),
            _ => None,
        }
    }

    /// σ: the largest production.
    pub fn max_prod(&self) -> BigInt {
        self.sources()
            .filter_map(|s| self.prod(s).cloned())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// Π: the total power of all sinks.
    pub fn total_power(&self) -> BigInt {
        self.nodes
            .iter()
            .map(|node| match &node.kind {
                NodeKind::Sink { pow } => pow.clone(),
                _ => BigInt::zero(),
            })
            .sum()
    }

    /// Edges sorted by (smaller endpoint rank, larger endpoint rank).
    pub fn edges_by_rank(&self) -> Vec<usize> {
        let mut es: Vec<usize> = (0..self.edges.len()).collect();
        es.sort_by_key(|&e| self.rank_key(e));
        es
    }

    pub(crate) fn rank_key(&self, e: usize) -> (usize, usize) {
        let (a, b) = self.edges[e];
        let (ra, rb) = (self.rank[a], self.rank[b]);
        (ra.min(rb), ra.max(rb))
    }

    /// Copy of the network with node kinds replaced, edges and 𝒩 kept.
    pub fn with_kinds(&self, kinds: Vec<NodeKind>) -> Result<Self, ModelError> {
        assert_eq!(kinds.len(), self.nodes.len());
        let nodes = self
            .nodes
            .iter()
            .zip(kinds)
            .map(|(node, kind)| Node { id: node.id.clone(), kind })
            .collect();
        Network::new(nodes, self.edges.clone(), Some(self.order.clone()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("serializable document")
    }

    fn to_document(&self) -> NetworkDoc {
        let nodes = self
            .nodes
            .iter()
            .map(|node| {
                let mut doc = NodeDoc {
                    id: node.id.clone(),
                    kind: String::new(),
                    prod: None,
                    cap: None,
                    pow: None,
                };
                match &node.kind {
                    NodeKind::Source { prod } => {
                        doc.kind = "source".into();
                        doc.prod = Some(int_value(prod));
                    }
                    NodeKind::Switch { cap } => {
                        doc.kind = "switch".into();
                        doc.cap = Some(match cap {
                            Capacity::Finite(c) => int_value(c),
                            Capacity::Unbounded => Value::String(UNBOUNDED.into()),
                        });
                    }
                    NodeKind::Sink { pow } => {
                        doc.kind = "sink".into();
                        doc.pow = Some(int_value(pow));
                    }
                }
                doc
            })
            .collect();
        NetworkDoc {
            nodes,
            edges: self
                .edges
                .iter()
                .map(|&(a, b)| [self.nodes[a].id.clone(), self.nodes[b].id.clone()])
                .collect(),
            numbering: Some(self.order.iter().map(|&v| self.nodes[v].id.clone()).collect()),
        }
    }
}

impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

/// Small builder used by generators and tests.
#[derive(Debug, Default, Clone)]
pub struct NetworkBuilder {
    nodes: Vec<Node>,
    edges: Vec<(String, String)>,
    numbering: Option<Vec<String>>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&mut self, id: impl Into<String>, kind: NodeKind) -> &mut Self {
        self.nodes.push(Node { id: id.into(), kind });
        self
    }

    pub fn source(&mut self, id: impl Into<String>, prod: impl Into<BigInt>) -> &mut Self {
        self.node(id, NodeKind::source(prod))
    }

    pub fn switch(&mut self, id: impl Into<String>, cap: impl Into<BigInt>) -> &mut Self {
        self.node(id, NodeKind::switch(cap))
    }

    pub fn unbounded_switch(&mut self, id: impl Into<String>) -> &mut Self {
        self.node(id, NodeKind::unbounded_switch())
    }

    pub fn sink(&mut self, id: impl Into<String>, pow: impl Into<BigInt>) -> &mut Self {
        self.node(id, NodeKind::sink(pow))
    }

    pub fn edge(&mut self, a: impl Into<String>, b: impl Into<String>) -> &mut Self {
        self.edges.push((a.into(), b.into()));
        self
    }

    pub fn numbering<S: Into<String>>(&mut self, ids: impl IntoIterator<Item = S>) -> &mut Self {
        self.numbering = Some(ids.into_iter().map(Into::into).collect());
        self
    }

    pub fn build(&self) -> Result<Network, ModelError> {
        let mut index = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if index.insert(node.id.as_str(), i).is_some() {
                return Err(ModelError::DuplicateId(node.id.clone()));
            }
        }
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| ModelError::UnknownNode(id.to_string()))
        };
        let edges = self
            .edges
            .iter()
            .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let numbering = match &self.numbering {
            Some(ids) => Some(
                ids.iter()
                    .map(|id| lookup(id))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        Network::new(self.nodes.clone(), edges, numbering)
    }
}

/// A direction for every edge, stored as `(tail, head)` per edge index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Orientation {
    arcs: Vec<(usize, usize)>,
}

impl Orientation {
    /// Builds an orientation from one `(tail, head)` pair per edge, in any order.
    pub fn from_arcs(net: &Network, arcs: &[(usize, usize)]) -> Result<Self, ModelError> {
        let mut out: Vec<Option<(usize, usize)>> = vec![None; net.edge_count()];
        for &(t, h) in arcs {
            if t >= net.node_count() || h >= net.node_count() {
                return Err(ModelError::Orientation("arc references unknown node".into()));
            }
            let e = net.edge_between(t, h).ok_or_else(|| {
                ModelError::Orientation(format!("no edge between `{}` and `{}`", net.id(t), net.id(h)))
            })?;
            if out[e].replace((t, h)).is_some() {
                return Err(ModelError::Orientation(format!(
                    "edge [{}, {}] oriented twice",
                    net.id(t),
                    net.id(h)
                )));
            }
        }
        let arcs = out
            .into_iter()
            .enumerate()
            .map(|(e, a)| {
                a.ok_or_else(|| {
                    let (x, y) = net.edge(e);
                    ModelError::Orientation(format!(
                        "edge [{}, {}] has no direction",
                        net.id(x),
                        net.id(y)
                    ))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Orientation { arcs })
    }

    /// Orientation from `(tail, head)` pairs already listed in edge order.
    pub(crate) fn from_edge_arcs(arcs: Vec<(usize, usize)>) -> Self {
        Orientation { arcs }
    }

    pub fn from_ids(net: &Network, arcs: &[(&str, &str)]) -> Result<Self, ModelError> {
        let lookup = |id: &str| {
            net.index_of(id)
                .ok_or_else(|| ModelError::UnknownNode(id.to_string()))
        };
        let arcs = arcs
            .iter()
            .map(|&(a, b)| Ok((lookup(a)?, lookup(b)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        Orientation::from_arcs(net, &arcs)
    }

    /// Orientation from per-edge flags: `true` directs edge `e` from its
    /// second endpoint to its first.
    pub fn from_flags(net: &Network, reversed: impl Fn(usize) -> bool) -> Self {
        let arcs = net
            .edges()
            .iter()
            .enumerate()
            .map(|(e, &(a, b))| if reversed(e) { (b, a) } else { (a, b) })
            .collect();
        Orientation { arcs }
    }

    /// `(tail, head)` of edge `e`.
    pub fn arc(&self, e: usize) -> (usize, usize) {
        self.arcs[e]
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn edge_count(&self) -> usize {
        self.arcs.len()
    }

    /// Number of arcs entering `v`.
    pub fn in_degree(&self, net: &Network, v: usize) -> usize {
        net.neighbors(v)
            .iter()
            .filter(|&&(_, e)| self.arcs[e].1 == v)
            .count()
    }

    pub fn to_json(&self, net: &Network) -> String {
        let doc = OrientationDoc {
            arcs: self
                .arcs
                .iter()
                .map(|&(t, h)| [net.id(t).to_string(), net.id(h).to_string()])
                .collect(),
        };
        serde_json::to_string(&doc).expect("serializable document")
    }
}

const UNBOUNDED: &str = "unbounded";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prod: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cap: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pow: Option<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    numbering: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OrientationDoc {
    arcs: Vec<[String; 2]>,
}

fn int_value(x: &BigInt) -> Value {
    match x.to_u64() {
        Some(v) => Value::from(v),
        None => Value::String(x.to_string()),
    }
}

fn json_error(err: serde_json::Error) -> ModelError {
    ModelError::Parse {
        line: err.line(),
        column: err.column(),
        message: err.to_string(),
    }
}

fn parse_int(id: &str, field: &'static str, value: &Value) -> Result<BigInt, ModelError> {
    let bad = |message: String| ModelError::Field { id: id.to_string(), field, message };
    match value {
        Value::Number(num) => {
            if let Some(v) = num.as_u64() {
                Ok(BigInt::from(v))
            } else if let Some(v) = num.as_i64() {
                Ok(BigInt::from(v))
            } else {
                Err(bad(format!("expected an integer, found {num}")))
            }
        }
        Value::String(s) => s
            .parse::<BigInt>()
            .map_err(|_| bad(format!("expected an integer, found \"{s}\""))),
        other => Err(bad(format!("expected an integer, found {other}"))),
    }
}

/// Parses and validates an instance document.
pub fn parse_network(text: &str) -> Result<Network, ModelError> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(json_error)?;
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for nd in &doc.nodes {
        fn field<'v>(id: &str, name: &'static str, v: &'v Option<Value>) -> Result<&'v Value, ModelError> {
            v.as_ref().ok_or_else(|| ModelError::Field {
                id: id.to_string(),
                field: name,
                message: "missing".into(),
            })
        }
        let extra = |name: &'static str| ModelError::Field {
            id: nd.id.clone(),
            field: name,
            message: format!("not allowed for kind `{}`", nd.kind),
        };
        let kind = match nd.kind.as_str() {
            "source" => {
                if nd.cap.is_some() {
                    return Err(extra("cap"));
                }
                if nd.pow.is_some() {
                    return Err(extra("pow"));
                }
                NodeKind::Source { prod: parse_int(&nd.id, "prod", field(&nd.id, "prod", &nd.prod)?)? }
            }
            "switch" => {
                if nd.prod.is_some() {
                    return Err(extra("prod"));
                }
                if nd.pow.is_some() {
                    return Err(extra("pow"));
                }
                let cap = match field(&nd.id, "cap", &nd.cap)? {
                    Value::String(s) if s == UNBOUNDED => Capacity::Unbounded,
                    v => Capacity::Finite(parse_int(&nd.id, "cap", v)?),
                };
                NodeKind::Switch { cap }
            }
            "sink" => {
                if nd.prod.is_some() {
                    return Err(extra("prod"));
                }
                if nd.cap.is_some() {
                    return Err(extra("cap"));
                }
                NodeKind::Sink { pow: parse_int(&nd.id, "pow", field(&nd.id, "pow", &nd.pow)?)? }
            }
            other => {
                return Err(ModelError::Field {
                    id: nd.id.clone(),
                    field: "kind",
                    message: format!("unknown kind `{other}`"),
                })
            }
        };
        nodes.push(Node { id: nd.id.clone(), kind });
    }
    let mut index = HashMap::new();
    for (i, node) in nodes.iter().enumerate() {
        if index.insert(node.id.clone(), i).is_some() {
            return Err(ModelError::DuplicateId(node.id.clone()));
        }
    }
    let lookup = |id: &String| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| ModelError::UnknownNode(id.clone()))
    };
    let edges = doc
        .edges
        .iter()
        .map(|[a, b]| Ok((lookup(a)?, lookup(b)?)))
        .collect::<Result<Vec<_>, ModelError>>()?;
    let numbering = match &doc.numbering {
        Some(ids) => Some(ids.iter().map(lookup).collect::<Result<Vec<_>, _>>()?),
        None => None,
    };
    Network::new(nodes, edges, numbering)
}

/// Parses an orientation document against `net`.
pub fn parse_orientation(net: &Network, text: &str) -> Result<Orientation, ModelError> {
    let doc: OrientationDoc = serde_json::from_str(text).map_err(json_error)?;
    let pairs: Vec<(&str, &str)> = doc
        .arcs
        .iter()
        .map(|[a, b]| (a.as_str(), b.as_str()))
        .collect();
    Orientation::from_ids(net, &pairs)
}

/// Multiplies every production, capacity and power by `q`.
pub fn scale_instance(net: &Network, q: &BigInt) -> Network {
    assert!(q >= &BigInt::one(), "scale factor must be at least 1");
    let kinds = net.nodes.iter().map(|node| node.kind.scaled(q)).collect();
    net.with_kinds(kinds).expect("scaling preserves validity")
}

/// The running example: two sources, three switches, three sinks.
pub fn example_network() -> Network {
    NetworkBuilder::new()
        .source("s1", 100)
        .source("s2", 20)
        .switch("w1", 60)
        .switch("w2", 20)
        .switch("w3", 35)
        .sink("p1", 50)
        .sink("p2", 20)
        .sink("p3", 10)
        .edge("s1", "w1")
        .edge("s1", "p3")
        .edge("s2", "w3")
        .edge("w1", "p1")
        .edge("w2", "w1")
        .edge("w2", "w3")
        .edge("w3", "p2")
        .build()
        .expect("example network is valid")
}
