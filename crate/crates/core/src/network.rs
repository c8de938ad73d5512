//! Networks of arcs joined at nodes, their uniform discretization, and value
//! layers living on that discretization.
//!
//! Each arc is parameterized by arc length `s` running from its `from` node
//! (`s = 0`) to its `to` node (`s = length`). A junction node is shared by all of
//! its incident arcs and carries one grid sample. Planar node positions are
//! used for output and for coordinate-based initial data only.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::LagrangianSpec;

const COMMENSURATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Junction,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcKind {
    Dirichlet,
    /// Prescribes the derivative of the solution in the outward direction.
    Neumann,
}

/// Time profile of a boundary datum: a constant or a piecewise-linear table,
/// held constant outside the tabulated range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcValue {
    Constant(f64),
    Table { times: Vec<f64>, values: Vec<f64> },
}

impl BcValue {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            BcValue::Constant(v) => *v,
            BcValue::Table { times, values } => {
                let n = times.len();
                if t <= times[0] {
                    return values[0];
                }
                if t >= times[n - 1] {
                    return values[n - 1];
                }
                let k = times.partition_point(|&x| x <= t) - 1;
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            BcValue::Constant(v) if !v.is_finite() => Err(Error::InvalidParam("boundary value must be finite".into())),
            BcValue::Table { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::InvalidParam("boundary table needs matching, nonempty times and values".into()));
                }
                if times.iter().chain(values).any(|v| !v.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidParam("boundary table must be finite with increasing times".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub kind: BcKind,
    pub value: BcValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    /// Flux limiter `A` of a junction; `-inf` forbids staying at the node.
    pub flux_limiter: Option<f64>,
    /// Boundary datum. A boundary node without one is a free outflow end where
    /// trajectories are constrained to the network.
    pub bc: Option<BoundaryCondition>,
    pub position: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArcLength {
    Finite(f64),
    Unbounded,
}

impl ArcLength {
    pub fn value(self) -> f64 {
        match self {
            ArcLength::Finite(l) => l,
            ArcLength::Unbounded => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length: ArcLength,
    pub lagrangian: LagrangianSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum End {
    From,
    To,
}

/// A point of the network: arc index and arc coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcPoint {
    pub arc: usize,
    pub s: f64,
}

#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    node_index: HashMap<String, usize>,
    arc_index: HashMap<String, usize>,
    /// `(from, to)` node indices of each arc.
    endpoints: Vec<(usize, usize)>,
    /// Incident `(arc, end)` pairs of each node, in arc order.
    incidence: Vec<Vec<(usize, End)>>,
}

impl Network {
    pub fn new(nodes: Vec<Node>, arcs: Vec<Arc>) -> Result<Self> {
        if arcs.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        let mut node_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(n.id.clone()));
            }
        }
        let mut arc_index = HashMap::new();
        let mut endpoints = Vec::with_capacity(arcs.len());
        let mut incidence = vec![Vec::new(); nodes.len()];
        for (i, a) in arcs.iter().enumerate() {
            if arc_index.insert(a.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(a.id.clone()));
            }
            let lookup = |id: &str| {
                node_index
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::UnknownNode { arc: a.id.clone(), node: id.to_string() })
            };
            let (f, t) = (lookup(&a.from)?, lookup(&a.to)?);
            if f == t {
                return Err(Error::SelfLoop { arc: a.id.clone(), node: a.from.clone() });
            }
            match a.length {
                ArcLength::Finite(l) if !(l.is_finite() && l > 0.0) => {
                    return Err(Error::NonPositiveLength { arc: a.id.clone(), length: l });
                }
                ArcLength::Unbounded if nodes[t].kind != NodeKind::Boundary => {
                    return Err(Error::Scenario(format!(
                        "unbounded arc `{}` must end at a boundary node",
                        a.id
                    )));
                }
                _ => {}
            }
            a.lagrangian.validate()?;
            endpoints.push((f, t));
            incidence[f].push((i, End::From));
            incidence[t].push((i, End::To));
        }
        for (i, n) in nodes.iter().enumerate() {
            if !(n.position[0].is_finite() && n.position[1].is_finite()) {
                return Err(Error::Scenario(format!("node `{}` has a non-finite position", n.id)));
            }
            match n.kind {
                NodeKind::Boundary => {
                    if incidence[i].len() != 1 {
                        return Err(Error::BoundaryDegree { node: n.id.clone(), degree: incidence[i].len() });
                    }
                    if n.flux_limiter.is_some() {
                        return Err(Error::Scenario(format!("boundary node `{}` cannot carry a flux limiter", n.id)));
                    }
                    if let Some(bc) = &n.bc {
                        bc.value.validate()?;
                    }
                }
                NodeKind::Junction => {
                    let reason = if n.bc.is_some() {
                        Some("a junction cannot carry a boundary condition")
                    } else if incidence[i].is_empty() {
                        Some("no incident arcs")
                    } else {
                        match n.flux_limiter {
                            None => Some("missing flux limiter A"),
                            Some(a) if a.is_nan() || a == f64::INFINITY => Some("flux limiter must be real or -inf"),
                            _ => None,
                        }
                    };
                    if let Some(reason) = reason {
                        return Err(Error::Junction { node: n.id.clone(), reason: reason.into() });
                    }
                }
            }
        }
        let net = Self { nodes, arcs, node_index, arc_index, endpoints, incidence };
        if !net.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(net)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(n) = queue.pop_front() {
            for &(a, end) in &self.incidence[n] {
                let m = self.other_end(a, end);
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn arc(&self, i: usize) -> &Arc {
        &self.arcs[i]
    }

    pub fn node_by_id(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn arc_by_id(&self, id: &str) -> Option<usize> {
        self.arc_index.get(id).copied()
    }

    pub fn endpoints(&self, arc: usize) -> (usize, usize) {
        self.endpoints[arc]
    }

    pub fn end_node(&self, arc: usize, end: End) -> usize {
        match end {
            End::From => self.endpoints[arc].0,
            End::To => self.endpoints[arc].1,
        }
    }

    fn other_end(&self, arc: usize, end: End) -> usize {
        match end {
            End::From => self.endpoints[arc].1,
            End::To => self.endpoints[arc].0,
        }
    }

    pub fn incidence(&self, node: usize) -> &[(usize, End)] {
        &self.incidence[node]
    }

    pub fn length(&self, arc: usize) -> f64 {
        self.arcs[arc].length.value()
    }

    pub fn min_length(&self) -> f64 {
        self.arcs.iter().map(|a| a.length.value()).fold(f64::INFINITY, f64::min)
    }

    /// Replaces every unbounded arc by a finite one of length `length`.
    pub fn truncated(&self, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParam(format!("truncation length {length} must be positive")));
        }
        let arcs = self
            .arcs
            .iter()
            .cloned()
            .map(|mut a| {
                if a.length == ArcLength::Unbounded {
                    a.length = ArcLength::Finite(length);
                }
                a
            })
            .collect();
        Network::new(self.nodes.clone(), arcs)
    }

    /// Overrides the flux limiter of every junction.
    pub fn with_flux_limiter(&self, a: f64) -> Result<Self> {
        let nodes = self
            .nodes
            .iter()
            .cloned()
            .map(|mut n| {
                if n.kind == NodeKind::Junction {
                    n.flux_limiter = Some(a);
                }
                n
            })
            .collect();
        Network::new(nodes, self.arcs.clone())
    }

    /// Planar position of an arc point, interpolated between the endpoints.
    pub fn position(&self, x: ArcPoint) -> [f64; 2] {
        let (f, t) = self.endpoints[x.arc];
        let (p, q) = (self.nodes[f].position, self.nodes[t].position);
        let len = self.length(x.arc);
        let w = if len.is_finite() { x.s / len } else { 0.0 };
        [p[0] + w * (q[0] - p[0]), p[1] + w * (q[1] - p[1])]
    }

    /// Shortest-path distance along the arcs.
    pub fn geodesic_distance(&self, x: ArcPoint, y: ArcPoint) -> f64 {
        let direct = if x.arc == y.arc { (x.s - y.s).abs() } else { f64::INFINITY };
        let (xf, xt) = self.endpoints[x.arc];
        let (yf, yt) = self.endpoints[y.arc];
        let lx = self.length(x.arc);
        let ly = self.length(y.arc);
        let mut best = direct;
        for (xn, dx) in [(xf, x.s), (xt, lx - x.s)] {
            if !dx.is_finite() {
                continue;
            }
            let dist = self.node_distances(xn);
            for (yn, dy) in [(yf, y.s), (yt, ly - y.s)] {
                if dy.is_finite() {
                    best = best.min(dx + dist[yn] + dy);
                }
            }
        }
        best
    }

    /// Dijkstra distances from `source` to every node.
    pub fn node_distances(&self, source: usize) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
            }
        }
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::from([Item(0.0, source)]);
        while let Some(Item(d, n)) = heap.pop() {
            if d > dist[n] {
                continue;
            }
            for &(a, end) in &self.incidence[n] {
                let m = self.other_end(a, end);
                let nd = d + self.length(a);
                if nd < dist[m] {
                    dist[m] = nd;
                    heap.push(Item(nd, m));
                }
            }
        }
        dist
    }
}

/// How arc lengths are matched to the requested spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    /// Every arc length must be an integer multiple of `dx`.
    #[default]
    Strict,
    /// Each arc uses `ceil(length / dx)` equal cells, so its spacing is at most `dx`.
    Fitted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArcGrid {
    pub h: f64,
    pub cells: usize,
    /// Global sample index of `s = k h`, for `k = 0..=cells`.
    pub samples: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSite {
    Node(usize),
    Interior { arc: usize, k: usize },
}

/// Uniform discretization of a network. Node samples come first in the global
/// numbering, followed by arc interiors in arc order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dx: f64,
    pub arcs: Vec<ArcGrid>,
    pub node_sample: Vec<usize>,
    pub sites: Vec<SampleSite>,
}

pub fn build_grid(net: &Network, dx: f64) -> Result<Grid> {
    build_grid_with(net, dx, Spacing::Strict)
}

pub fn build_grid_with(net: &Network, dx: f64, spacing: Spacing) -> Result<Grid> {
    if !(dx.is_finite() && dx > 0.0) {
        return Err(Error::InvalidParam(format!("dx = {dx} must be positive")));
    }
    let n_nodes = net.nodes().len();
    let mut sites: Vec<SampleSite> = (0..n_nodes).map(SampleSite::Node).collect();
    let node_sample: Vec<usize> = (0..n_nodes).collect();
    let mut arcs = Vec::with_capacity(net.arcs().len());
    for (i, arc) in net.arcs().iter().enumerate() {
        let len = match arc.length {
            ArcLength::Finite(l) => l,
            ArcLength::Unbounded => return Err(Error::Unbounded(arc.id.clone())),
        };
        let ratio = len / dx;
        let cells = match spacing {
            Spacing::Strict => {
                let r = ratio.round();
                if r < 1.0 || (ratio - r).abs() > COMMENSURATE_TOL * ratio.max(1.0) {
                    return Err(Error::NonCommensurate { arc: arc.id.clone(), length: len, dx });
                }
                r as usize
            }
            Spacing::Fitted => {
                let r = ratio.round();
                if (ratio - r).abs() <= COMMENSURATE_TOL * ratio.max(1.0) && r >= 1.0 {
                    r as usize
                } else {
                    ratio.ceil() as usize
                }
            }
        };
        let (f, t) = net.endpoints(i);
        let mut samples = Vec::with_capacity(cells + 1);
        samples.push(node_sample[f]);
        for k in 1..cells {
            samples.push(sites.len());
            sites.push(SampleSite::Interior { arc: i, k });
        }
        samples.push(node_sample[t]);
        arcs.push(ArcGrid { h: len / cells as f64, cells, samples });
    }
    Ok(Grid { dx, arcs, node_sample, sites })
}

impl Grid {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// A representative arc point of a sample (the first incident arc for nodes).
    pub fn arc_point(&self, net: &Network, sample: usize) -> ArcPoint {
        match self.sites[sample] {
            SampleSite::Interior { arc, k } => ArcPoint { arc, s: k as f64 * self.arcs[arc].h },
            SampleSite::Node(n) => {
                let (arc, end) = net.incidence(n)[0];
                let s = match end {
                    End::From => 0.0,
                    End::To => net.length(arc),
                };
                ArcPoint { arc, s }
            }
        }
    }

    /// Samples along an arc as `(s, global index)` pairs.
    pub fn arc_samples(&self, arc: usize) -> impl Iterator<Item = (f64, usize)> + '_ {
        let g = &self.arcs[arc];
        g.samples.iter().enumerate().map(move |(k, &i)| (k as f64 * g.h, i))
    }

    pub fn max_spacing(&self) -> f64 {
        self.arcs.iter().map(|a| a.h).fold(0.0, f64::max)
    }
}

/// One value per grid sample at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<f64>,
    pub time: f64,
}

impl GridFunction {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        Self { values, time }
    }

    pub fn constant(grid: &Grid, value: f64, time: f64) -> Self {
        Self { values: vec![value; grid.len()], time }
    }

    /// Samples `f` at every grid sample.
    pub fn sample(net: &Network, grid: &Grid, time: f64, f: impl Fn(ArcPoint) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.arc_point(net, i))).collect();
        Self { values, time }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest slope between neighbouring samples.
    pub fn lipschitz(&self, grid: &Grid) -> f64 {
        grid.arcs
            .iter()
            .flat_map(|a| a.samples.windows(2).map(move |w| (self.values[w[1]] - self.values[w[0]]).abs() / a.h))
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use super::tests_support::star;

    #[test]
    fn grid_counts() {
        let net = star(2);
        assert_eq!(build_grid(&net, 0.01).unwrap().len(), 201);
        let single = star(1);
        let g = build_grid(&single, 0.25).unwrap();
        assert_eq!(g.arcs[0].samples.len(), 5);
        assert!(matches!(build_grid(&single, 0.3), Err(Error::NonCommensurate { .. })));
        assert!(matches!(build_grid(&single, 0.0), Err(Error::InvalidParam(_))));
        let fitted = build_grid_with(&single, 0.3, Spacing::Fitted).unwrap();
        assert_eq!(fitted.arcs[0].cells, 4);
        assert!((fitted.arcs[0].h - 0.25).abs() < 1e-15);
    }

    #[test]
    fn junction_distance() {
        let net = star(3);
        let d = |a, s, b, t| net.geodesic_distance(ArcPoint { arc: a, s }, ArcPoint { arc: b, s: t });
        assert!((d(0, 0.3, 0, 0.5) - 0.2).abs() < 1e-15);
        assert!((d(0, 0.3, 1, 0.5) - 0.8).abs() < 1e-15);
        assert_eq!(d(2, 0.4, 2, 0.4), 0.0);
    }

    #[test]
    fn boundary_degree_enforced() {
        let mut nodes = star(2).nodes().to_vec();
        nodes[1].kind = NodeKind::Boundary;
        let arcs = vec![
            Arc {
                id: "a".into(),
                from: "O".into(),
                to: "B0".into(),
                length: ArcLength::Finite(1.0),
                lagrangian: LagrangianSpec::Quadratic { c: 0.0 },
            },
            Arc {
                id: "b".into(),
                from: "B1".into(),
                to: "B0".into(),
                length: ArcLength::Finite(1.0),
                lagrangian: LagrangianSpec::Quadratic { c: 0.0 },
            },
        ];
        assert!(matches!(Network::new(nodes, arcs), Err(Error::BoundaryDegree { .. })));
    }

    #[test]
    fn bc_table_interpolates() {
        let v = BcValue::Table { times: vec![0.0, 1.0], values: vec![2.0, 4.0] };
        assert_eq!(v.at(-1.0), 2.0);
        assert_eq!(v.at(0.25), 2.5);
        assert_eq!(v.at(3.0), 4.0);
    }
}
