//! Scenario documents: one JSON file describing a network, its costs and
//! boundary data, the initial datum and the run parameters.
//!
//! ```json
//! {
//!   "name": "two-arc",
//!   "nodes": [
//!     {"id": "L", "kind": "boundary", "position": [-1, 0], "bc": {"kind": "dirichlet", "value": 0}},
//!     {"id": "O", "kind": "junction", "position": [0, 0], "A": 0},
//!     {"id": "R", "kind": "boundary", "position": [1, 0], "bc": {"kind": "dirichlet", "value": 0}}
//!   ],
//!   "arcs": [
//!     {"id": "J1", "from": "O", "to": "L", "length": 1, "lagrangian": {"type": "quadratic", "c": 0.5}},
//!     {"id": "J2", "from": "O", "to": "R", "length": 1, "lagrangian": {"type": "quadratic", "c": 1}}
//!   ],
//!   "params": {"dx": 0.01, "dt": 0.025, "T": 0.2},
//!   "initial": {"type": "sin_pi_distance", "node": "O"}
//! }
//! ```
//!
//! `A` may be the string `"-inf"`, arc lengths may be `"unbounded"` (then
//! `params.truncation_length` is required), and boundary values may be tables
//! `{"times": [...], "values": [...]}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hamiltonian::LagrangianSpec;
use crate::network::{
    build_grid_with, Arc, ArcLength, ArcPoint, BoundaryCondition, Grid, GridFunction, Network, Node, NodeKind, Spacing,
};
use crate::scheme::{certified_mu, CostField, Scheme, SchemeParams};
use crate::traffic::{eikonal_initializer, EikonalOptions};

const BUILTINS: [(&str, &str); 4] = [
    ("test1", include_str!("../scenarios/test1.json")),
    ("test2", include_str!("../scenarios/test2.json")),
    ("counterexample", include_str!("../scenarios/counterexample.json")),
    ("rouen", include_str!("../scenarios/rouen.json")),
];

fn de_limiter<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Num(a)) => Ok(Some(a)),
        Some(Raw::Text(t)) if matches!(t.as_str(), "-inf" | "-infinity" | "minus_infinity") => {
            Ok(Some(f64::NEG_INFINITY))
        }
        Some(Raw::Text(t)) => Err(serde::de::Error::custom(format!("invalid flux limiter `{t}`"))),
    }
}

fn ser_limiter<S: Serializer>(a: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match a {
        Some(a) if *a == f64::NEG_INFINITY => s.serialize_str("-inf"),
        Some(a) => s.serialize_f64(*a),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum LengthDoc {
    Finite(f64),
    Sentinel(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    kind: NodeKind,
    #[serde(default)]
    position: [f64; 2],
    #[serde(rename = "A", default, deserialize_with = "de_limiter", serialize_with = "ser_limiter")]
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bc: Option<BoundaryCondition>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcDoc {
    id: String,
    from: String,
    to: String,
    length: LengthDoc,
    lagrangian: LagrangianSpec,
}

/// Run parameters; every field may be overridden at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Fixed control bound; derived from the initial datum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_length: Option<f64>,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-12
}

impl Default for RunParams {
    fn default() -> Self {
        Self {
            dx: None,
            dt: None,
            t_final: None,
            control_bound: None,
            truncation_length: None,
            spacing: Spacing::Strict,
            snapshots: Vec::new(),
            tol: default_tol(),
        }
    }
}

/// Right-hand side of a stationary eikonal problem, as a function of the
/// planar position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RhsSpec {
    Constant { value: f64 },
    /// `peak - curvature |x - center|^2`.
    RadialQuadratic { peak: f64, center: [f64; 2], curvature: f64 },
}

impl RhsSpec {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            RhsSpec::Constant { value } => *value,
            RhsSpec::RadialQuadratic { peak, center, curvature } => {
                let (a, b) = (x[0] - center[0], x[1] - center[1]);
                peak - curvature * (a * a + b * b)
            }
        }
    }
}

/// Values along one arc at increasing coordinates, linearly interpolated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub s: Vec<f64>,
    pub values: Vec<f64>,
}

impl Profile {
    fn at(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            return self.values[0];
        }
        if s >= self.s[n - 1] {
            return self.values[n - 1];
        }
        let k = self.s.partition_point(|&x| x <= s) - 1;
        let w = (s - self.s[k]) / (self.s[k + 1] - self.s[k]);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }
}

/// Initial datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialSpec {
    Constant { value: f64 },
    /// `offset + scale * position[axis]`.
    LinearCoordinate { axis: usize, offset: f64, scale: f64 },
    /// `sin(pi d)` with `d` the geodesic distance to `node`.
    SinPiDistance { node: String },
    /// Signed distance to `node`: `offset + slope_k * d` on arcs listed in
    /// `slopes` (by id), `offset + default_slope * d` elsewhere.
    PiecewiseDistance {
        node: String,
        offset: f64,
        default_slope: f64,
        #[serde(default)]
        slopes: BTreeMap<String, f64>,
    },
    /// Solution of `|v'| = rhs` vanishing at Dirichlet boundary nodes.
    Eikonal { rhs: RhsSpec },
    /// Per-arc profiles in the arc coordinate.
    Table { arcs: BTreeMap<String, Profile> },
}

impl InitialSpec {
    pub fn evaluate(&self, net: &Network, grid: &Grid) -> Result<GridFunction> {
        let node = |id: &str| net.node_by_id(id).ok_or_else(|| Error::Scenario(format!("unknown node `{id}` in initial datum")));
        match self {
            InitialSpec::Constant { value } => Ok(GridFunction::constant(grid, *value, 0.0)),
            InitialSpec::LinearCoordinate { axis, offset, scale } => {
                if *axis > 1 {
                    return Err(Error::Scenario(format!("axis {axis} must be 0 or 1")));
                }
                Ok(GridFunction::sample(net, grid, 0.0, |p| offset + scale * net.position(p)[*axis]))
            }
            InitialSpec::SinPiDistance { node: id } => {
                let n = node(id)?;
                let dist = net.node_distances(n);
                Ok(GridFunction::sample(net, grid, 0.0, |p| (std::f64::consts::PI * point_to_node(net, &dist, p)).sin()))
            }
            InitialSpec::PiecewiseDistance { node: id, offset, default_slope, slopes } => {
                let n = node(id)?;
                let dist = net.node_distances(n);
                for arc in slopes.keys() {
                    net.arc_by_id(arc).ok_or_else(|| Error::Scenario(format!("unknown arc `{arc}` in initial datum")))?;
                }
                Ok(GridFunction::sample(net, grid, 0.0, |p| {
                    let m = slopes.get(&net.arc(p.arc).id).copied().unwrap_or(*default_slope);
                    offset + m * point_to_node(net, &dist, p)
                }))
            }
            InitialSpec::Eikonal { rhs } => eikonal_initializer(net, grid, &|x| rhs.eval(x), &EikonalOptions::default()),
            InitialSpec::Table { arcs } => {
                let mut profiles = Vec::with_capacity(net.arcs().len());
                for a in net.arcs() {
                    let p = arcs.get(&a.id).ok_or_else(|| Error::Scenario(format!("no initial profile for arc `{}`", a.id)))?;
                    if p.s.is_empty() || p.s.len() != p.values.len() || p.s.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(Error::Scenario(format!("malformed initial profile for arc `{}`", a.id)));
                    }
                    profiles.push(p);
                }
                Ok(GridFunction::sample(net, grid, 0.0, |p| profiles[p.arc].at(p.s)))
            }
        }
    }
}

/// Distance from an arc point to a node given the node's distance table.
fn point_to_node(net: &Network, dist: &[f64], p: ArcPoint) -> f64 {
    let (f, t) = net.endpoints(p.arc);
    (p.s + dist[f]).min(net.length(p.arc) - p.s + dist[t])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default)]
    name: String,
    nodes: Vec<NodeDoc>,
    arcs: Vec<ArcDoc>,
    #[serde(default)]
    params: RunParams,
    #[serde(default = "zero_initial")]
    initial: InitialSpec,
}

fn zero_initial() -> InitialSpec {
    InitialSpec::Constant { value: 0.0 }
}

/// The validated network of a scenario document; run parameters and initial
/// datum may be omitted.
pub fn load_network(text: &str) -> Result<Network> {
    Scenario::from_json(text).map(|s| s.network)
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub network: Network,
    pub params: RunParams,
    pub initial: InitialSpec,
}

/// Run-time replacements for scenario parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dx: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    /// Flux limiter applied to every junction.
    pub flux_limiter: Option<f64>,
    pub control_bound: Option<f64>,
}

/// Everything needed to run the scheme on a scenario.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub network: Network,
    pub grid: Grid,
    pub costs: CostField,
    pub u0: GridFunction,
    pub params: SchemeParams,
    pub snapshots: Vec<f64>,
}

impl PreparedRun {
    pub fn scheme(&self) -> Result<Scheme<'_>> {
        Scheme::new(&self.network, &self.grid, self.costs.clone(), self.params.clone())
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = serde_json::from_str(text)?;
        let nodes = doc
            .nodes
            .into_iter()
            .map(|n| Node { id: n.id, kind: n.kind, flux_limiter: n.a, bc: n.bc, position: n.position })
            .collect();
        let mut arcs = Vec::with_capacity(doc.arcs.len());
        for a in doc.arcs {
            let length = match a.length {
                LengthDoc::Finite(l) => ArcLength::Finite(l),
                LengthDoc::Sentinel(s) if s == "unbounded" => ArcLength::Unbounded,
                LengthDoc::Sentinel(s) => {
                    return Err(Error::Scenario(format!("arc `{}`: invalid length `{s}`", a.id)));
                }
            };
            arcs.push(Arc { id: a.id, from: a.from, to: a.to, length, lagrangian: a.lagrangian });
        }
        let network = Network::new(nodes, arcs)?;
        Ok(Self { name: doc.name, network, params: doc.params, initial: doc.initial })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// A bundled scenario by name.
    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_json(text).expect("bundled scenarios are valid"))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTINS.iter().map(|(n, _)| *n)
    }

    /// A bundled scenario name, or else a path to a scenario file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match Self::builtin(name_or_path) {
            Some(s) => Ok(s),
            None => Self::load(name_or_path),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let nodes = self
            .network
            .nodes()
            .iter()
            .map(|n| NodeDoc { id: n.id.clone(), kind: n.kind, position: n.position, a: n.flux_limiter, bc: n.bc.clone() })
            .collect();
        let arcs = self
            .network
            .arcs()
            .iter()
            .map(|a| ArcDoc {
                id: a.id.clone(),
                from: a.from.clone(),
                to: a.to.clone(),
                length: match a.length {
                    ArcLength::Finite(l) => LengthDoc::Finite(l),
                    ArcLength::Unbounded => LengthDoc::Sentinel("unbounded".into()),
                },
                lagrangian: a.lagrangian.clone(),
            })
            .collect();
        let doc = ScenarioDoc {
            name: self.name.clone(),
            nodes,
            arcs,
            params: self.params.clone(),
            initial: self.initial.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Network after truncation of unbounded arcs and limiter overrides.
    pub fn effective_network(&self, flux_limiter: Option<f64>) -> Result<Network> {
        let has_unbounded = self.network.arcs().iter().any(|a| a.length == ArcLength::Unbounded);
        let mut net = if has_unbounded {
            let len = self.params.truncation_length.ok_or_else(|| {
                Error::InvalidParam("unbounded arcs need params.truncation_length".into())
            })?;
            self.network.truncated(len)?
        } else {
            self.network.clone()
        };
        if let Some(a) = flux_limiter {
            net = net.with_flux_limiter(a)?;
        }
        Ok(net)
    }

    pub fn prepare(&self, o: &Overrides) -> Result<PreparedRun> {
        let missing = |name: &str| Error::InvalidParam(format!("{name} is neither in the scenario nor given"));
        let dx = o.dx.or(self.params.dx).ok_or_else(|| missing("dx"))?;
        let dt = o.dt.or(self.params.dt).ok_or_else(|| missing("dt"))?;
        let t_final = o.t_final.or(self.params.t_final).ok_or_else(|| missing("T"))?;
        let network = self.effective_network(o.flux_limiter)?;
        let grid = build_grid_with(&network, dx, self.params.spacing)?;
        let costs = CostField::from_network(&network, &grid)?;
        let u0 = self.initial.evaluate(&network, &grid)?;
        let mu = match o.control_bound.or(self.params.control_bound) {
            Some(mu) => mu,
            None => certified_mu(&network, &grid, &costs, &u0)?,
        };
        let mut params = SchemeParams::new(dx, dt, t_final, mu)?;
        params.tol = self.params.tol;
        Ok(PreparedRun { network, grid, costs, u0, params, snapshots: self.params.snapshots.clone() })
    }
}
