//! Semi-Lagrangian time stepping on a network.
//!
//! Every sample is updated from the previous layer by minimizing, over the
//! discrete trajectories of one time step ending at that sample, the
//! interpolated value at the foot plus the running cost paid on the way. A
//! trajectory either stays on the sample's arc, or crosses one node: it moves
//! along some arc `j` toward the node, possibly waits there at the staying
//! cost `-A`, then reaches the sample along its own arc.
//!
//! All inner minimizations are exact up to floating point. Along a linear
//! piece of the interpolant the cost of a straight motion is convex in the
//! velocity and is minimized by clamping the unconstrained optimal control;
//! waiting times are resolved by enumerating the finitely many candidates at
//! which the piecewise objective can be optimal; the time spent on the
//! sample's own arc before reaching it is found by golden-section search on a
//! convex function.

mod interp;
mod operator;
mod solve;

pub use interp::interpolate;
pub use solve::{certified_mu, Solution, StepStats};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::LocalLagrangian;
use crate::network::{BcKind, BcValue, End, Grid, Network, NodeKind};

/// How to label a sample whose stay and cross values agree within `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    PreferStay,
    PreferCross,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    /// Bound on the magnitude of admissible controls.
    pub mu: f64,
    /// Tolerance used for tie-breaking between branches.
    pub tol: f64,
    pub tie_break: TieBreak,
}

impl SchemeParams {
    pub fn new(dx: f64, dt: f64, t_final: f64, mu: f64) -> Result<Self> {
        let p = Self { dx, dt, t_final, mu, tol: 1e-12, tie_break: TieBreak::PreferStay };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParam(format!("{name} = {v} must be positive")))
            }
        };
        positive("dx", self.dx)?;
        positive("dt", self.dt)?;
        positive("mu", self.mu)?;
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::InvalidParam(format!("T = {} must be nonnegative", self.t_final)));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(Error::InvalidParam(format!("tol = {} must be nonnegative", self.tol)));
        }
        Ok(())
    }

    /// Number of time steps, `floor(T / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt + 1e-9).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// The trajectory stays on the sample's arc.
    Stay,
    /// The trajectory crosses a node before reaching the sample.
    Cross,
    /// The sample is a junction node.
    Junction,
    /// The sample carries a Dirichlet datum.
    Fixed,
}

/// The minimizing trajectory behind one sample update.
///
/// For `Stay`, `alpha_i` is the velocity along the arc parameterization (the
/// foot is `s - alpha_i dt`). For `Cross`, `alpha_i` is the speed toward the
/// crossed node. `s0` is the time spent waiting at the node and `alpha_j <= 0`
/// the velocity on the departure arc `arc_j`, measured away from the node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateWitness {
    pub branch: Branch,
    pub value: f64,
    pub node: Option<usize>,
    pub alpha_i: f64,
    pub s0: f64,
    pub arc_j: Option<usize>,
    pub alpha_j: f64,
}

impl UpdateWitness {
    fn fixed(value: f64, node: usize) -> Self {
        Self { branch: Branch::Fixed, value, node: Some(node), alpha_i: 0.0, s0: 0.0, arc_j: None, alpha_j: 0.0 }
    }

    /// Largest control magnitude used by the trajectory.
    pub fn max_control(&self) -> f64 {
        self.alpha_i.abs().max(self.alpha_j.abs())
    }
}

/// Running costs frozen at every grid sample, in both orientations, and the
/// staying cost of every junction.
#[derive(Debug, Clone)]
pub struct CostField {
    /// `down[arc][k]` is the cost at sample `k` of a motion toward increasing
    /// `s`, as a function of the speed.
    down: Vec<Vec<LocalLagrangian>>,
    /// `up[arc][k]` is the same for a motion toward decreasing `s`.
    up: Vec<Vec<LocalLagrangian>>,
    staying: Vec<f64>,
}

impl CostField {
    pub fn from_network(net: &Network, grid: &Grid) -> Result<Self> {
        let mut per_arc = Vec::with_capacity(net.arcs().len());
        for (i, arc) in net.arcs().iter().enumerate() {
            let g = &grid.arcs[i];
            let costs = if arc.lagrangian.is_space_dependent() {
                (0..=g.cells).map(|k| arc.lagrangian.at(k as f64 * g.h)).collect::<Result<Vec<_>>>()?
            } else {
                vec![arc.lagrangian.at(0.0)?; g.cells + 1]
            };
            per_arc.push(costs);
        }
        Self::from_samples(net, per_arc)
    }

    /// Builds a field from explicit per-sample costs (velocity measured along
    /// the arc parameterization).
    pub fn from_samples(net: &Network, per_arc: Vec<Vec<LocalLagrangian>>) -> Result<Self> {
        if per_arc.len() != net.arcs().len() {
            return Err(Error::Arity { expected: net.arcs().len(), got: per_arc.len() });
        }
        let up = per_arc.iter().map(|c| c.iter().map(LocalLagrangian::reflect).collect()).collect();
        let staying = net
            .nodes()
            .iter()
            .map(|n| match (n.kind, n.flux_limiter) {
                (NodeKind::Junction, Some(a)) => -a,
                _ => f64::INFINITY,
            })
            .collect();
        Ok(Self { down: per_arc, up, staying })
    }

    /// Overrides the staying cost at a node.
    pub fn set_staying_cost(&mut self, node: usize, cost: f64) {
        self.staying[node] = cost;
    }

    pub fn staying_cost(&self, node: usize) -> f64 {
        self.staying[node]
    }

    /// Cost at sample `k` of `arc`, velocity along the parameterization.
    pub fn at(&self, arc: usize, k: usize) -> &LocalLagrangian {
        &self.down[arc][k]
    }

    pub(crate) fn oriented(&self, arc: usize, k: usize, toward_increasing: bool) -> &LocalLagrangian {
        if toward_increasing {
            &self.down[arc][k]
        } else {
            &self.up[arc][k]
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &LocalLagrangian> {
        self.down.iter().flatten()
    }
}

/// What lies at one end of an arc.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum EndKind {
    Junction(usize),
    Dirichlet(usize, BcValue),
    Neumann(usize, BcValue),
    Outflow(usize),
}

impl EndKind {
    fn of(net: &Network, node: usize) -> Self {
        let n = net.node(node);
        match (&n.kind, &n.bc) {
            (NodeKind::Junction, _) => EndKind::Junction(node),
            (NodeKind::Boundary, Some(bc)) if bc.kind == BcKind::Dirichlet => EndKind::Dirichlet(node, bc.value.clone()),
            (NodeKind::Boundary, Some(bc)) => EndKind::Neumann(node, bc.value.clone()),
            (NodeKind::Boundary, None) => EndKind::Outflow(node),
        }
    }
}

/// The scheme bound to a network, its grid and its costs.
#[derive(Debug, Clone)]
pub struct Scheme<'a> {
    net: &'a Network,
    grid: &'a Grid,
    costs: CostField,
    params: SchemeParams,
    ends: Vec<[EndKind; 2]>,
}

impl<'a> Scheme<'a> {
    /// Checks that one time step can cross at most one node, i.e.
    /// `mu dt <= shortest arc length`.
    pub fn new(net: &'a Network, grid: &'a Grid, costs: CostField, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        let min_length = net.min_length();
        if params.mu * params.dt > min_length * (1.0 + 1e-12) {
            return Err(Error::CrossesTwoNodes { mu: params.mu, dt: params.dt, min_length });
        }
        let ends = (0..net.arcs().len())
            .map(|a| {
                let (f, t) = net.endpoints(a);
                [EndKind::of(net, f), EndKind::of(net, t)]
            })
            .collect();
        Ok(Self { net, grid, costs, params, ends })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn costs(&self) -> &CostField {
        &self.costs
    }

    fn end(&self, arc: usize, end: End) -> &EndKind {
        match end {
            End::From => &self.ends[arc][0],
            End::To => &self.ends[arc][1],
        }
    }
}
