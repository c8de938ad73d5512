use super::{CostField, EndKind, Scheme, UpdateWitness};
use crate::error::{Error, Result};
use crate::hamiltonian::control_bound;
use crate::network::{Grid, GridFunction, Network, NodeKind};

/// Diagnostics of one time step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    /// Largest control magnitude used by a minimizing trajectory.
    pub max_control: f64,
    /// Number of samples whose minimizer sits at the control bound.
    pub bound_hits: usize,
}

impl StepStats {
    fn merge(&mut self, other: StepStats) {
        self.max_control = self.max_control.max(other.max_control);
        self.bound_hits += other.bound_hits;
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Requested layers, in the order requested.
    pub snapshots: Vec<GridFunction>,
    pub final_layer: GridFunction,
    pub steps: usize,
    pub stats: StepStats,
}

/// Control bound for a run started from `u0`: the gradient bound is the
/// discrete Lipschitz constant of `u0`, and the limiter entering the level
/// set is the largest finite flux limiter of the network.
pub fn certified_mu(net: &Network, grid: &Grid, costs: &CostField, u0: &GridFunction) -> Result<f64> {
    let costs: Vec<_> = costs.all().cloned().collect();
    let a = net
        .nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Junction)
        .filter_map(|n| n.flux_limiter)
        .filter(|a| a.is_finite())
        .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.max(a))));
    control_bound(&costs, u0.lipschitz(grid), a)
}

impl Scheme<'_> {
    /// Overwrites Dirichlet samples with their datum at time `t`.
    pub fn apply_boundary(&self, v: &mut GridFunction, t: f64) {
        for ends in &self.ends {
            for e in ends {
                if let EndKind::Dirichlet(node, f) = e {
                    v.values[self.grid.node_sample[*node]] = f.at(t);
                }
            }
        }
        v.time = t;
    }

    /// One step with per-sample witnesses.
    pub fn step_with_witness(&self, v: &GridFunction) -> (GridFunction, Vec<UpdateWitness>, StepStats) {
        let mut values = Vec::with_capacity(v.values.len());
        let mut witnesses = Vec::with_capacity(v.values.len());
        let mut stats = StepStats::default();
        let mu = self.params.mu;
        for i in 0..self.grid.len() {
            let (value, w) = self.update_sample(v, i);
            let c = w.max_control();
            stats.max_control = stats.max_control.max(c);
            if c >= mu * (1.0 - 1e-9) {
                stats.bound_hits += 1;
            }
            values.push(value);
            witnesses.push(w);
        }
        let mut next = GridFunction::new(values, v.time);
        self.apply_boundary(&mut next, v.time + self.params.dt);
        (next, witnesses, stats)
    }

    /// Layer `n + 1` from layer `n`.
    pub fn step(&self, v: &GridFunction) -> GridFunction {
        self.step_with_witness(v).0
    }

    /// Runs `floor(T / dt)` steps from `u0`, calling `observe(n, layer)` on
    /// every layer including the initial one.
    pub fn solve_with(&self, u0: &GridFunction, mut observe: impl FnMut(usize, &GridFunction)) -> Result<Solution> {
        if u0.values.len() != self.grid.len() {
            return Err(Error::Arity { expected: self.grid.len(), got: u0.values.len() });
        }
        if let Some(i) = u0.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: 0, sample: i });
        }
        let steps = self.params.steps();
        let mut layer = u0.clone();
        let mut stats = StepStats::default();
        observe(0, &layer);
        for n in 1..=steps {
            let (next, _, s) = self.step_with_witness(&layer);
            if let Some(i) = next.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step: n, sample: i });
            }
            stats.merge(s);
            layer = next;
            layer.time = n as f64 * self.params.dt;
            observe(n, &layer);
        }
        Ok(Solution { snapshots: Vec::new(), final_layer: layer, steps, stats })
    }

    /// Runs to the final time, keeping the layers at the requested times
    /// (each rounded down to a multiple of `dt`, capped at the final step).
    pub fn solve(&self, u0: &GridFunction, snapshot_times: &[f64]) -> Result<Solution> {
        let steps = self.params.steps();
        let wanted: Vec<usize> =
            snapshot_times.iter().map(|&t| ((t / self.params.dt + 1e-9).floor().max(0.0) as usize).min(steps)).collect();
        let mut kept: Vec<Option<GridFunction>> = vec![None; wanted.len()];
        let mut solution = self.solve_with(u0, |n, layer| {
            for (slot, &w) in kept.iter_mut().zip(&wanted) {
                if w == n {
                    *slot = Some(layer.clone());
                }
            }
        })?;
        solution.snapshots = kept.into_iter().flatten().collect();
        Ok(solution)
    }
}
