//! Traffic interpretation: costs derived from flux functions, vehicle
//! densities reconstructed from the value function, and evacuation runs.
//!
//! The value function plays the role of a cumulative vehicle count, so the
//! density along an arc is `-u_x` (arcs are oriented in the driving
//! direction). At a node the density is `-sum_i min(d_i u, 0)` over the
//! one-sided derivatives into the incident arcs.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hamiltonian::{control_bound, LagrangianSpec, LocalLagrangian};
use crate::network::{
    Arc, ArcLength, ArcPoint, BcKind, BcValue, BoundaryCondition, End, Grid, GridFunction, Network, Node, NodeKind,
};
use crate::scenario::{InitialSpec, Overrides, PreparedRun, RhsSpec, RunParams, Scenario};
use crate::scheme::{CostField, Scheme, SchemeParams};

/// Concave flux function `f(rho)` with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum FluxShape {
    /// `f(rho) = rho (1 - rho / capacity)`.
    Lwr { capacity: f64 },
    /// Piecewise-linear fundamental diagram through `(densities[k], fluxes[k])`.
    Table { densities: Vec<f64>, fluxes: Vec<f64> },
}

/// A flux function and the scaling `gamma` of the arc it is attached to. The
/// Hamiltonian is `-(1/gamma) f(gamma |p|)`, replaced by its convex envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    pub flux: FluxShape,
    pub gamma: f64,
}

/// Running cost whose Legendre transform is the convex envelope of
/// `p -> -(1/gamma) f(gamma |p|)`.
///
/// For the LWR flux the envelope is `p^2/lambda - |p|` for `|p| >= lambda/2`
/// and `-lambda/4` in between, with `lambda = capacity / gamma`.
pub fn hamiltonian_from_flux(model: &FluxModel) -> Result<LagrangianSpec> {
    let g = model.gamma;
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::InvalidParam(format!("flux scaling {g} must be positive")));
    }
    match &model.flux {
        FluxShape::Lwr { capacity } => {
            if !(capacity.is_finite() && *capacity > 0.0) {
                return Err(Error::InvalidParam(format!("capacity {capacity} must be positive")));
            }
            Ok(LagrangianSpec::Flux { lambda: capacity / g })
        }
        FluxShape::Table { densities, fluxes } => {
            if densities.len() < 2 || densities.len() != fluxes.len() {
                return Err(Error::Table("a fundamental diagram needs at least two (density, flux) pairs".into()));
            }
            if densities[0] != 0.0 || fluxes[0] != 0.0 {
                return Err(Error::Table("a fundamental diagram must start at (0, 0)".into()));
            }
            if densities.iter().chain(fluxes).any(|v| !v.is_finite()) || densities.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Table("densities must be finite and increasing".into()));
            }
            let slopes: Vec<f64> =
                densities.windows(2).zip(fluxes.windows(2)).map(|(r, f)| (f[1] - f[0]) / (r[1] - r[0])).collect();
            if let Some(k) = slopes.windows(2).position(|w| w[1] > w[0] + 1e-12 * (1.0 + w[0].abs())) {
                return Err(Error::NonConcaveFlux(format!("slope increases after density {}", densities[k + 1])));
            }
            let mut pts: Vec<(f64, f64)> = densities.iter().zip(fluxes).map(|(r, f)| (r / g, -f / g)).collect();
            let mirrored: Vec<(f64, f64)> = pts.iter().skip(1).map(|&(p, h)| (-p, h)).collect();
            pts.extend(mirrored);
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let hull = lower_hull(&pts);
            let mut alphas = Vec::with_capacity(hull.len() - 1);
            let mut values = Vec::with_capacity(hull.len() - 1);
            for w in hull.windows(2) {
                let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                alphas.push(slope);
                values.push(slope * w[0].0 - w[0].1);
            }
            Ok(LagrangianSpec::Table { alphas, values })
        }
    }
}

/// Lower convex hull of points sorted by abscissa, without collinear vertices.
fn lower_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// Densities at one time: per arc at every grid index, and per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub time: f64,
    pub arcs: Vec<Vec<f64>>,
    pub nodes: Vec<f64>,
}

impl DensityField {
    pub fn is_finite(&self) -> bool {
        self.arcs.iter().flatten().chain(&self.nodes).all(|v| v.is_finite())
    }

    /// Largest density strictly inside the arcs.
    pub fn max_arc_interior(&self) -> f64 {
        self.arcs
            .iter()
            .filter(|a| a.len() > 2)
            .flat_map(|a| a[1..a.len() - 1].iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_node(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of values outside `[0, cap]`. Values are reported, not clamped.
    pub fn range_violations(&self, cap: f64) -> usize {
        self.arcs.iter().flatten().chain(&self.nodes).filter(|&&v| !(0.0..=cap).contains(&v)).count()
    }
}

/// Density reconstruction: centered differences inside arcs, one-sided at arc
/// ends, and the min-sum rule at nodes with one-sided first-order differences.
pub fn density_from_value(net: &Network, grid: &Grid, u: &GridFunction) -> DensityField {
    let v = &u.values;
    let arcs = grid
        .arcs
        .iter()
        .map(|g| {
            let n = g.cells;
            (0..=n)
                .map(|k| {
                    let (a, b, span) = match k {
                        0 => (0, 1, g.h),
                        k if k == n => (n - 1, n, g.h),
                        k => (k - 1, k + 1, 2.0 * g.h),
                    };
                    -(v[g.samples[b]] - v[g.samples[a]]) / span
                })
                .collect()
        })
        .collect();
    let nodes = (0..net.nodes().len())
        .map(|node| {
            let here = v[grid.node_sample[node]];
            -net.incidence(node)
                .iter()
                .map(|&(arc, end)| {
                    let g = &grid.arcs[arc];
                    let next = match end {
                        End::From => g.samples[1],
                        End::To => g.samples[g.cells - 1],
                    };
                    ((v[next] - here) / g.h).min(0.0)
                })
                .sum::<f64>()
        })
        .collect();
    DensityField { time: u.time, arcs, nodes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EikonalOptions {
    /// Pseudo time step of the marching; defaults to the grid spacing.
    pub dt: Option<f64>,
    /// Stop once the sup-norm change of one step is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EikonalOptions {
    fn default() -> Self {
        Self { dt: None, tol: 1e-8, max_iter: 100_000 }
    }
}

/// Solution of `|v'| = rhs` on the network with `v = 0` at every Dirichlet
/// boundary node, obtained by marching `v_t + (|v_x|^2 - rhs^2)/2 = 0` from
/// zero to a fixed point of the scheme.
pub fn eikonal_initializer(
    net: &Network,
    grid: &Grid,
    rhs: &dyn Fn([f64; 2]) -> f64,
    opts: &EikonalOptions,
) -> Result<GridFunction> {
    let nodes = net
        .nodes()
        .iter()
        .cloned()
        .map(|mut n| {
            if let Some(bc) = n.bc.as_mut().filter(|bc| bc.kind == BcKind::Dirichlet) {
                bc.value = BcValue::Constant(0.0);
            }
            n
        })
        .collect();
    let exits = Network::new(nodes, net.arcs().to_vec())?;

    let cost_at = |x: [f64; 2]| -> Result<LocalLagrangian> {
        let f = rhs(x);
        if !(f.is_finite() && f >= 0.0) {
            return Err(Error::InvalidParam(format!("eikonal right-hand side {f} at {x:?} must be nonnegative")));
        }
        Ok(LocalLagrangian::Quadratic { c: 0.5 * f * f })
    };
    let mut per_arc = Vec::with_capacity(net.arcs().len());
    let mut speed: f64 = 0.0;
    for (a, g) in grid.arcs.iter().enumerate() {
        let mut costs = Vec::with_capacity(g.cells + 1);
        for k in 0..=g.cells {
            let x = net.position(ArcPoint { arc: a, s: k as f64 * g.h });
            speed = speed.max(rhs(x));
            costs.push(cost_at(x)?);
        }
        per_arc.push(costs);
    }
    let mut costs = CostField::from_samples(&exits, per_arc)?;
    for (i, n) in net.nodes().iter().enumerate() {
        if n.kind == NodeKind::Junction {
            let LocalLagrangian::Quadratic { c } = cost_at(n.position)? else { unreachable!() };
            costs.set_staying_cost(i, c);
        }
    }

    let all: Vec<LocalLagrangian> = costs.all().cloned().collect();
    let mu = control_bound(&all, speed, None)?.max(1e-9);
    let dt = opts.dt.unwrap_or(grid.dx).min(net.min_length() / mu);
    let params = SchemeParams::new(grid.dx, dt, dt * opts.max_iter as f64, mu)?;
    let scheme = Scheme::new(&exits, grid, costs, params)?;
    let mut v = GridFunction::constant(grid, 0.0, 0.0);
    scheme.apply_boundary(&mut v, 0.0);
    let mut residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let mut next = scheme.step(&v);
        next.time = 0.0;
        residual = next.max_abs_diff(&v);
        v = next;
        if residual <= opts.tol {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iter, residual })
}

/// Densities of an evacuation run at its snapshot times.
#[derive(Debug, Clone)]
pub struct Evacuation {
    pub run: PreparedRun,
    pub layers: Vec<GridFunction>,
    pub densities: Vec<DensityField>,
}

/// Solves the scenario to its final time and reconstructs densities at the
/// snapshot times (all steps when none are requested).
pub fn run_evacuation(scenario: &Scenario, overrides: &Overrides) -> Result<Evacuation> {
    let has_exit = scenario
        .network
        .nodes()
        .iter()
        .any(|n| n.bc.as_ref().is_some_and(|bc| bc.kind == BcKind::Dirichlet));
    if !has_exit {
        return Err(Error::Scenario("an evacuation needs at least one Dirichlet exit".into()));
    }
    let run = scenario.prepare(overrides)?;
    let layers = {
        let scheme = run.scheme()?;
        if run.snapshots.is_empty() {
            let mut all = Vec::new();
            scheme.solve_with(&run.u0, |_, layer| all.push(layer.clone()))?;
            all
        } else {
            scheme.solve(&run.u0, &run.snapshots)?.snapshots
        }
    };
    let densities = layers.iter().map(|l| density_from_value(&run.network, &run.grid, l)).collect();
    Ok(Evacuation { run, layers, densities })
}

/// A synthetic city-like road network in the unit square: a jittered 5 x 5
/// street lattice whose central avenues have capacity 1 and side streets 4/5,
/// with six exits attached to the outer ring. Every arc is oriented toward
/// the nearest exit, lengths are multiples of 0.01, and the initial datum is
/// the weighted distance to the exits with weight `0.7 - |x - (0.5, 0.5)|^2 / 2`.
pub fn rouen_like() -> Scenario {
    const N: usize = 5;
    let lattice = |i: usize, j: usize| -> [f64; 2] {
        let (fi, fj) = (i as f64, j as f64);
        [
            0.1 + 0.2 * fi + 0.03 * (1.7 * fi + 2.9 * fj + 0.3).sin(),
            0.1 + 0.2 * fj + 0.03 * (2.3 * fi - 1.3 * fj).cos(),
        ]
    };
    let id = |i: usize, j: usize| format!("n{i}{j}");
    let mut positions: BTreeMap<String, [f64; 2]> = BTreeMap::new();
    let mut nodes = Vec::new();
    for j in 0..N {
        for i in 0..N {
            positions.insert(id(i, j), lattice(i, j));
            nodes.push(Node {
                id: id(i, j),
                kind: NodeKind::Junction,
                flux_limiter: Some(-0.4),
                bc: None,
                position: lattice(i, j),
            });
        }
    }
    // (i, j, outward direction)
    let exits = [(0, 1, [-1.0, 0.0]), (0, 3, [-1.0, 0.0]), (4, 2, [1.0, 0.0]), (2, 0, [0.0, -1.0]), (1, 4, [0.0, 1.0]), (3, 4, [0.0, 1.0])];
    let mut edges: Vec<(String, String, f64)> = Vec::new();
    for j in 0..N {
        for i in 0..N {
            let main_row = j == 2;
            let main_col = i == 2;
            if i + 1 < N {
                edges.push((id(i, j), id(i + 1, j), if main_row { 1.0 } else { 0.8 }));
            }
            if j + 1 < N {
                edges.push((id(i, j), id(i, j + 1), if main_col { 1.0 } else { 0.8 }));
            }
        }
    }
    for (k, &(i, j, d)) in exits.iter().enumerate() {
        let p = lattice(i, j);
        let q = [(p[0] + 0.07 * d[0]).clamp(0.0, 1.0), (p[1] + 0.07 * d[1]).clamp(0.0, 1.0)];
        let exit = format!("exit{k}");
        positions.insert(exit.clone(), q);
        nodes.push(Node {
            id: exit.clone(),
            kind: NodeKind::Boundary,
            flux_limiter: None,
            bc: Some(BoundaryCondition { kind: BcKind::Dirichlet, value: BcValue::Constant(0.0) }),
            position: q,
        });
        edges.push((id(i, j), exit, 1.0));
    }
    let length = |a: &str, b: &str| {
        let (p, q) = (positions[a], positions[b]);
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        ((d * 100.0).round() / 100.0).max(0.05)
    };
    let make_arcs = |edges: &[(String, String, f64)]| -> Vec<Arc> {
        edges
            .iter()
            .enumerate()
            .map(|(k, (a, b, lambda))| Arc {
                id: format!("r{k:02}"),
                from: a.clone(),
                to: b.clone(),
                length: ArcLength::Finite(length(a, b)),
                lagrangian: LagrangianSpec::Flux { lambda: *lambda },
            })
            .collect()
    };
    let draft = Network::new(nodes.clone(), make_arcs(&edges)).expect("lattice network is valid");
    let exit_ids: Vec<usize> = (0..exits.len()).map(|k| draft.node_by_id(&format!("exit{k}")).unwrap()).collect();
    let mut to_exit = vec![f64::INFINITY; draft.nodes().len()];
    for &e in &exit_ids {
        for (d, x) in to_exit.iter_mut().zip(draft.node_distances(e)) {
            *d = d.min(x);
        }
    }
    for e in edges.iter_mut() {
        let (a, b) = (draft.node_by_id(&e.0).unwrap(), draft.node_by_id(&e.1).unwrap());
        if to_exit[b] > to_exit[a] {
            std::mem::swap(&mut e.0, &mut e.1);
        }
    }
    let network = Network::new(nodes, make_arcs(&edges)).expect("lattice network is valid");
    Scenario {
        name: "rouen".into(),
        network,
        params: RunParams {
            dx: Some(0.01),
            dt: Some(0.05),
            t_final: Some(1.5),
            snapshots: vec![0.0, 0.5, 1.0, 1.5],
            ..RunParams::default()
        },
        initial: InitialSpec::Eikonal {
            rhs: RhsSpec::RadialQuadratic { peak: 0.7, center: [0.5, 0.5], curvature: 0.5 },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_grid;
    use crate::network::tests_support::{single_arc, star};

    fn numerical_conjugate(h: impl Fn(f64) -> f64, alpha: f64) -> f64 {
        (-40_000..=40_000).map(|k| k as f64 * 1e-4).map(|p| alpha * p - h(p)).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn lwr_gives_flux_cost() {
        for (cap, gamma, lambda) in [(1.0, 1.0, 1.0), (0.8, 1.0, 0.8), (1.0, 2.0, 0.5)] {
            let spec = hamiltonian_from_flux(&FluxModel { flux: FluxShape::Lwr { capacity: cap }, gamma }).unwrap();
            assert_eq!(spec, LagrangianSpec::Flux { lambda });
        }
        // L(a) = (|a| + 1)^2 / 4 is the conjugate of p^2 - |p| (through its envelope).
        for a in [-1.5, -0.3, 0.0, 0.7, 2.0] {
            let l = LocalLagrangian::Flux { lambda: 1.0 }.value(a);
            let num = numerical_conjugate(|p| p * p - p.abs(), a);
            assert!((l - num).abs() < 1e-6, "{a}: {l} vs {num}");
        }
    }

    #[test]
    fn tabulated_diagram_matches_envelope() {
        let lambda = 1.0;
        let densities: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let fluxes: Vec<f64> = densities.iter().map(|r| r - r * r / lambda).collect();
        let spec = hamiltonian_from_flux(&FluxModel { flux: FluxShape::Table { densities, fluxes }, gamma: 1.0 }).unwrap();
        let l = spec.at(0.0).unwrap();
        let exact = LocalLagrangian::Flux { lambda };
        for k in -30..=30 {
            let p = k as f64 * 0.05;
            assert!((l.hamiltonian(p) - exact.hamiltonian(p)).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn convex_flux_rejected() {
        let m = FluxModel { flux: FluxShape::Table { densities: vec![0.0, 1.0, 2.0], fluxes: vec![0.0, 0.1, 1.0] }, gamma: 1.0 };
        assert!(matches!(hamiltonian_from_flux(&m), Err(Error::NonConcaveFlux(_))));
    }

    #[test]
    fn density_examples() {
        let net = single_arc(1.0);
        let grid = build_grid(&net, 0.1).unwrap();
        let u = GridFunction::sample(&net, &grid, 0.0, |p| 1.0 - 0.3 * p.s);
        let d = density_from_value(&net, &grid, &u);
        assert!(d.arcs[0].iter().all(|r| (r - 0.3).abs() < 1e-12));
        let c = density_from_value(&net, &grid, &GridFunction::constant(&grid, 2.0, 0.0));
        assert!(c.arcs.iter().flatten().chain(&c.nodes).all(|&r| r == 0.0));

        let net = star(3);
        let grid = build_grid(&net, 0.1).unwrap();
        let slopes = [-0.2, 0.5, -0.1];
        let u = GridFunction::sample(&net, &grid, 0.0, |p| 1.0 + slopes[p.arc] * p.s);
        let d = density_from_value(&net, &grid, &u);
        assert!((d.nodes[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn eikonal_distance_on_one_arc() {
        let net = single_arc(1.0);
        let grid = build_grid(&net, 0.05).unwrap();
        let v = eikonal_initializer(&net, &grid, &|_| 1.0, &EikonalOptions::default()).unwrap();
        for i in 0..grid.len() {
            let s = grid.arc_point(&net, i).s;
            assert!((v.values[i] - s.min(1.0 - s)).abs() < 1e-9, "s = {s}: {}", v.values[i]);
        }
        let zero = eikonal_initializer(&net, &grid, &|_| 0.0, &EikonalOptions::default()).unwrap();
        assert!(zero.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn generated_city_matches_bundled_file() {
        let generated = rouen_like();
        let bundled = Scenario::builtin("rouen").unwrap();
        assert_eq!(generated.network.arcs(), bundled.network.arcs());
        assert_eq!(generated.network.nodes(), bundled.network.nodes());
        assert_eq!(generated.initial, bundled.initial);
        assert!(generated.network.min_length() >= 0.05);
    }
}
