//! Error norms, convergence studies and the junction consistency probe.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{ArcLength, Grid, GridFunction, Network, SampleSite};
use crate::scenario::{Overrides, Scenario};
use crate::scheme::{Branch, Scheme, UpdateWitness};

const COINCIDENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dx: f64,
    pub dt: f64,
    #[serde(rename = "E_inf")]
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Slope of the least-squares line of `log E` against `log dx`.
    pub order: f64,
    /// `exp` of the intercept of that line, so that `E ~ constant * dx^order`.
    pub constant: f64,
}

impl ConvergenceReport {
    pub fn from_rows(rows: Vec<ConvergenceRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidParam("a convergence fit needs at least two resolutions".into()));
        }
        let dx: Vec<f64> = rows.iter().map(|r| r.dx).collect();
        let err: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let (order, constant) = fit_power_law(&dx, &err)?;
        Ok(Self { rows, order, constant })
    }

    /// `E(dx_k) / E(dx_{k+1})` for successive rows.
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[0].error / w[1].error).collect()
    }

    pub fn summary(&self) -> String {
        format!("order = {:.4}, constant = {:.4}", self.order, self.constant)
    }
}

/// Least-squares fit of `log y = log K + q log x`, returning `(q, K)`.
pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParam("power-law fit needs matching positive data".into()));
    }
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParam("power-law fit needs distinct abscissae".into()));
    }
    let q = sxy / sxx;
    Ok((q, (my - q * mx).exp()))
}

/// Largest deviation from an exact solution given as a function of position.
pub fn error_sup_exact(
    net: &Network,
    grid: &Grid,
    w: &GridFunction,
    exact: &dyn Fn([f64; 2]) -> Result<f64>,
) -> Result<f64> {
    let mut e: f64 = 0.0;
    for i in 0..grid.len() {
        let x = net.position(grid.arc_point(net, i));
        e = e.max((w.values[i] - exact(x)?).abs());
    }
    Ok(e)
}

/// Fine-grid sample coinciding with each coarse sample.
pub fn restriction(coarse: &Grid, fine: &Grid) -> Result<Vec<usize>> {
    if coarse.arcs.len() != fine.arcs.len() || coarse.node_sample.len() != fine.node_sample.len() {
        return Err(Error::NonCommensurateGrids("grids cover different networks".into()));
    }
    coarse
        .sites
        .iter()
        .map(|site| match *site {
            SampleSite::Node(n) => Ok(fine.node_sample[n]),
            SampleSite::Interior { arc, k } => {
                let (c, f) = (&coarse.arcs[arc], &fine.arcs[arc]);
                let m = k as f64 * c.h / f.h;
                let r = m.round();
                if (m - r).abs() > COINCIDENCE_TOL * m.max(1.0) || r as usize > f.cells {
                    return Err(Error::NonCommensurateGrids(format!(
                        "coarse spacing {} is not a multiple of fine spacing {} on arc {arc}",
                        c.h, f.h
                    )));
                }
                Ok(f.samples[r as usize])
            }
        })
        .collect()
}

/// `max |w - reference|` over the coarse samples, the reference being a layer
/// on a finer commensurate grid of the same network.
pub fn error_sup(coarse: &Grid, w: &GridFunction, fine: &Grid, reference: &GridFunction) -> Result<f64> {
    let map = restriction(coarse, fine)?;
    Ok(map.iter().enumerate().map(|(i, &j)| (w.values[i] - reference.values[j]).abs()).fold(0.0, f64::max))
}

/// Exact steady state of the three-arc junction with arcs from the origin to
/// `(0, 1)`, `(1, -1)` and `(-1, -1)`, as a function of the planar position.
pub fn exact_test2(x: [f64; 2]) -> Result<f64> {
    let [x1, x2] = x;
    let tol = 1e-9;
    let s2 = std::f64::consts::SQRT_2;
    if x1.abs() <= tol && (-tol..=1.0 + tol).contains(&x2) {
        return Ok(s2 + x2);
    }
    if (x2 + x1).abs() <= tol && (-tol..=1.0 + tol).contains(&x1) {
        let to_exit = ((x1 - 1.0).powi(2) + (x2 + 1.0).powi(2)).sqrt();
        let via_junction = (x1 * x1 + x2 * x2).sqrt();
        return Ok((2.0 * to_exit).min(s2 + 2.0 * via_junction));
    }
    if (x2 - x1).abs() <= tol && (-1.0 - tol..=tol).contains(&x1) {
        return Ok(((x1 + 1.0).powi(2) + (x2 + 1.0).powi(2)).sqrt());
    }
    Err(Error::InvalidParam(format!("point {x:?} is not on the three-arc junction")))
}

/// Outcome of one update of the junction consistency probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    pub value: f64,
    pub branch: Branch,
    pub witness: UpdateWitness,
}

/// Closed-form value of the probe when the trajectory stays on the arc.
pub fn probe_stay_value(dx: f64, dt: f64) -> f64 {
    1.0 + dx + 1.5 * dt
}

/// Closed-form value of the probe when the trajectory crosses the junction.
pub fn probe_cross_value(dx: f64, dt: f64) -> f64 {
    1.0 + 3f64.sqrt() * dx + 0.5 * dt
}

/// One scheme update at distance `dx` from the junction of two arcs with costs
/// `a^2/2 + 1` and `a^2/2 + 2` (flux limiter `-1`), on data equal to `1 + d`
/// on the probed arc and `1 - d` on the other, `d` being the distance to the
/// junction.
pub fn consistency_probe(dx: f64, dt: f64) -> Result<ProbeResult> {
    let base = Scenario::builtin("counterexample").expect("bundled");
    let reach = 2.0 * 3f64.sqrt() * dt;
    let cells = (reach.max(1.0) / dx).ceil();
    let arcs = base
        .network
        .arcs()
        .iter()
        .cloned()
        .map(|mut a| {
            a.length = ArcLength::Finite(cells * dx);
            a
        })
        .collect();
    let scenario = Scenario { network: Network::new(base.network.nodes().to_vec(), arcs)?, ..base };
    let run = scenario.prepare(&Overrides { dx: Some(dx), dt: Some(dt), t_final: Some(dt), ..Overrides::default() })?;
    let scheme = run.scheme()?;
    let arc = run.network.arc_by_id("J2").expect("probe arc");
    let (value, witness) = scheme.sl_update_interior(&run.u0, arc, 1);
    Ok(ProbeResult { value, branch: witness.branch, witness })
}

/// Ratio `dt/dx` at which the probe switches from staying to crossing, by
/// bisection on `[lo, hi]`.
pub fn probe_switch_ratio(dx: f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let crosses = |r: f64| consistency_probe(dx, r * dx).map(|p| p.branch == Branch::Cross);
    let (mut a, mut b) = (lo, hi);
    if crosses(a)? || !crosses(b)? {
        return Err(Error::InvalidParam(format!("no branch switch in [{lo}, {hi}]")));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if crosses(m)? {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Where reference solutions come from.
pub enum Reference<'a> {
    /// A closed form in the planar position.
    Exact(&'a dyn Fn([f64; 2]) -> Result<f64>),
    /// The same scenario on a finer commensurate grid.
    FineGrid { dx: f64, dt: f64 },
}

/// Runs `scenario` at each `dx` with `dt = ratio * dx` up to `t_final` and
/// compares the final layers with the reference.
pub fn convergence_study(
    scenario: &Scenario,
    resolutions: &[f64],
    ratio: f64,
    t_final: f64,
    reference: &Reference,
    flux_limiter: Option<f64>,
) -> Result<ConvergenceReport> {
    if resolutions.len() < 3 {
        return Err(Error::InvalidParam("a convergence study needs at least three resolutions".into()));
    }
    let overrides = |dx: f64, dt: f64| Overrides { dx: Some(dx), dt: Some(dt), t_final: Some(t_final), flux_limiter, control_bound: None };
    let fine = match reference {
        Reference::FineGrid { dx, dt } => {
            let run = scenario.prepare(&overrides(*dx, *dt))?;
            let layer = run.scheme()?.solve(&run.u0, &[])?.final_layer;
            Some((run.grid, layer))
        }
        Reference::Exact(_) => None,
    };
    let mut rows = Vec::with_capacity(resolutions.len());
    for &dx in resolutions {
        let dt = ratio * dx;
        let run = scenario.prepare(&overrides(dx, dt))?;
        let w = run.scheme()?.solve(&run.u0, &[])?.final_layer;
        let error = match (reference, &fine) {
            (Reference::Exact(f), _) => error_sup_exact(&run.network, &run.grid, &w, *f)?,
            (Reference::FineGrid { .. }, Some((grid, layer))) => error_sup(&run.grid, &w, grid, layer)?,
            _ => unreachable!(),
        };
        rows.push(ConvergenceRow { dx, dt, error });
    }
    ConvergenceReport::from_rows(rows)
}

/// `sup |S[u0] - u0| / dt`, the growth rate bounding `|w(t_n) - u0| <= K t_n`.
pub fn one_step_defect(scheme: &Scheme, u0: &GridFunction) -> f64 {
    let mut start = u0.clone();
    scheme.apply_boundary(&mut start, u0.time);
    let next = scheme.step(&start);
    next.max_abs_diff(&start) / scheme.params().dt
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let dx = [0.04, 0.02, 0.01];
        let e: Vec<f64> = dx.iter().map(|h| 3.0 * h * h).collect();
        let (q, k) = fit_power_law(&dx, &e).unwrap();
        assert!((q - 2.0).abs() < 1e-12 && (k - 3.0).abs() < 1e-10);
    }

    #[test]
    fn exact_test2_values() {
        let s2 = std::f64::consts::SQRT_2;
        assert!((exact_test2([0.0, 1.0]).unwrap() - (s2 + 1.0)).abs() < 1e-15);
        assert!((exact_test2([0.0, 0.0]).unwrap() - s2).abs() < 1e-15);
        assert_eq!(exact_test2([-1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(exact_test2([1.0, -1.0]).unwrap(), 0.0);
        assert!(exact_test2([0.5, 0.5]).is_err());
    }

    #[test]
    fn probe_examples() {
        let p = consistency_probe(0.01, 0.005).unwrap();
        assert!((p.value - 1.0175).abs() < 1e-12, "{}", p.value);
        assert_eq!(p.branch, Branch::Stay);
        let p = consistency_probe(0.01, 0.01).unwrap();
        assert!((p.value - probe_cross_value(0.01, 0.01)).abs() < 1e-12, "{}", p.value);
        assert_eq!(p.branch, Branch::Cross);
        assert!((p.witness.alpha_i - 3f64.sqrt()).abs() < 1e-6);
        assert!((p.witness.alpha_j + 1.0).abs() < 1e-6);
    }
}
