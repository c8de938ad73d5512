//! Running costs on arcs and the Hamiltonians they induce.
//!
//! Every arc carries a convex, coercive running cost `L(s, a)` where `s` is the
//! arc coordinate and `a` the velocity measured along the arc parameterization.
//! The Hamiltonian is its Legendre transform `H(s, p) = sup_a (a p - L(s, a))`.
//!
//! All supported variants have exact conjugates:
//!
//! * `quadratic`: `L = a^2/2 + c`, `H = p^2/2 - c`;
//! * `quadratic_x`: as above with `c` a polynomial in the arc coordinate;
//! * `flux`: `L = (lambda/4)(|a| + 1)^2`, whose conjugate is `p^2/lambda - |p|`
//!   for `|p| >= lambda/2` and the constant `-lambda/4` in between;
//! * `table`: piecewise-linear convex `L` on a finite velocity range (`+inf`
//!   outside), conjugated by enumerating supporting lines.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CONVEXITY_TOL: f64 = 1e-12;

/// Convex piecewise-linear running cost given by its vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlTable {
    alphas: Vec<f64>,
    values: Vec<f64>,
    /// `slopes[k]` is the slope on `[alphas[k], alphas[k + 1]]`.
    slopes: Vec<f64>,
}

impl PwlTable {
    pub fn new(alphas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if alphas.len() != values.len() {
            return Err(Error::Table(format!(
                "{} velocities but {} values",
                alphas.len(),
                values.len()
            )));
        }
        if alphas.len() < 2 {
            return Err(Error::Table("at least two vertices are required".into()));
        }
        if alphas.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Table("entries must be finite".into()));
        }
        if alphas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Table("velocities must be strictly increasing".into()));
        }
        let slopes: Vec<f64> = alphas
            .windows(2)
            .zip(values.windows(2))
            .map(|(a, v)| (v[1] - v[0]) / (a[1] - a[0]))
            .collect();
        for (k, w) in slopes.windows(2).enumerate() {
            if w[1] < w[0] - CONVEXITY_TOL * (1.0 + w[0].abs()) {
                return Err(Error::Table(format!(
                    "not convex at vertex {} (slope {} then {})",
                    k + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(Self { alphas, values, slopes })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, a: f64) -> f64 {
        let n = self.alphas.len();
        if a < self.alphas[0] || a > self.alphas[n - 1] {
            return f64::INFINITY;
        }
        let k = self.alphas.partition_point(|&x| x <= a).clamp(1, n - 1) - 1;
        self.values[k] + self.slopes[k] * (a - self.alphas[k])
    }

    /// Index of the vertex maximizing `a p - L(a)`.
    fn argmax_vertex(&self, p: f64) -> usize {
        // the vertex k is optimal iff slopes[k-1] <= p <= slopes[k]
        self.slopes.partition_point(|&s| s < p)
    }

    pub fn conjugate(&self, p: f64) -> f64 {
        let k = self.argmax_vertex(p);
        self.alphas[k] * p - self.values[k]
    }

    fn reflected(&self) -> Self {
        let alphas: Vec<f64> = self.alphas.iter().rev().map(|a| -a).collect();
        let values: Vec<f64> = self.values.iter().rev().copied().collect();
        let slopes = self.slopes.iter().rev().map(|s| -s).collect();
        Self { alphas, values, slopes }
    }

    fn min_value(&self) -> f64 {
        -self.conjugate(0.0)
    }
}

/// A running cost frozen at one position of an arc, seen as a function of the
/// velocity only.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalLagrangian {
    Quadratic { c: f64 },
    Flux { lambda: f64 },
    Table(Arc<PwlTable>),
}

impl LocalLagrangian {
    pub fn value(&self, a: f64) -> f64 {
        match self {
            LocalLagrangian::Quadratic { c } => 0.5 * a * a + c,
            LocalLagrangian::Flux { lambda } => {
                let w = a.abs() + 1.0;
                0.25 * lambda * w * w
            }
            LocalLagrangian::Table(t) => t.value(a),
        }
    }

    /// `H(p) = sup_a (a p - L(a))`.
    pub fn hamiltonian(&self, p: f64) -> f64 {
        match self {
            LocalLagrangian::Quadratic { c } => 0.5 * p * p - c,
            LocalLagrangian::Flux { lambda } => {
                if p.abs() <= 0.5 * lambda {
                    -0.25 * lambda
                } else {
                    p * p / lambda - p.abs()
                }
            }
            LocalLagrangian::Table(t) => t.conjugate(p),
        }
    }

    /// A maximizer of `a p - L(a)`; nondecreasing in `p`.
    pub fn optimal_control(&self, p: f64) -> f64 {
        match self {
            LocalLagrangian::Quadratic { .. } => p,
            LocalLagrangian::Flux { lambda } => p.signum() * (2.0 * p.abs() / lambda - 1.0).max(0.0),
            LocalLagrangian::Table(t) => t.alphas[t.argmax_vertex(p)],
        }
    }

    /// `min_a L(a)`, which equals `-min_p H(p)`.
    pub fn min_value(&self) -> f64 {
        match self {
            LocalLagrangian::Quadratic { c } => *c,
            LocalLagrangian::Flux { lambda } => 0.25 * lambda,
            LocalLagrangian::Table(t) => t.min_value(),
        }
    }

    /// Cost of moving with the opposite orientation, `a -> L(-a)`.
    pub fn reflect(&self) -> Self {
        match self {
            LocalLagrangian::Table(t) => LocalLagrangian::Table(Arc::new(t.reflected())),
            other => other.clone(),
        }
    }

    /// Minimizer `p_hat` of the Hamiltonian. For flat minima the point closest
    /// to zero is returned.
    pub fn hat_p(&self) -> f64 {
        match self {
            LocalLagrangian::Quadratic { .. } | LocalLagrangian::Flux { .. } => 0.0,
            LocalLagrangian::Table(t) => {
                // H' jumps across 0 at the slope of the segment containing a = 0,
                // or is flat between the neighbouring slopes if a = 0 is a vertex.
                let n = t.alphas.len();
                match t.alphas.iter().position(|&a| a == 0.0) {
                    Some(k) => {
                        let lo = if k > 0 { t.slopes[k - 1] } else { f64::NEG_INFINITY };
                        let hi = if k + 1 < n { t.slopes[k] } else { f64::INFINITY };
                        0.0_f64.clamp(lo, hi)
                    }
                    None => {
                        let k = t.alphas.partition_point(|&a| a < 0.0);
                        if k == 0 {
                            f64::NEG_INFINITY
                        } else if k == n {
                            f64::INFINITY
                        } else {
                            t.slopes[k - 1]
                        }
                    }
                }
            }
        }
    }

    /// Non-increasing part of the Hamiltonian, `H(min(p, p_hat))`.
    pub fn h_minus(&self, p: f64) -> f64 {
        self.hamiltonian(p.min(self.hat_p()))
    }

    /// Non-decreasing part of the Hamiltonian, `H(max(p, p_hat))`.
    pub fn h_plus(&self, p: f64) -> f64 {
        self.hamiltonian(p.max(self.hat_p()))
    }

    /// Speeds `q >= 0` at which `q L'(q) - L(q)` (the Hamiltonian along an
    /// optimal straight motion) crosses `level`. For tables every positive
    /// vertex is returned since the function is piecewise constant there.
    pub fn level_speeds(&self, level: f64) -> Vec<f64> {
        match self {
            LocalLagrangian::Quadratic { c } => {
                let r = 2.0 * (level + c);
                if r >= 0.0 {
                    vec![r.sqrt()]
                } else {
                    Vec::new()
                }
            }
            LocalLagrangian::Flux { lambda } => {
                let r = 4.0 * level / lambda + 1.0;
                if r >= 0.0 {
                    vec![r.sqrt()]
                } else {
                    Vec::new()
                }
            }
            LocalLagrangian::Table(t) => t.alphas.iter().copied().filter(|&a| a > 0.0).collect(),
        }
    }

    /// Interval `[p_lo, p_hi]` on which `H(p) <= level`, if nonempty.
    pub fn sublevel(&self, level: f64) -> Option<(f64, f64)> {
        match self {
            LocalLagrangian::Quadratic { c } => {
                let r = 2.0 * (level + c);
                (r >= 0.0).then(|| (-r.sqrt(), r.sqrt()))
            }
            LocalLagrangian::Flux { lambda } => {
                let r = 1.0 + 4.0 * level / lambda;
                (r >= 0.0).then(|| {
                    let p = 0.5 * lambda * (1.0 + r.sqrt());
                    (-p, p)
                })
            }
            LocalLagrangian::Table(_) => {
                let hat = self.hat_p();
                if !hat.is_finite() || self.hamiltonian(hat) > level {
                    return None;
                }
                let hi = bisect_level(|p| self.hamiltonian(p), hat, 1.0, level);
                let lo = bisect_level(|p| self.hamiltonian(p), hat, -1.0, level);
                Some((lo, hi))
            }
        }
    }

    /// Whether `H` grows to `+inf` in both directions.
    pub fn is_coercive(&self) -> bool {
        match self {
            LocalLagrangian::Quadratic { .. } => true,
            LocalLagrangian::Flux { lambda } => *lambda > 0.0,
            LocalLagrangian::Table(t) => t.alphas[0] < 0.0 && t.alphas[t.alphas.len() - 1] > 0.0,
        }
    }
}

/// Walks from `start` in direction `dir` until `f` exceeds `level`, then
/// bisects for the crossing. `f` must be convex with `f(start) <= level`.
fn bisect_level(f: impl Fn(f64) -> f64, start: f64, dir: f64, level: f64) -> f64 {
    let mut inside = start;
    let mut step = 1.0;
    let mut outside = start + dir * step;
    while f(outside) <= level {
        inside = outside;
        step *= 2.0;
        outside = start + dir * step;
        if step > 1e12 {
            return outside;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mid == inside || mid == outside {
            break;
        }
        if f(mid) <= level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Running cost attached to an arc, as written in a scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LagrangianSpec {
    /// `a^2/2 + c`.
    Quadratic { c: f64 },
    /// `a^2/2 + c(s)` with `c(s) = sum_k coeffs[k] s^k`.
    QuadraticX { coeffs: Vec<f64> },
    /// `(lambda/4)(|a| + 1)^2`.
    Flux { lambda: f64 },
    /// Piecewise-linear convex cost through `(alphas[k], values[k])`.
    Table { alphas: Vec<f64>, values: Vec<f64> },
}

impl LagrangianSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            LagrangianSpec::Quadratic { c } if !c.is_finite() => {
                Err(Error::InvalidParam(format!("quadratic offset {c} is not finite")))
            }
            LagrangianSpec::QuadraticX { coeffs } if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) => {
                Err(Error::InvalidParam("quadratic_x needs finite coefficients".into()))
            }
            LagrangianSpec::Flux { lambda } if !(lambda.is_finite() && *lambda > 0.0) => {
                Err(Error::InvalidParam(format!("flux capacity {lambda} must be positive")))
            }
            LagrangianSpec::Table { alphas, values } => {
                PwlTable::new(alphas.clone(), values.clone()).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// Whether the cost depends on the arc coordinate.
    pub fn is_space_dependent(&self) -> bool {
        matches!(self, LagrangianSpec::QuadraticX { coeffs } if coeffs.len() > 1)
    }

    /// Freezes the cost at arc coordinate `s`.
    pub fn at(&self, s: f64) -> Result<LocalLagrangian> {
        Ok(match self {
            LagrangianSpec::Quadratic { c } => LocalLagrangian::Quadratic { c: *c },
            LagrangianSpec::QuadraticX { coeffs } => {
                let c = coeffs.iter().rev().fold(0.0, |acc, &k| acc * s + k);
                LocalLagrangian::Quadratic { c }
            }
            LagrangianSpec::Flux { lambda } => LocalLagrangian::Flux { lambda: *lambda },
            LagrangianSpec::Table { alphas, values } => {
                LocalLagrangian::Table(Arc::new(PwlTable::new(alphas.clone(), values.clone())?))
            }
        })
    }
}

/// Hamiltonian induced by a running cost.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub lagrangian: LagrangianSpec,
}

impl HamiltonianSpec {
    pub fn new(lagrangian: LagrangianSpec) -> Result<Self> {
        lagrangian.validate()?;
        Ok(Self { lagrangian })
    }

    pub fn eval(&self, s: f64, p: f64) -> Result<f64> {
        Ok(self.lagrangian.at(s)?.hamiltonian(p))
    }

    /// Split point of `H(s, .)`.
    pub fn hat_p(&self, s: f64) -> Result<f64> {
        Ok(self.lagrangian.at(s)?.hat_p())
    }
}

/// Flux limiter at a junction and the matching cost of staying there,
/// `staying_cost = -A`. `A = -inf` forbids staying at the node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionCost {
    pub a: f64,
}

impl JunctionCost {
    pub fn new(a: f64) -> Result<Self> {
        if a.is_nan() || a == f64::INFINITY {
            return Err(Error::InvalidParam(format!("flux limiter {a} must be real or -inf")));
        }
        Ok(Self { a })
    }

    pub fn staying_cost(&self) -> f64 {
        -self.a
    }
}

/// `H(s, p)` for the cost `spec`.
pub fn legendre(spec: &LagrangianSpec, s: f64, p: f64) -> Result<f64> {
    Ok(spec.at(s)?.hamiltonian(p))
}

pub fn h_minus(spec: &LagrangianSpec, s: f64, p: f64) -> Result<f64> {
    Ok(spec.at(s)?.h_minus(p))
}

pub fn h_plus(spec: &LagrangianSpec, s: f64, p: f64) -> Result<f64> {
    Ok(spec.at(s)?.h_plus(p))
}

/// Junction Hamiltonian `F_A(p) = max(A, max_i H_i^-(p_i))`.
///
/// `hams[i]` is the cost on the i-th incident arc evaluated at the junction and
/// oriented so that positive velocities leave the junction; `p[i]` is the
/// derivative of the solution in that same direction.
pub fn flux_limiter_f(a: f64, p: &[f64], hams: &[LocalLagrangian]) -> Result<f64> {
    if p.len() != hams.len() {
        return Err(Error::Arity { expected: hams.len(), got: p.len() });
    }
    Ok(hams
        .iter()
        .zip(p)
        .map(|(h, &pi)| h.h_minus(pi))
        .fold(a, f64::max))
}

/// Upper bound on the magnitude of optimal controls when the solution's
/// gradient is bounded by `gradient_bound`.
///
/// Optimal velocities solve `L'(a) = p` for some attainable slope `p`, and when
/// a trajectory crosses a junction the Hamiltonian level is shared between the
/// arcs it visits (and the limiter `A`, if staying is allowed). The bound is
/// therefore taken over the sublevel set `{H_i <= max(A, max_j H_j(+-P))}` on
/// every arc.
pub fn control_bound(costs: &[LocalLagrangian], gradient_bound: f64, a: Option<f64>) -> Result<f64> {
    if costs.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    if !(gradient_bound.is_finite() && gradient_bound >= 0.0) {
        return Err(Error::InvalidParam(format!("gradient bound {gradient_bound} must be finite and nonnegative")));
    }
    if let Some(bad) = costs.iter().find(|c| !c.is_coercive()) {
        return Err(Error::NonCoercive(format!("{bad:?}")));
    }
    let p = gradient_bound;
    let mut level = costs
        .iter()
        .map(|c| c.hamiltonian(p).max(c.hamiltonian(-p)))
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some(a) = a.filter(|a| a.is_finite()) {
        level = level.max(a);
    }
    let mut mu: f64 = 0.0;
    for c in costs {
        mu = mu.max(c.optimal_control(p).abs()).max(c.optimal_control(-p).abs());
        if let Some((lo, hi)) = c.sublevel(level) {
            mu = mu.max(c.optimal_control(lo).abs()).max(c.optimal_control(hi).abs());
        }
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force conjugate over a fine velocity grid, refined by golden section.
    fn numerical_sup(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let (mut best_a, mut best) = (lo, f(lo));
        for k in 1..=n {
            let a = lo + k as f64 * h;
            let v = f(a);
            if v > best {
                best = v;
                best_a = a;
            }
        }
        let (mut a, mut b) = ((best_a - h).max(lo), (best_a + h).min(hi));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let m = 0.5 * (a + b);
        (m, f(m).max(best))
    }

    #[test]
    fn quadratic_conjugate_closed_form() {
        let q = LagrangianSpec::Quadratic { c: 2.0 };
        assert_eq!(legendre(&q, 0.0, 2.0).unwrap(), 0.0);
        let q = LagrangianSpec::Quadratic { c: 0.5 };
        assert_eq!(legendre(&q, 0.0, 0.0).unwrap(), -0.5);
    }

    #[test]
    fn flux_conjugate_matches_numerical_sup() {
        let spec = LagrangianSpec::Flux { lambda: 1.0 };
        assert!((legendre(&spec, 0.0, 0.5).unwrap() + 0.25).abs() < 1e-15);
        for &lambda in &[1.0, 0.8] {
            let l = LocalLagrangian::Flux { lambda };
            for k in -30..=30 {
                let p = 0.1 * k as f64;
                let (arg, sup) = numerical_sup(|a| a * p - l.value(a), -20.0, 20.0);
                assert!((sup - l.hamiltonian(p)).abs() < 1e-9, "lambda {lambda} p {p}");
                assert!(arg.abs() < 19.0, "optimum must be interior");
                if p.abs() >= 0.5 * lambda {
                    assert!((l.hamiltonian(p) - (p * p / lambda - p.abs())).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn h_minus_clamped_formula_agrees_with_constrained_sup() {
        let spec = LagrangianSpec::Quadratic { c: 1.0 };
        assert_eq!(h_minus(&spec, 0.0, 0.0).unwrap(), -1.0);
        assert_eq!(h_minus(&spec, 0.0, 1.0).unwrap(), -1.0);
        assert_eq!(h_minus(&spec, 0.0, -1.0).unwrap(), -0.5);
        let l = spec.at(0.0).unwrap();
        for &p in &[-2.0, -1.0, -0.3, 0.0, 0.4, 1.5] {
            let (_, constrained) = numerical_sup(|a| a * p - l.value(a), -20.0, 0.0);
            assert!((constrained - l.h_minus(p)).abs() < 1e-10);
            let (_, constrained) = numerical_sup(|a| a * p - l.value(a), 0.0, 20.0);
            assert!((constrained - l.h_plus(p)).abs() < 1e-10);
        }
    }

    #[test]
    fn split_point_identity() {
        let specs = [
            LocalLagrangian::Quadratic { c: 0.3 },
            LocalLagrangian::Flux { lambda: 0.8 },
            LocalLagrangian::Table(Arc::new(
                PwlTable::new(vec![-2.0, -0.5, 1.0, 3.0], vec![3.0, 0.5, 1.0, 4.5]).unwrap(),
            )),
        ];
        for l in &specs {
            let hat = l.hat_p();
            let hmin = l.hamiltonian(hat);
            assert_eq!(l.h_minus(hat), hmin);
            assert_eq!(l.h_plus(hat), hmin);
            assert!((hmin + l.value(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn table_conjugate_is_exact_supporting_line() {
        let t = PwlTable::new(vec![-2.0, -0.5, 1.0, 3.0], vec![3.0, 0.5, 1.0, 4.5]).unwrap();
        for k in -40..=40 {
            let p = 0.1 * k as f64;
            let brute = t
                .alphas()
                .iter()
                .zip(t.values())
                .map(|(a, v)| a * p - v)
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(t.conjugate(p), brute);
        }
        assert_eq!(t.value(5.0), f64::INFINITY);
        assert!((t.value(0.25) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn non_convex_table_rejected() {
        let err = PwlTable::new(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Table(_)));
    }

    #[test]
    fn flux_limiter_examples() {
        let hams = [LocalLagrangian::Quadratic { c: 0.5 }, LocalLagrangian::Quadratic { c: 1.0 }];
        assert_eq!(flux_limiter_f(0.0, &[0.0, 0.0], &hams).unwrap(), 0.0);
        assert_eq!(flux_limiter_f(5.0, &[-1.0, 2.0], &hams).unwrap(), 5.0);
        assert_eq!(flux_limiter_f(f64::NEG_INFINITY, &[0.0, 0.0], &hams).unwrap(), -0.5);
        assert!(matches!(flux_limiter_f(0.0, &[0.0], &hams), Err(Error::Arity { .. })));
    }

    #[test]
    fn control_bound_closed_forms() {
        let q = [LocalLagrangian::Quadratic { c: 3.0 }];
        assert!((control_bound(&q, 1.7, None).unwrap() - 1.7).abs() < 1e-14);
        // flux: maximizing a p - (lambda/4)(|a|+1)^2 gives a = 2p/lambda - 1
        let f = [LocalLagrangian::Flux { lambda: 0.8 }];
        assert!((control_bound(&f, 2.0, None).unwrap() - (2.0 * 2.0 / 0.8 - 1.0)).abs() < 1e-12);
        assert!(matches!(control_bound(&[], 1.0, None), Err(Error::EmptyNetwork)));
        let one_sided = LocalLagrangian::Table(Arc::new(PwlTable::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap()));
        assert!(matches!(control_bound(&[one_sided], 1.0, None), Err(Error::NonCoercive(_))));
    }

    #[test]
    fn control_bound_accounts_for_level_matching() {
        // costs a^2/2 + 1 and a^2/2 + 2 with slopes bounded by 1: the crossing
        // speed on the expensive arc solves q^2/2 - 2 = 1/2 - 1
        let costs = [LocalLagrangian::Quadratic { c: 1.0 }, LocalLagrangian::Quadratic { c: 2.0 }];
        assert!((control_bound(&costs, 1.0, Some(-1.0)).unwrap() - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn level_speeds_solve_energy_equation() {
        for l in [LocalLagrangian::Quadratic { c: 0.7 }, LocalLagrangian::Flux { lambda: 0.8 }] {
            for q in l.level_speeds(0.3) {
                let h = 1e-6;
                let dl = (l.value(q + h) - l.value(q - h)) / (2.0 * h);
                assert!((q * dl - l.value(q) - 0.3).abs() < 1e-8);
            }
        }
    }
}
