use super::interp::{Piece, Ray};
use super::{Branch, EndKind, Scheme, TieBreak, UpdateWitness};
use crate::hamiltonian::LocalLagrangian;
use crate::network::{End, GridFunction, SampleSite};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// A foot reached after moving for `theta` and covering distance `delta`; the
/// rest of the available time is spent waiting at the ray origin.
#[derive(Debug, Clone, Copy)]
struct Foot {
    value: f64,
    theta: f64,
    delta: f64,
}

fn better(a: Option<Foot>, b: Option<Foot>) -> Option<Foot> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if y.value < x.value { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// `min v(delta) + theta l(delta / theta)` over `delta` in the piece with
/// `delta <= mu theta`. The objective is convex in the speed `delta / theta`,
/// so the unconstrained optimal control is clamped to the feasible range.
fn move_cost(p: &Piece, l: &LocalLagrangian, theta: f64, mu: f64) -> Option<Foot> {
    if theta <= 0.0 {
        return (p.da == 0.0).then_some(Foot { value: p.va, theta: 0.0, delta: 0.0 });
    }
    let lo = p.da / theta;
    let hi = (p.db / theta).min(mu);
    if lo > hi {
        return None;
    }
    let q = l.optimal_control(-p.slope()).max(lo).min(hi);
    let delta = if q == lo {
        p.da
    } else if q * theta >= p.db {
        p.db
    } else {
        q * theta
    };
    Some(Foot { value: p.value_at(delta) + theta * l.value(q), theta, delta })
}

/// Cost of ending at the ray origin after `sigma`, allowed to wait there at
/// rate `stay` and to start from any foot on the piece.
///
/// For a fixed speed the objective is linear in the moving time, so the
/// optimum either moves for the whole `sigma`, or starts exactly at one end of
/// the piece. In the latter case the cost `tau l(d / tau) + (sigma - tau) stay`
/// is convex in `tau`, and is optimal at the bounds, where the energy
/// `q l'(q) - l(q)` of the motion equals `-stay` (`speeds`), or at a kink of a
/// tabulated cost (also listed in `speeds`).
fn wait_and_move(p: &Piece, l: &LocalLagrangian, speeds: &[f64], sigma: f64, stay: f64, mu: f64) -> Option<Foot> {
    if p.da > mu * sigma {
        return None;
    }
    let mut best = if sigma > 0.0 { move_cost(p, l, sigma, mu) } else { None };
    if !stay.is_finite() {
        return if sigma > 0.0 { best } else { move_cost(p, l, 0.0, mu) };
    }
    for (d, v) in [(p.da, p.va), (p.db, p.vb)] {
        if d == 0.0 {
            best = better(best, Some(Foot { value: v + sigma * stay, theta: 0.0, delta: 0.0 }));
            continue;
        }
        let tmin = d / mu;
        if tmin > sigma {
            continue;
        }
        let mut eval = |tau: f64, q: f64| {
            let value = v + tau * l.value(q) + (sigma - tau) * stay;
            best = better(best, Some(Foot { value, theta: tau, delta: d }));
        };
        eval(tmin, mu);
        if sigma > 0.0 {
            eval(sigma, d / sigma);
        }
        for &q in speeds {
            if q > 0.0 && q < mu {
                let tau = d / q;
                if tau < sigma {
                    eval(tau, q);
                }
            }
        }
    }
    best
}

fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let scale = 1e-15 * (1.0 + a.abs() + b.abs());
    for _ in 0..200 {
        if b - a <= scale {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// A ray leaving a node into one of its arcs, with the cost of moving back
/// toward the node.
struct NodeRay<'v> {
    arc: usize,
    ray: Ray<'v>,
    cost: &'v LocalLagrangian,
    speeds: Vec<f64>,
}

/// Best crossing found so far: time on the sample's own arc, then the foot.
#[derive(Debug, Clone, Copy)]
struct Crossing {
    value: f64,
    tau: f64,
    arc_j: usize,
    foot: Foot,
}

impl<'a> Scheme<'a> {
    pub(crate) fn ray<'v>(&'v self, v: &'v GridFunction, arc: usize, start: usize, dir: isize) -> Ray<'v> {
        let g = &self.grid.arcs[arc];
        let (cells, far) = if dir > 0 { (g.cells - start, End::To) } else { (start, End::From) };
        let extension = match self.end(arc, far) {
            EndKind::Neumann(_, f) => Some(f.at(v.time)),
            _ => None,
        };
        Ray { values: &v.values, samples: &g.samples, h: g.h, start, dir, cells, extension }
    }

    fn node_rays<'v>(&'v self, v: &'v GridFunction, node: usize) -> Vec<NodeRay<'v>> {
        let stay = self.costs.staying_cost(node);
        self.net
            .incidence(node)
            .iter()
            .map(|&(arc, end)| {
                let cells = self.grid.arcs[arc].cells;
                let (start, dir, k, toward_increasing) = match end {
                    End::From => (0, 1, 0, false),
                    End::To => (cells, -1, cells, true),
                };
                let cost = self.costs.oriented(arc, k, toward_increasing);
                let speeds = if stay.is_finite() { cost.level_speeds(-stay) } else { Vec::new() };
                NodeRay { arc, ray: self.ray(v, arc, start, dir), cost, speeds }
            })
            .collect()
    }

    /// Cheapest way to be at `node` after time `sigma`.
    fn junction_foot(&self, rays: &[NodeRay], node: usize, sigma: f64) -> Option<(Foot, usize)> {
        let stay = self.costs.staying_cost(node);
        let mu = self.params.mu;
        let mut best: Option<(Foot, usize)> = None;
        for r in rays {
            for p in r.ray.pieces(mu * sigma) {
                if let Some(f) = wait_and_move(&p, r.cost, &r.speeds, sigma, stay, mu) {
                    if best.is_none_or(|(b, _)| f.value < b.value) {
                        best = Some((f, r.arc));
                    }
                }
            }
        }
        best
    }

    /// Update of a junction sample.
    pub fn sl_update_junction(&self, v: &GridFunction, node: usize) -> (f64, UpdateWitness) {
        let dt = self.params.dt;
        let rays = self.node_rays(v, node);
        let (foot, arc) = self
            .junction_foot(&rays, node, dt)
            .expect("waiting or moving along an incident arc is always admissible");
        let (arc_j, alpha_j) = if foot.theta > 0.0 { (Some(arc), -foot.delta / foot.theta) } else { (None, 0.0) };
        let w = UpdateWitness {
            branch: Branch::Junction,
            value: foot.value,
            node: Some(node),
            alpha_i: 0.0,
            s0: dt - foot.theta,
            arc_j,
            alpha_j,
        };
        (foot.value, w)
    }

    /// Crossing `node`, at distance `r` from the sample, with cost `li` on the
    /// sample's own arc. Pieces whose lower bound cannot beat `bound` are skipped.
    fn cross(&self, v: &GridFunction, node: usize, r: f64, li: &LocalLagrangian, bound: f64) -> Option<Crossing> {
        let dt = self.params.dt;
        let mu = self.params.mu;
        let stay = self.costs.staying_cost(node);
        let tau_lo = r / mu;
        if tau_lo > dt {
            return None;
        }
        let rays = self.node_rays(v, node);
        let mut best: Option<Crossing> = None;
        let mut bound = bound;
        for nr in &rays {
            let rate = li.min_value().min(nr.cost.min_value()).min(stay);
            for p in nr.ray.pieces(mu * (dt - tau_lo)) {
                if p.va.min(p.vb) + dt * rate >= bound {
                    continue;
                }
                let tau_hi = dt - p.da / mu;
                if tau_hi < tau_lo {
                    continue;
                }
                let eval = |tau: f64| -> (f64, Option<Foot>) {
                    let q = if tau == tau_lo { mu } else { r / tau };
                    match wait_and_move(&p, nr.cost, &nr.speeds, (dt - tau).max(0.0), stay, mu) {
                        Some(f) => (tau * li.value(q) + f.value, Some(f)),
                        None => (f64::INFINITY, None),
                    }
                };
                let (tau, value) = golden_min(|t| eval(t).0, tau_lo, tau_hi);
                if value < bound {
                    let (value, foot) = eval(tau);
                    if let Some(foot) = foot {
                        bound = value;
                        best = Some(Crossing { value, tau, arc_j: nr.arc, foot });
                    }
                }
            }
        }
        best
    }

    /// Update of a sample on `arc` at grid index `k` that is not a junction or
    /// Dirichlet node: the best of staying on the arc and crossing either end.
    pub fn sl_update_interior(&self, v: &GridFunction, arc: usize, k: usize) -> (f64, UpdateWitness) {
        let dt = self.params.dt;
        let mu = self.params.mu;
        let g = &self.grid.arcs[arc];

        let mut stay: Option<(Foot, isize, bool)> = None;
        for dir in [-1isize, 1] {
            let ray = self.ray(v, arc, k, dir);
            let cost = self.costs.oriented(arc, k, dir < 0);
            let far = if dir > 0 { End::To } else { End::From };
            let ends_at_junction = matches!(self.end(arc, far), EndKind::Junction(_));
            for p in ray.pieces(mu * dt) {
                if let Some(f) = move_cost(&p, cost, dt, mu) {
                    if stay.is_none_or(|(b, _, _)| f.value < b.value) {
                        let at_node = ends_at_junction && ray.extension.is_none() && f.delta == ray.extent();
                        stay = Some((f, dir, at_node));
                    }
                }
            }
        }
        let (stay_foot, stay_dir, stay_at_node) = stay.expect("staying put is always admissible");

        let mut cross: Option<(Crossing, usize, f64)> = None;
        for (end, r, toward_increasing) in [(End::From, k as f64 * g.h, true), (End::To, (g.cells - k) as f64 * g.h, false)] {
            let EndKind::Junction(node) = *self.end(arc, end) else { continue };
            if r == 0.0 || r > mu * dt * (1.0 + 1e-12) {
                continue;
            }
            let bound = cross.map_or(stay_foot.value, |(c, _, _)| c.value.min(stay_foot.value));
            let li = self.costs.oriented(arc, k, toward_increasing);
            if let Some(c) = self.cross(v, node, r, li, bound + self.params.tol) {
                if cross.is_none_or(|(b, _, _)| c.value < b.value) {
                    cross = Some((c, node, r));
                }
            }
        }

        let value = cross.map_or(stay_foot.value, |(c, _, _)| c.value.min(stay_foot.value));
        let take_cross = match (cross, self.params.tie_break) {
            (None, _) => false,
            (Some((c, _, _)), TieBreak::PreferStay) => c.value < stay_foot.value - self.params.tol,
            (Some((c, _, _)), TieBreak::PreferCross) => c.value <= stay_foot.value + self.params.tol,
        };
        let witness = if take_cross {
            let (c, node, r) = cross.unwrap();
            let (arc_j, alpha_j) =
                if c.foot.theta > 0.0 { (Some(c.arc_j), -c.foot.delta / c.foot.theta) } else { (None, 0.0) };
            UpdateWitness {
                branch: Branch::Cross,
                value,
                node: Some(node),
                alpha_i: r / c.tau,
                s0: dt - c.tau - c.foot.theta,
                arc_j,
                alpha_j,
            }
        } else if stay_at_node {
            let end = if stay_dir > 0 { End::To } else { End::From };
            UpdateWitness {
                branch: Branch::Cross,
                value,
                node: Some(self.net.end_node(arc, end)),
                alpha_i: stay_foot.delta / dt,
                s0: 0.0,
                arc_j: None,
                alpha_j: 0.0,
            }
        } else {
            UpdateWitness {
                branch: Branch::Stay,
                value,
                node: None,
                alpha_i: -(stay_dir as f64) * stay_foot.delta / dt,
                s0: 0.0,
                arc_j: None,
                alpha_j: 0.0,
            }
        };
        (value, witness)
    }

    /// Update of global sample `i` from layer `v`.
    pub fn update_sample(&self, v: &GridFunction, i: usize) -> (f64, UpdateWitness) {
        match self.grid.sites[i] {
            SampleSite::Interior { arc, k } => self.sl_update_interior(v, arc, k),
            SampleSite::Node(node) => {
                let (arc, end) = self.net.incidence(node)[0];
                match self.end(arc, end) {
                    EndKind::Junction(_) => self.sl_update_junction(v, node),
                    EndKind::Dirichlet(_, f) => {
                        let value = f.at(v.time + self.params.dt);
                        (value, UpdateWitness::fixed(value, node))
                    }
                    EndKind::Neumann(..) | EndKind::Outflow(_) => {
                        let k = if end == End::From { 0 } else { self.grid.arcs[arc].cells };
                        self.sl_update_interior(v, arc, k)
                    }
                }
            }
        }
    }
}
