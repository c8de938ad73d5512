//! Piecewise-linear interpolation of a layer, and the same interpolant seen
//! along a ray leaving a grid sample.

use crate::error::{Error, Result};
use crate::network::{Grid, GridFunction, Network};

const RANGE_TOL: f64 = 1e-12;

/// Value of the piecewise-linear interpolant of `v` at coordinate `s` of `arc`.
pub fn interpolate(net: &Network, grid: &Grid, v: &GridFunction, arc: usize, s: f64) -> Result<f64> {
    let g = &grid.arcs[arc];
    let len = g.h * g.cells as f64;
    if !(s >= -RANGE_TOL * len && s <= len * (1.0 + RANGE_TOL)) {
        return Err(Error::OutOfRange { arc: net.arc(arc).id.clone(), s, length: len });
    }
    let mut x = (s / g.h).clamp(0.0, g.cells as f64);
    if (x - x.round()).abs() <= 4.0 * f64::EPSILON * x.max(1.0) {
        x = x.round();
    }
    let k = (x.floor() as usize).min(g.cells - 1);
    let w = x - k as f64;
    let (a, b) = (v.values[g.samples[k]], v.values[g.samples[k + 1]]);
    if w == 0.0 {
        Ok(a)
    } else if w == 1.0 {
        Ok(b)
    } else {
        Ok(a + w * (b - a))
    }
}

/// One linear piece of the interpolant along a ray: value `va` at distance `da`
/// from the ray origin and `vb` at `db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Piece {
    pub da: f64,
    pub db: f64,
    pub va: f64,
    pub vb: f64,
}

impl Piece {
    pub fn slope(&self) -> f64 {
        (self.vb - self.va) / (self.db - self.da)
    }

    pub fn value_at(&self, d: f64) -> f64 {
        if d == self.da {
            self.va
        } else if d == self.db {
            self.vb
        } else {
            self.va + self.slope() * (d - self.da)
        }
    }
}

/// The interpolant along an arc, starting at sample `start` and walking in
/// direction `dir` (`+1` toward increasing `s`). After `cells` cells the ray
/// either stops or, past a Neumann end, continues with slope `extension`.
#[derive(Debug, Clone)]
pub(crate) struct Ray<'a> {
    pub values: &'a [f64],
    pub samples: &'a [usize],
    pub h: f64,
    pub start: usize,
    pub dir: isize,
    pub cells: usize,
    pub extension: Option<f64>,
}

impl Ray<'_> {
    /// Distance covered by the grid part of the ray.
    pub fn extent(&self) -> f64 {
        self.cells as f64 * self.h
    }

    fn sample_value(&self, m: usize) -> f64 {
        let idx = self.start as isize + self.dir * m as isize;
        self.values[self.samples[idx as usize]]
    }

    /// Pieces whose near end lies within `reach` of the origin.
    pub fn pieces(&self, reach: f64) -> Vec<Piece> {
        let mut out = Vec::new();
        for m in 0..self.cells {
            let da = m as f64 * self.h;
            if da > reach {
                return out;
            }
            out.push(Piece { da, db: (m + 1) as f64 * self.h, va: self.sample_value(m), vb: self.sample_value(m + 1) });
        }
        if let Some(slope) = self.extension {
            let da = self.extent();
            if da < reach {
                let va = self.sample_value(self.cells);
                out.push(Piece { da, db: reach, va, vb: va + slope * (reach - da) });
            }
        }
        out
    }
}
