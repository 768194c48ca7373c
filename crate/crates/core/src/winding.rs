//! Winding numbers of complex fields around rectangular grid loops.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::chart::{ComplexField, ConformalChart};
use crate::error::{Error, Result};

/// Axis-aligned rectangle of grid edges with lower-left node `(ix0, iy0)`.
///
/// Indices wrap on periodic axes, so a loop may straddle the seam of a
/// torus chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLoop {
    pub ix0: usize,
    pub iy0: usize,
    pub width: usize,
    pub height: usize,
}

impl GridLoop {
    pub fn new(ix0: usize, iy0: usize, width: usize, height: usize) -> Self {
        Self { ix0, iy0, width, height }
    }

    /// The loop along the outer nodes of an open chart.
    pub fn boundary(chart: &ConformalChart) -> Self {
        Self::new(0, 0, chart.nx() - 1, chart.ny() - 1)
    }

    pub fn validate(&self, chart: &ConformalChart) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidLoop("loop must enclose at least one cell"));
        }
        if chart.periodic_x() {
            if self.width >= chart.nx() || self.ix0 >= chart.nx() {
                return Err(Error::InvalidLoop("loop wider than the periodic chart"));
            }
        } else if self.ix0 + self.width >= chart.nx() {
            return Err(Error::InvalidLoop("loop leaves the chart in x"));
        }
        if chart.periodic_y() {
            if self.height >= chart.ny() || self.iy0 >= chart.ny() {
                return Err(Error::InvalidLoop("loop taller than the periodic chart"));
            }
        } else if self.iy0 + self.height >= chart.ny() {
            return Err(Error::InvalidLoop("loop leaves the chart in y"));
        }
        Ok(())
    }

    /// Nodes visited counterclockwise, starting and ending at the lower-left
    /// corner (the first node is repeated at the end).
    pub fn nodes(&self, chart: &ConformalChart) -> Result<Vec<(usize, usize)>> {
        self.validate(chart)?;
        let (w, h) = (self.width as isize, self.height as isize);
        let mut offsets = Vec::with_capacity(2 * (self.width + self.height) + 1);
        offsets.extend((0..w).map(|k| (k, 0)));
        offsets.extend((0..h).map(|k| (w, k)));
        offsets.extend((0..w).map(|k| (w - k, h)));
        offsets.extend((0..h).map(|k| (0, h - k)));
        offsets.push((0, 0));
        Ok(offsets
            .into_iter()
            .map(|(dx, dy)| chart.offset(self.ix0, self.iy0, dx, dy).expect("validated loop"))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingOptions {
    /// Minimum admissible modulus on the loop.
    pub floor: f64,
    /// Largest admissible phase increment between consecutive loop nodes.
    pub max_step: f64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self {
            floor: 1e-12,
            max_step: 0.9 * PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub index: i64,
    /// Raw phase sum divided by 2 pi.
    pub turns: f64,
    pub min_modulus: f64,
}

/// Sum of principal phase increments of `f` around `lp`, in turns.
pub fn winding(f: &ComplexField, lp: &GridLoop, opts: &WindingOptions) -> Result<Winding> {
    let chart = f.chart();
    let nodes = lp.nodes(chart)?;
    let samples: Vec<_> = nodes.iter().map(|&(ix, iy)| f.get(ix, iy)).collect();
    let min_modulus = samples.iter().fold(f64::INFINITY, |m, v| m.min(v.norm()));
    if !(min_modulus >= opts.floor) {
        return Err(Error::ZeroOnLoop {
            min_modulus,
            floor: opts.floor,
        });
    }
    let mut total = 0.0;
    for (position, pair) in samples.windows(2).enumerate() {
        let step = (pair[1] / pair[0]).arg();
        if step.abs() > opts.max_step {
            return Err(Error::PhaseStepTooLarge { step, position });
        }
        total += step;
    }
    let turns = total / (2.0 * PI);
    let index = turns.round();
    if (turns - index).abs() > 0.25 {
        return Err(Error::NonIntegerWinding { turns });
    }
    Ok(Winding {
        index: index as i64,
        turns,
        min_modulus,
    })
}

pub fn winding_index(f: &ComplexField, lp: &GridLoop, opts: &WindingOptions) -> Result<i64> {
    winding(f, lp, opts).map(|w| w.index)
}
