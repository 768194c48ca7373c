use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::chart::{ComplexField, ConformalChart};
use crate::error::{Error, Result};
use crate::winding::{winding, GridLoop, WindingOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UmbilicOptions {
    /// Nodes below `relative * median |f|` are candidates.
    pub relative: f64,
    /// Candidates closer than this many cells form one cluster.
    pub merge_radius: usize,
    /// Loop margins tried, in cells around the cluster's bounding box.
    pub margins: [usize; 3],
    pub winding: WindingOptions,
}

impl Default for UmbilicOptions {
    fn default() -> Self {
        Self {
            relative: 1e-3,
            merge_radius: 2,
            margins: [2, 3, 4],
            winding: WindingOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UmbilicPoint {
    /// Candidate node of smallest modulus.
    pub location: (usize, usize),
    pub index: i64,
    /// Smallest modulus on the loop over the detection threshold.
    pub margin: f64,
    pub cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unresolved {
    /// Every admissible loop leaves an open side of the chart.
    Boundary,
    /// No loop gave a clean winding number.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UmbilicCluster {
    pub location: (usize, usize),
    pub cells: usize,
    pub reason: Unresolved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UmbilicReport {
    pub points: Vec<UmbilicPoint>,
    /// Clusters whose index is undefined; they are not part of `degree`.
    pub unresolved: Vec<UmbilicCluster>,
    pub degree: i64,
    pub threshold: f64,
    /// On a doubly periodic chart: no umbilics and degree 0.
    pub genus_one_consistent: Option<bool>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Nodes of unit cells around which `f` winds, which catches zeros sitting
/// between nodes that the threshold misses.
fn winding_cells(f: &ComplexField, chart: &ConformalChart) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..chart.len() {
        let (ix, iy) = chart.coords(i);
        let corners = [(0, 0), (1, 0), (1, 1), (0, 1)].map(|(dx, dy)| chart.offset(ix, iy, dx, dy));
        if corners.iter().any(Option::is_none) {
            continue;
        }
        let corners = corners.map(|c| c.unwrap());
        let v = corners.map(|(x, y)| f.get(x, y));
        if v.iter().any(|z| !(z.norm() > 0.0)) {
            continue;
        }
        let turns: f64 = (0..4).map(|k| (v[(k + 1) % 4] / v[k]).arg()).sum::<f64>() / (2.0 * core::f64::consts::PI);
        if turns.round() != 0.0 {
            out.extend(corners.iter().map(|&(x, y)| chart.index(x, y)));
        }
    }
    out
}

pub fn umbilic_analysis(f: &ComplexField, options: &UmbilicOptions) -> Result<UmbilicReport> {
    f.ensure_finite()?;
    let chart = *f.chart();
    if f.max_modulus() == 0.0 {
        return Err(Error::ZeroField);
    }
    let mut moduli: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let threshold = options.relative * median(&mut moduli);
    let mut candidate = vec![false; chart.len()];
    for (i, v) in f.values().iter().enumerate() {
        candidate[i] = v.norm() < threshold;
    }
    for i in winding_cells(f, &chart) {
        candidate[i] = true;
    }

    // clusters by breadth-first search, tracking unwrapped offsets so that
    // clusters across a periodic seam keep a sensible bounding box
    let r = options.merge_radius as isize;
    let mut seen = vec![false; chart.len()];
    let mut points = Vec::new();
    let mut unresolved = Vec::new();
    for start in 0..chart.len() {
        if !candidate[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let (sx, sy) = chart.coords(start);
        let mut queue = VecDeque::from([(start, sx as isize, sy as isize)]);
        let mut members = Vec::new();
        while let Some((i, ux, uy)) = queue.pop_front() {
            members.push((i, ux, uy));
            let (ix, iy) = chart.coords(i);
            for dy in -r..=r {
                for dx in -r..=r {
                    if let Some((jx, jy)) = chart.offset(ix, iy, dx, dy) {
                        let j = chart.index(jx, jy);
                        if candidate[j] && !seen[j] {
                            seen[j] = true;
                            queue.push_back((j, ux + dx, uy + dy));
                        }
                    }
                }
            }
        }
        let best = members
            .iter()
            .min_by(|a, b| f.at(a.0).norm().total_cmp(&f.at(b.0).norm()))
            .map(|m| chart.coords(m.0))
            .expect("cluster has a member");
        let (x0, x1) = members
            .iter()
            .fold((isize::MAX, isize::MIN), |(lo, hi), m| (lo.min(m.1), hi.max(m.1)));
        let (y0, y1) = members
            .iter()
            .fold((isize::MAX, isize::MIN), |(lo, hi), m| (lo.min(m.2), hi.max(m.2)));

        let mut reason = Unresolved::Boundary;
        let mut found = None;
        for &m in &options.margins {
            let m = m as isize;
            let (lx, ly) = (x0 - m, y0 - m);
            let (w, h) = ((x1 - x0 + 2 * m) as usize, (y1 - y0 + 2 * m) as usize);
            let open_x_out = !chart.periodic_x() && (lx < 0 || x1 + m >= chart.nx() as isize);
            let open_y_out = !chart.periodic_y() && (ly < 0 || y1 + m >= chart.ny() as isize);
            if open_x_out || open_y_out {
                continue;
            }
            let lp = GridLoop::new(
                lx.rem_euclid(chart.nx() as isize) as usize,
                ly.rem_euclid(chart.ny() as isize) as usize,
                w,
                h,
            );
            match winding(f, &lp, &options.winding) {
                Ok(wd) => {
                    found = Some(wd);
                    break;
                }
                Err(_) => reason = Unresolved::Undetermined,
            }
        }
        match found {
            Some(wd) if wd.index != 0 => points.push(UmbilicPoint {
                location: best,
                index: wd.index,
                margin: wd.min_modulus / threshold,
                cells: members.len(),
            }),
            Some(_) => {}
            None => unresolved.push(UmbilicCluster {
                location: best,
                cells: members.len(),
                reason,
            }),
        }
    }
    let degree = points.iter().map(|p| p.index).sum();
    let genus_one_consistent = chart
        .is_doubly_periodic()
        .then_some(points.is_empty() && unresolved.is_empty() && degree == 0);
    Ok(UmbilicReport {
        points,
        unresolved,
        degree,
        threshold,
        genus_one_consistent,
    })
}
