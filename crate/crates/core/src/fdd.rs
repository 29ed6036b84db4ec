//! Finite-dimensional distributions of radial Markov processes on `Q_p^d`,
//! computed exactly on the coset cells of the finest ball in a history.
//!
//! A radial density is constant on every coset of a ball `B_r` that avoids the
//! origin, so the iterated integral over balls `U_1, ..., U_N` collapses to a
//! product of finite transition matrices between cells `c + B_r`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::padic::PAdic;
use crate::shells::Geometry;

/// Cap on the number of cells a single ball may be split into.
pub const MAX_CELLS: usize = 4096;

/// The ball `center + B_j`, with `j` a ladder position of the family's geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<PAdic>,
    pub index: i64,
}

impl Ball {
    pub fn centered(p: u32, dim: usize, index: i64) -> Self {
        Self {
            center: vec![PAdic::zero(p, i64::MAX / 4); dim],
            index,
        }
    }

    /// The whole space; allowed only at the end of a history.
    pub fn whole(p: u32, dim: usize) -> Self {
        Self::centered(p, dim, i64::MAX)
    }

    pub fn is_whole(&self) -> bool {
        self.index == i64::MAX
    }
}

/// A density that depends only on the ladder position of its argument.
pub trait RadialDensity {
    /// Density at a point of ladder position `j`; `None` is the origin.
    fn density(&self, j: Option<i64>) -> f64;
    /// Mass of the centered ball of ladder position `j`.
    fn ball_mass(&self, j: i64) -> f64;
}

pub enum Transition {
    Identity,
    Density(Box<dyn RadialDensity + Sync>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FddOutcome {
    pub probability: f64,
    /// Some transition spanned zero steps, so two history entries were merged.
    pub collapsed: bool,
    pub cells: usize,
}

/// First digit index dropped in each coordinate when reducing modulo ball `j`.
fn cut_indices(g: Geometry, j: i64) -> Vec<i64> {
    match g {
        Geometry::OneDim => vec![-j],
        Geometry::Coarse => vec![-j, -j],
        Geometry::Fine { .. } => {
            let (k, eps) = (j.div_euclid(2), j.rem_euclid(2));
            vec![-k, -k - eps]
        }
    }
}

type Cell = Vec<PAdic>;

fn reduce(x: &[PAdic], cuts: &[i64]) -> Result<Cell> {
    x.iter()
        .zip(cuts)
        .map(|(c, &cut)| {
            if c.precision() < cut {
                return Err(Error::TruncationOverflow {
                    needed: cut - 1,
                    precision: c.precision(),
                });
            }
            Ok(c.truncate(cut))
        })
        .collect()
}

/// Cells of `B_r` inside `ball`.
fn cells_of(g: Geometry, p: u32, ball: &Ball, r: i64) -> Result<Vec<Cell>> {
    if ball.center.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: ball.center.len(),
        });
    }
    let fine_cuts = cut_indices(g, r);
    let coarse_cuts = cut_indices(g, ball.index);
    let center = reduce(&ball.center, &fine_cuts)?;
    let widths: Vec<u32> = fine_cuts
        .iter()
        .zip(&coarse_cuts)
        .map(|(f, c)| (f - c) as u32)
        .collect();
    let total_digits: u32 = widths.iter().sum();
    let count = (p as usize)
        .checked_pow(total_digits)
        .filter(|&c| c <= MAX_CELLS)
        .ok_or_else(|| invalid("history", "ball splits into too many cells"))?;
    let mut out = Vec::with_capacity(count);
    let mut digits = vec![0u32; total_digits as usize];
    for _ in 0..count {
        let mut offset = 0usize;
        let mut cell = Vec::with_capacity(g.dim());
        for (i, &w) in widths.iter().enumerate() {
            let d = &digits[offset..offset + w as usize];
            offset += w as usize;
            let shift = PAdic::new(p, coarse_cuts[i], d, fine_cuts[i])?;
            cell.push(center[i].try_add(&shift)?.truncate(fine_cuts[i]));
        }
        out.push(cell);
        for d in digits.iter_mut() {
            *d += 1;
            if *d < p {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

fn ladder_of_difference(g: Geometry, a: &Cell, b: &Cell) -> Result<Option<i64>> {
    let e = a
        .iter()
        .zip(b)
        .map(|(x, y)| y.try_sub(x).map(|d| d.log_abs()))
        .collect::<Result<Vec<_>>>()?;
    Ok(g.ladder_of_exponents(&e))
}

/// Runs the cell-matrix product for a process started at the origin at time 0.
/// `min_index` rejects balls finer than a lattice.
pub(crate) fn fdd_run(
    g: Geometry,
    p: u32,
    steps: Vec<(Transition, Ball)>,
    min_index: Option<i64>,
) -> Result<FddOutcome> {
    if steps.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let mut steps = steps;
    // the last position integrates to one over the whole space
    while steps.last().is_some_and(|(_, b)| b.is_whole()) {
        steps.pop();
    }
    if steps.iter().any(|(_, b)| b.is_whole()) {
        return Err(invalid(
            "history",
            "only trailing balls may be the whole space",
        ));
    }
    if steps.is_empty() {
        return Ok(FddOutcome {
            probability: 1.0,
            collapsed: false,
            cells: 1,
        });
    }
    let r = steps.iter().map(|(_, b)| b.index).min().expect("nonempty");
    if let Some(min) = min_index {
        if r < min {
            return Err(Error::BelowLatticeResolution {
                level: ((1 - min) / g.steps_per_level()) as u32,
            });
        }
    }
    let cuts = cut_indices(g, r);
    let cell_vol = g.ball_volume(p, r);
    let origin: Cell = cuts.iter().map(|&c| PAdic::zero(p, c)).collect();
    let mut cells = vec![origin];
    let mut weights = vec![1.0];
    let mut collapsed = false;
    let mut max_cells = 1;
    for (tr, ball) in &steps {
        let next = cells_of(g, p, ball, r)?;
        max_cells = max_cells.max(next.len());
        let mut w = vec![0.0; next.len()];
        for (bi, b) in next.iter().enumerate() {
            for (a, &wa) in cells.iter().zip(&weights) {
                if wa == 0.0 {
                    continue;
                }
                let t = match tr {
                    Transition::Identity => {
                        if a == b {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Transition::Density(rho) => match ladder_of_difference(g, a, b)? {
                        Some(j) if j > r => cell_vol * rho.density(Some(j)),
                        _ => rho.ball_mass(r),
                    },
                };
                w[bi] += wa * t;
            }
        }
        if matches!(tr, Transition::Identity) {
            collapsed = true;
        }
        cells = next;
        weights = w;
    }
    Ok(FddOutcome {
        probability: weights.iter().sum(),
        collapsed,
        cells: max_cells,
    })
}
