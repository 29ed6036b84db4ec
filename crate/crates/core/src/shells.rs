//! Ball and shell bookkeeping for the three filtrations used throughout the
//! crate: balls in `Q_p`, coarse (max-norm) balls in `Q_p^2`, and fine
//! (weighted max-norm) balls in `Q_p^2`.
//!
//! All ball indices are volume exponents: a ball of index `i` has volume
//! `p^i`. Coarse indices are therefore always even.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShellKind {
    OneDim,
    Coarse2D,
    Fine2D,
}

/// A ball or shell of one of the three filtrations, named by its volume
/// exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShellIndex {
    pub kind: ShellKind,
    pub index: i64,
}

impl ShellIndex {
    pub fn one_dim(k: i64) -> Self {
        Self {
            kind: ShellKind::OneDim,
            index: k,
        }
    }

    /// Coarse shell `Shell_c(2k)`.
    pub fn coarse(k: i64) -> Self {
        Self {
            kind: ShellKind::Coarse2D,
            index: 2 * k,
        }
    }

    pub fn fine(j: i64) -> Self {
        Self {
            kind: ShellKind::Fine2D,
            index: j,
        }
    }

    /// Smallest index that names a ball in a group of level `m`.
    pub fn min_index(kind: ShellKind, level: u32) -> i64 {
        match kind {
            ShellKind::OneDim => -(level as i64),
            ShellKind::Coarse2D | ShellKind::Fine2D => -2 * level as i64,
        }
    }
}

/// Norm value kept as an exponent of `p`: `p^(int)` or `p^(int + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LogRadius {
    pub int: i64,
    pub plus_h: bool,
}

impl LogRadius {
    pub fn integer(int: i64) -> Self {
        Self { int, plus_h: false }
    }

    pub fn log_p(&self, h: f64) -> f64 {
        self.int as f64 + if self.plus_h { h } else { 0.0 }
    }

    pub fn value(&self, p: u32, h: f64) -> f64 {
        (p as f64).powf(self.log_p(h))
    }
}

/// Exact volume `mantissa * p^exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactVolume {
    pub mantissa: u64,
    pub exp: i64,
}

impl ExactVolume {
    pub fn to_f64(&self, p: u32) -> f64 {
        self.mantissa as f64 * (p as f64).powi(self.exp as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Ball(ShellIndex),
    Shell(ShellIndex),
}

/// Haar volume of a centered ball or shell. With `level = Some(m)` the index
/// is checked against the bottom of the level-`m` filtration, where ball and
/// shell both collapse to the identity coset.
pub fn volume(p: u32, region: Region, level: Option<u32>) -> Result<ExactVolume> {
    let (shell, idx) = match region {
        Region::Ball(s) => (false, s),
        Region::Shell(s) => (true, s),
    };
    if idx.kind == ShellKind::Coarse2D && idx.index.rem_euclid(2) != 0 {
        return Err(Error::InvalidParameter {
            name: "index",
            reason: format!("coarse index {} is odd", idx.index),
        });
    }
    if let Some(m) = level {
        let min = ShellIndex::min_index(idx.kind, m);
        if idx.index < min {
            return Err(Error::IndexBelowMinimum {
                index: idx.index,
                min,
                level: m,
            });
        }
        if idx.index == min {
            return Ok(ExactVolume {
                mantissa: 1,
                exp: idx.index,
            });
        }
    }
    if !shell {
        return Ok(ExactVolume {
            mantissa: 1,
            exp: idx.index,
        });
    }
    let p = p as u64;
    Ok(match idx.kind {
        ShellKind::OneDim | ShellKind::Fine2D => ExactVolume {
            mantissa: p - 1,
            exp: idx.index - 1,
        },
        ShellKind::Coarse2D => ExactVolume {
            mantissa: p * p - 1,
            exp: idx.index - 2,
        },
    })
}

/// The ladder of centered balls a radial law or kernel lives on.
///
/// Ladder position `j` is the `j`-th ball: `B(j)` in one dimension,
/// `Ball_2(2j)` for the coarse filtration, and `Ball_2(j)` for the fine one.
/// The dual ladder has the same shape, so the same radii serve both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    OneDim,
    Coarse,
    Fine { h: f64 },
}

impl Geometry {
    pub fn dim(&self) -> usize {
        match self {
            Geometry::OneDim => 1,
            _ => 2,
        }
    }

    /// Volume exponent of ladder ball `j`.
    pub fn vol_exp(&self, j: i64) -> i64 {
        match self {
            Geometry::Coarse => 2 * j,
            _ => j,
        }
    }

    pub fn ball_volume(&self, p: u32, j: i64) -> f64 {
        (p as f64).powi(self.vol_exp(j) as i32)
    }

    /// Fraction of ball `j` occupied by its outer shell.
    pub fn shell_fraction(&self, p: u32) -> f64 {
        let p = p as f64;
        match self {
            Geometry::Coarse => 1.0 - 1.0 / (p * p),
            _ => 1.0 - 1.0 / p,
        }
    }

    pub fn shell_volume(&self, p: u32, j: i64) -> f64 {
        self.ball_volume(p, j) * self.shell_fraction(p)
    }

    pub fn radius(&self, j: i64) -> LogRadius {
        match self {
            Geometry::OneDim | Geometry::Coarse => LogRadius::integer(j),
            Geometry::Fine { .. } => LogRadius {
                int: j.div_euclid(2),
                plus_h: j.rem_euclid(2) == 1,
            },
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            Geometry::Fine { h } => *h,
            _ => 1.0,
        }
    }

    /// `radius(j)^b` as a real number.
    pub fn radius_pow(&self, p: u32, b: f64, j: i64) -> f64 {
        (p as f64).powf(b * self.radius(j).log_p(self.h()))
    }

    /// Ladder steps per unit of level: the level-`m` ladder starts at `-m * steps`.
    pub fn steps_per_level(&self) -> i64 {
        match self {
            Geometry::Fine { .. } => 2,
            _ => 1,
        }
    }

    pub fn shell_index(&self, j: i64) -> ShellIndex {
        match self {
            Geometry::OneDim => ShellIndex::one_dim(j),
            Geometry::Coarse => ShellIndex::coarse(j),
            Geometry::Fine { .. } => ShellIndex::fine(j),
        }
    }

    /// Ladder position of a point whose coordinate norms are `p^e` (or zero for
    /// `None`). Returns `None` for the origin.
    pub fn ladder_of_exponents(&self, e: &[Option<i64>]) -> Option<i64> {
        match self {
            Geometry::OneDim => e[0],
            Geometry::Coarse => match (e[0], e[1]) {
                (None, None) => None,
                (a, b) => Some(a.unwrap_or(i64::MIN).max(b.unwrap_or(i64::MIN))),
            },
            Geometry::Fine { .. } => fine_index(e[0], e[1]),
        }
    }
}

/// Fine ball index of a point with coordinate norms `p^e1`, `p^e2`:
/// the least `2k + eps` with `|x1| <= p^k` and `|x2| <= p^(k + eps)`.
pub fn fine_index(e1: Option<i64>, e2: Option<i64>) -> Option<i64> {
    match (e1, e2) {
        (None, None) => None,
        (e1, e2) => {
            let e1 = e1.unwrap_or(i64::MIN / 4);
            let e2 = e2.unwrap_or(i64::MIN / 4);
            let even = 2 * e1.max(e2);
            let odd = 2 * e1.max(e2 - 1) + 1;
            Some(even.min(odd))
        }
    }
}
