//! The discrete groups `G_m = Q_p / p^m Z_p` and `(G_m)^2`, their quotient and
//! embedding maps, and exact uniform samplers on shells.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::padic::{check_prime, PAdic, DEFAULT_PRECISION};
use crate::shells::{fine_index, ShellIndex, ShellKind};

/// A coset `x + p^m Z_p` (per coordinate), stored as the digit expansion of
/// its canonical representative: every digit at index `>= m` is dropped.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElem {
    level: u32,
    coords: Vec<PAdic>,
}

impl GroupElem {
    pub fn new(level: u32, coords: Vec<PAdic>) -> Result<Self> {
        if coords.is_empty() || coords.len() > 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        let p = coords[0].prime();
        let m = level as i64;
        let mut out = Vec::with_capacity(coords.len());
        for c in coords {
            if c.prime() != p {
                return Err(Error::PrimeMismatch(p, c.prime()));
            }
            if c.precision() < m {
                return Err(Error::TruncationOverflow {
                    needed: m - 1,
                    precision: c.precision(),
                });
            }
            out.push(c.truncate(m));
        }
        Ok(Self { level, coords: out })
    }

    pub fn identity(p: u32, level: u32, dim: usize) -> Self {
        Self {
            level,
            coords: vec![PAdic::zero(p, level as i64); dim],
        }
    }

    /// One coordinate from digits at indices `low, low+1, ...`.
    pub fn from_digits(p: u32, level: u32, low: i64, digits: &[u32]) -> Result<Self> {
        let x = PAdic::new(p, low, digits, level as i64)?;
        Ok(Self {
            level,
            coords: vec![x],
        })
    }

    pub fn pair(a: GroupElem, b: GroupElem) -> Result<Self> {
        if a.level != b.level {
            return Err(Error::LevelMismatch(a.level, b.level));
        }
        let mut coords = a.coords;
        coords.extend(b.coords);
        Self::new(a.level, coords)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn prime(&self) -> u32 {
        self.coords[0].prime()
    }

    pub fn coords(&self) -> &[PAdic] {
        &self.coords
    }

    pub fn is_identity(&self) -> bool {
        self.coords.iter().all(PAdic::is_zero)
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.try_add(b))
            .collect::<Result<_>>()?;
        Ok(Self {
            level: self.level,
            coords,
        })
    }

    pub fn neg(&self) -> Self {
        Self {
            level: self.level,
            coords: self.coords.iter().map(PAdic::neg).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// `log_p` of each coordinate's norm; `None` for a zero coordinate.
    pub fn log_norms(&self) -> Vec<Option<i64>> {
        self.coords.iter().map(PAdic::log_abs).collect()
    }

    /// `|g|` in one dimension, the max-norm in two.
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(PAdic::abs).fold(0.0, f64::max)
    }

    /// Shell containing `g`, in the filtration of `kind`; `None` for the identity.
    pub fn shell(&self, kind: ShellKind) -> Result<Option<ShellIndex>> {
        let e = self.log_norms();
        let want = if kind == ShellKind::OneDim { 1 } else { 2 };
        if e.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                got: e.len(),
            });
        }
        Ok(match kind {
            ShellKind::OneDim => e[0].map(ShellIndex::one_dim),
            ShellKind::Coarse2D => e[0].max(e[1]).map(ShellIndex::coarse),
            ShellKind::Fine2D => fine_index(e[0], e[1]).map(ShellIndex::fine),
        })
    }
}

/// `Q_m`: multiplication by `p^m` from `G_0` onto `G_m`.
pub fn quotient_map(x: &GroupElem, m: u32) -> Result<GroupElem> {
    if x.level != 0 {
        return Err(Error::LevelMismatch(0, x.level));
    }
    Ok(GroupElem {
        level: m,
        coords: x.coords.iter().map(|c| c.shift(m as i64)).collect(),
    })
}

/// `gamma_m` per coordinate: the canonical representative, as an element of `Q_p`.
pub fn embed(g: &GroupElem) -> Vec<PAdic> {
    let prec = g.level as i64 + DEFAULT_PRECISION;
    g.coords.iter().map(|c| c.with_precision(prec)).collect()
}

fn digits_to_coord<R: Rng + ?Sized>(
    p: u32,
    low: i64,
    level: u32,
    lead_nonzero: bool,
    rng: &mut R,
) -> Result<PAdic> {
    let width = (level as i64 - low).max(0) as usize;
    let mut digits = Vec::with_capacity(width);
    for i in 0..width {
        let d = if i == 0 && lead_nonzero {
            rng.random_range(1..p)
        } else {
            rng.random_range(0..p)
        };
        digits.push(d);
    }
    PAdic::new(p, low, &digits, level as i64)
}

/// Uniform point of the level-`m` ball `B^(m)(k)`.
pub fn sample_ball_coord<R: Rng + ?Sized>(p: u32, k: i64, m: u32, rng: &mut R) -> Result<PAdic> {
    if k < -(m as i64) {
        return Err(Error::IndexBelowMinimum {
            index: k,
            min: -(m as i64),
            level: m,
        });
    }
    digits_to_coord(p, -k, m, false, rng)
}

/// Uniform point of the level-`m` shell `S^(m)(k)`, `k > -m`.
pub fn sample_shell_coord<R: Rng + ?Sized>(p: u32, k: i64, m: u32, rng: &mut R) -> Result<PAdic> {
    if k <= -(m as i64) {
        return Err(Error::IndexBelowMinimum {
            index: k,
            min: 1 - m as i64,
            level: m,
        });
    }
    digits_to_coord(p, -k, m, true, rng)
}

pub fn sample_shell_1d<R: Rng + ?Sized>(p: u32, k: i64, m: u32, rng: &mut R) -> Result<GroupElem> {
    check_prime(p)?;
    Ok(GroupElem {
        level: m,
        coords: vec![sample_shell_coord(p, k, m, rng)?],
    })
}

/// Uniform point of the fine shell `j > -2m`.
pub fn sample_fine_shell_2d<R: Rng + ?Sized>(
    p: u32,
    j: i64,
    m: u32,
    rng: &mut R,
) -> Result<GroupElem> {
    check_prime(p)?;
    if j <= -2 * m as i64 {
        return Err(Error::IndexBelowMinimum {
            index: j,
            min: 1 - 2 * m as i64,
            level: m,
        });
    }
    let k = j.div_euclid(2);
    let coords = if j.rem_euclid(2) == 1 {
        vec![
            sample_ball_coord(p, k, m, rng)?,
            sample_shell_coord(p, k + 1, m, rng)?,
        ]
    } else {
        vec![
            sample_shell_coord(p, k, m, rng)?,
            sample_ball_coord(p, k, m, rng)?,
        ]
    };
    Ok(GroupElem { level: m, coords })
}

/// Uniform point of the coarse shell of (even) index `two_k > -2m`, as the
/// volume-weighted mixture of fine shells `two_k - 1` and `two_k`.
pub fn sample_coarse_shell_2d<R: Rng + ?Sized>(
    p: u32,
    two_k: i64,
    m: u32,
    rng: &mut R,
) -> Result<GroupElem> {
    if two_k.rem_euclid(2) != 0 {
        return Err(invalid("index", format!("coarse index {two_k} is odd")));
    }
    if two_k <= -2 * m as i64 {
        return Err(Error::IndexBelowMinimum {
            index: two_k,
            min: 2 - 2 * m as i64,
            level: m,
        });
    }
    let odd = rng.random_range(0..p + 1) == 0;
    sample_fine_shell_2d(p, if odd { two_k - 1 } else { two_k }, m, rng)
}

/// Level `m` and diffusion scale `D` fixing `lambda(m) = D p^(m b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingScheme {
    pub p: u32,
    pub m: u32,
    pub d: f64,
    pub b: f64,
}

impl EmbeddingScheme {
    pub fn new(p: u32, m: u32, d: f64, b: f64) -> Result<Self> {
        check_prime(p)?;
        if !(d > 0.0 && d.is_finite()) {
            return Err(invalid("D", format!("{d} is not positive")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid("b", format!("{b} is not positive")));
        }
        Ok(Self { p, m, d, b })
    }

    pub fn lambda(&self) -> f64 {
        self.d * (self.p as f64).powf(self.m as f64 * self.b)
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.lambda()
    }

    /// `floor(lambda t)`, with the product carried to twice double precision so
    /// that products just below an integer are not rounded up onto it.
    pub fn steps_at(&self, t: f64) -> u64 {
        floor_product(self.lambda(), t)
    }

    /// `t_m = floor(lambda t) / lambda`.
    pub fn grid_time(&self, t: f64) -> f64 {
        self.steps_at(t) as f64 / self.lambda()
    }

    /// Spatial resolution: distinct lattice points are at least `p^(1-m)` apart.
    pub fn resolution(&self) -> f64 {
        (self.p as f64).powi(1 - self.m as i32)
    }
}

pub(crate) fn floor_product(a: f64, b: f64) -> u64 {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    let n = hi.floor();
    if n == hi && lo < 0.0 {
        (n - 1.0).max(0.0) as u64
    } else {
        n.max(0.0) as u64
    }
}
