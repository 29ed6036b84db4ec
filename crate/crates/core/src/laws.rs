//! One-step and n-step laws of the three primitive walk families.
//!
//! Each law is radial: it puts mass `atom` on the origin and spreads the mass
//! `shell_prob(j)` uniformly over the shell of ladder position `j >= 1` (see
//! [`Geometry`]). Characteristic functions live on the dual ladder, indexed by
//! `u <= 0` for dual points in `Z_p^d`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::groups::{sample_coarse_shell_2d, sample_fine_shell_2d, sample_shell_1d, GroupElem};
use crate::padic::{check_prime, PAdic};
use crate::series::{pow_diff, pow_one_minus, Evaluated};
use crate::shells::{fine_index, Geometry};

/// Relative size of the discarded tail at which series are cut.
pub const SERIES_RTOL: f64 = 1e-15;

const MAX_TERMS: i64 = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[serde(rename = "1d")]
    OneDim,
    #[serde(rename = "iso2d")]
    Iso2D,
    #[serde(rename = "aniso2d")]
    Aniso2D,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::OneDim => "1d",
            Family::Iso2D => "iso2d",
            Family::Aniso2D => "aniso2d",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1d" => Ok(Family::OneDim),
            "iso2d" => Ok(Family::Iso2D),
            "aniso2d" => Ok(Family::Aniso2D),
            other => Err(invalid("family", format!("unknown family {other:?}"))),
        }
    }
}

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid("b", format!("{b} is not a positive real")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkLaw1D {
    pub p: u32,
    pub b: f64,
    pub p0: f64,
}

impl WalkLaw1D {
    pub fn new(p: u32, b: f64, p0: f64) -> Result<Self> {
        check_prime(p)?;
        check_b(b)?;
        if !(0.0..1.0).contains(&p0) {
            return Err(invalid("P0", format!("{p0} is outside [0, 1)")));
        }
        Ok(Self { p, b, p0 })
    }

    pub fn c(&self) -> f64 {
        (1.0 - self.p0) * (pf(self.p).powf(self.b) - 1.0)
    }

    pub fn alpha(&self) -> f64 {
        alpha_from_p0(self.p, self.b, self.p0)
    }

    /// `E|S_n|^r` by the closed-form series in `C(r,1)`.
    pub fn moment_closed_form(&self, n: u64, r: f64) -> Result<Evaluated> {
        check_moment_order(r, self.b)?;
        let p = pf(self.p);
        let c = (p.powf(r + 1.0) - p.powf(r)) / (p.powf(r + 1.0) - 1.0);
        Ok(radial_moment_series(p, self.b, r, 1, self.alpha(), n, c))
    }
}

/// `(1 - P0)(p^(b+1) - 1) / (p^b (p - 1))`.
pub fn alpha_from_p0(p: u32, b: f64, p0: f64) -> f64 {
    let p = pf(p);
    (1.0 - p0) * (p.powf(b + 1.0) - 1.0) / (p.powf(b) * (p - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoLaw2D {
    pub p: u32,
    pub b: f64,
}

impl IsoLaw2D {
    pub fn new(p: u32, b: f64) -> Result<Self> {
        check_prime(p)?;
        check_b(b)?;
        Ok(Self { p, b })
    }

    pub fn c1(&self) -> f64 {
        pf(self.p).powf(self.b) - 1.0
    }

    pub fn alpha_max(&self) -> f64 {
        let p = pf(self.p);
        (p.powf(self.b + 2.0) - 1.0) / (p.powf(self.b) * (p * p - 1.0))
    }

    /// `E||S_n||_max^r` by the closed-form series in `C(r,2)`.
    pub fn moment_closed_form(&self, n: u64, r: f64) -> Result<Evaluated> {
        check_moment_order(r, self.b)?;
        let p = pf(self.p);
        let c = (p.powf(r + 2.0) - p.powf(r)) / (p.powf(r + 2.0) - 1.0);
        Ok(radial_moment_series(
            p,
            self.b,
            r,
            2,
            self.alpha_max(),
            n,
            c,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnisoLaw2D {
    pub p: u32,
    pub b: f64,
    pub h: f64,
}

impl AnisoLaw2D {
    pub fn new(p: u32, b: f64, h: f64) -> Result<Self> {
        check_prime(p)?;
        check_b(b)?;
        if h == 1.0 {
            return Err(Error::IsotropicEndpoint);
        }
        if !(h > 0.0 && h < 1.0) {
            return Err(invalid("h", format!("{h} is outside (0, 1)")));
        }
        Ok(Self { p, b, h })
    }

    pub fn c_h(&self) -> f64 {
        let (p, b, h) = (pf(self.p), self.b, self.h);
        (p.powf(b) - 1.0) / p.powf(b) / (p.powf(-h * b) + p.powf(-b))
    }

    pub fn alpha0(&self) -> f64 {
        let (p, b, h) = (pf(self.p), self.b, self.h);
        1.0 + (p.powf(b) - 1.0) / ((p.powf(b) + p.powf(h * b)) * (p - 1.0))
    }

    /// The odd-shell coefficient in the normalization that attaches it to
    /// `||y||_h^b` for `y` one fine shell below an even one.
    pub fn alpha1(&self) -> f64 {
        let (p, b, h) = (pf(self.p), self.b, self.h);
        let phb = p.powf(h * b);
        (1.0 + phb / (phb + p.powf(b)) * (p.powf(b) - 1.0) * p / (p - 1.0)) * phb / p.powf(2.0 * b)
    }

    /// Coefficient of `R(u)^b` on odd dual shells, where `R(2k+1) = p^(k+h)`;
    /// this is the value that makes the characteristic function exact.
    pub fn alpha1_effective(&self) -> f64 {
        let (p, b, h) = (pf(self.p), self.b, self.h);
        let (pb, phb) = (p.powf(b), p.powf(h * b));
        p.powf(-h * b) + (pb - 1.0) * p / ((phb + pb) * (p - 1.0))
    }

    /// Radius `r_j` of the fine ball `j >= 0` (zero at `j = 0`).
    pub fn r(&self, j: i64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        Geometry::Fine { h: self.h }.radius(j).value(self.p, self.h)
    }
}

/// Any of the three families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawParams", into = "LawParams")]
pub enum WalkLaw {
    OneDim(WalkLaw1D),
    Iso(IsoLaw2D),
    Aniso(AnisoLaw2D),
}

/// Serialized form: `{"family": "1d" | "iso2d" | "aniso2d", "p", "b", "P0"?, "h"?}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawParams {
    pub family: Family,
    pub p: u32,
    pub b: f64,
    #[serde(rename = "P0", default, skip_serializing_if = "Option::is_none")]
    pub p0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

impl TryFrom<LawParams> for WalkLaw {
    type Error = Error;
    fn try_from(v: LawParams) -> Result<Self> {
        match v.family {
            Family::OneDim => {
                if v.h.is_some() {
                    return Err(invalid("h", "only two-dimensional laws take h"));
                }
                Ok(WalkLaw::OneDim(WalkLaw1D::new(
                    v.p,
                    v.b,
                    v.p0.unwrap_or(0.0),
                )?))
            }
            Family::Iso2D => {
                if v.p0.is_some_and(|p0| p0 != 0.0) {
                    return Err(invalid("P0", "two-dimensional laws have no atom"));
                }
                if v.h.is_some_and(|h| h != 1.0) {
                    return Err(invalid("h", "the isotropic family has h = 1"));
                }
                Ok(WalkLaw::Iso(IsoLaw2D::new(v.p, v.b)?))
            }
            Family::Aniso2D => {
                if v.p0.is_some_and(|p0| p0 != 0.0) {
                    return Err(invalid("P0", "two-dimensional laws have no atom"));
                }
                let h =
                    v.h.ok_or_else(|| invalid("h", "required for the anisotropic family"))?;
                Ok(WalkLaw::Aniso(AnisoLaw2D::new(v.p, v.b, h)?))
            }
        }
    }
}

impl From<WalkLaw> for LawParams {
    fn from(l: WalkLaw) -> Self {
        match l {
            WalkLaw::OneDim(w) => LawParams {
                family: Family::OneDim,
                p: w.p,
                b: w.b,
                p0: Some(w.p0),
                h: None,
            },
            WalkLaw::Iso(w) => LawParams {
                family: Family::Iso2D,
                p: w.p,
                b: w.b,
                p0: None,
                h: None,
            },
            WalkLaw::Aniso(w) => LawParams {
                family: Family::Aniso2D,
                p: w.p,
                b: w.b,
                p0: None,
                h: Some(w.h),
            },
        }
    }
}

fn pf(p: u32) -> f64 {
    p as f64
}

fn check_moment_order(r: f64, b: f64) -> Result<()> {
    if !(r > 0.0 && r < b) {
        return Err(invalid("r", format!("{r} is outside (0, b = {b})")));
    }
    Ok(())
}

/// `c * sum_{i>=1} ((1 - alpha p^(-ib))^n - (1 - alpha p^(-(i-1)b))^n)(p^(ir) - p^(-d i))`.
fn radial_moment_series(p: f64, b: f64, r: f64, d: i32, alpha: f64, n: u64, c: f64) -> Evaluated {
    let mut sum = 0.0;
    let mut i = 1i64;
    let ratio = p.powf(r - b);
    loop {
        let a_i = alpha * p.powf(-(i as f64) * b);
        let a_prev = alpha * p.powf(-((i - 1) as f64) * b);
        let w = p.powf(i as f64 * r) - p.powi(-d * i as i32);
        sum += pow_diff(a_i, a_prev, n) * w;
        i += 1;
        // |(1-a)^n - (1-a')^n| <= n |a - a'| once both bases lie in [-1, 1]
        let bound =
            n as f64 * alpha * (p.powf(b) - 1.0) * p.powf(-(i as f64) * b) * p.powf(i as f64 * r)
                / (1.0 - ratio);
        if a_prev <= 2.0 && (bound <= SERIES_RTOL * sum.abs() || i > MAX_TERMS) {
            return Evaluated {
                value: c * sum,
                tail_bound: c * bound,
            };
        }
    }
}

impl WalkLaw {
    pub fn from_params(params: LawParams) -> Result<Self> {
        params.try_into()
    }

    /// The anisotropic request with `h = 1` is routed to the isotropic family.
    pub fn two_dim(p: u32, b: f64, h: f64) -> Result<Self> {
        if h == 1.0 {
            Ok(WalkLaw::Iso(IsoLaw2D::new(p, b)?))
        } else {
            Ok(WalkLaw::Aniso(AnisoLaw2D::new(p, b, h)?))
        }
    }

    pub fn params(&self) -> LawParams {
        (*self).into()
    }

    pub fn family(&self) -> Family {
        self.params().family
    }

    pub fn p(&self) -> u32 {
        match self {
            WalkLaw::OneDim(l) => l.p,
            WalkLaw::Iso(l) => l.p,
            WalkLaw::Aniso(l) => l.p,
        }
    }

    pub fn b(&self) -> f64 {
        match self {
            WalkLaw::OneDim(l) => l.b,
            WalkLaw::Iso(l) => l.b,
            WalkLaw::Aniso(l) => l.b,
        }
    }

    pub fn h(&self) -> Option<f64> {
        match self {
            WalkLaw::Aniso(l) => Some(l.h),
            _ => None,
        }
    }

    pub fn geometry(&self) -> Geometry {
        match self {
            WalkLaw::OneDim(_) => Geometry::OneDim,
            WalkLaw::Iso(_) => Geometry::Coarse,
            WalkLaw::Aniso(l) => Geometry::Fine { h: l.h },
        }
    }

    pub fn dim(&self) -> usize {
        self.geometry().dim()
    }

    /// Probability of not moving.
    pub fn atom(&self) -> f64 {
        match self {
            WalkLaw::OneDim(l) => l.p0,
            _ => 0.0,
        }
    }

    /// Probability of the shell at ladder position `j`; `j = 0` is the atom.
    pub fn shell_prob(&self, j: i64) -> Result<f64> {
        if j < 0 {
            return Err(invalid("index", format!("shell {j} is below the origin")));
        }
        if j == 0 {
            return Ok(self.atom());
        }
        Ok(self.q(j))
    }

    pub(crate) fn q(&self, j: i64) -> f64 {
        let p = pf(self.p());
        match self {
            WalkLaw::OneDim(l) => l.c() * p.powf(-(j as f64) * l.b),
            WalkLaw::Iso(l) => l.c1() * p.powf(-(j as f64) * l.b),
            WalkLaw::Aniso(l) => l.c_h() * l.r(j).powf(-l.b),
        }
    }

    /// `sum_{i >= j} shell_prob(i)` for `j >= 1`, in closed form.
    pub fn tail(&self, j: i64) -> f64 {
        let p = pf(self.p());
        let b = self.b();
        let j = j.max(1);
        let geo = 1.0 / (1.0 - p.powf(-b));
        match self {
            WalkLaw::Aniso(l) => {
                // odd shells 2k+1 carry C p^-(k+h)b, even shells 2k carry C p^-kb
                let first_odd = j.div_euclid(2);
                let first_even = (j + 1).div_euclid(2);
                let odd = p.powf(-(first_odd as f64 + l.h) * b);
                let even = p.powf(-(first_even as f64) * b);
                l.c_h() * (odd + even) * geo
            }
            _ => self.q(j) * geo,
        }
    }

    /// Atom plus the first 40 shells plus the analytic tail.
    pub fn total_mass(&self) -> f64 {
        let shells: f64 = (1..=40).map(|j| self.q(j)).sum();
        self.atom() + shells + self.tail(41)
    }

    /// Volume ratio between consecutive ladder balls.
    fn ladder_ratio(&self) -> f64 {
        let p = pf(self.p());
        match self.geometry() {
            Geometry::Coarse => p * p,
            _ => p,
        }
    }

    /// `1 - phi` on the dual shell `u`, for any `u` in `Z`. For `u <= 0` this is
    /// the one-step characteristic function; for `u > 0` it is the homogeneous
    /// extension used by scaling limits.
    pub fn multiplier(&self, u: i64) -> f64 {
        let p = pf(self.p());
        match self {
            WalkLaw::OneDim(l) => l.alpha() * p.powf(u as f64 * l.b),
            WalkLaw::Iso(l) => l.alpha_max() * p.powf(u as f64 * l.b),
            WalkLaw::Aniso(l) => {
                let a = if u.rem_euclid(2) == 0 {
                    l.alpha0()
                } else {
                    l.alpha1_effective()
                };
                a * self.geometry().radius_pow(l.p, l.b, u)
            }
        }
    }

    /// `1 - phi(u)` assembled from shell probabilities:
    /// `T(1-u) + q(1-u) / (ratio - 1)`, for `u <= 0`.
    pub fn multiplier_from_shells(&self, u: i64) -> f64 {
        let j = 1 - u;
        self.tail(j) + self.q(j) / (self.ladder_ratio() - 1.0)
    }

    /// Dual ladder position of `y`, `None` at the origin. The fine dual ladder
    /// reads the coordinates in swapped order.
    pub fn dual_index(&self, y: &[PAdic]) -> Result<Option<i64>> {
        dual_index(self.geometry(), y)
    }

    /// `phi(u)`, or 1 at `u = None`.
    pub fn char_value(&self, u: Option<i64>) -> f64 {
        u.map_or(1.0, |u| 1.0 - self.multiplier(u))
    }

    /// One-step characteristic function at `y` in `Z_p^d`.
    pub fn char_fn(&self, y: &[PAdic]) -> Result<f64> {
        let u = self.dual_index(y)?;
        if let Some(u) = u {
            if u > 0 {
                return Err(invalid("y", "dual point lies outside Z_p^d"));
            }
        }
        Ok(self.char_value(u))
    }

    /// Density of `S_n` with respect to counting measure on `G_0^d`, at a
    /// point of ladder position `j` (`None` for the origin):
    /// `sum_{i >= j} (phi_(-i)^n - phi_(-i+1)^n) / V_i`.
    pub fn nstep_density(&self, n: u64, j: Option<i64>) -> Evaluated {
        if n == 0 {
            return Evaluated::exact(if j.is_none() { 1.0 } else { 0.0 });
        }
        let g = self.geometry();
        let p = self.p();
        let start = j.unwrap_or(0).max(0);
        let mut sum = 0.0;
        let mut i = start;
        loop {
            let m_i = self.multiplier(-i);
            let prev = if i == 0 {
                pow_one_minus(m_i, n)
            } else {
                pow_diff(m_i, self.multiplier(1 - i), n)
            };
            sum += prev / g.ball_volume(p, i);
            i += 1;
            let bound = n as f64 * self.multiplier(1 - i) / g.ball_volume(p, i);
            if self.multiplier(1 - i) <= 2.0
                && (bound <= SERIES_RTOL * sum.abs() || i - start > MAX_TERMS)
            {
                return Evaluated {
                    value: sum,
                    tail_bound: bound,
                };
            }
        }
    }

    /// Probability that `S_n` equals the level-0 element `g`.
    pub fn nstep_mass(&self, n: u64, g: &GroupElem) -> Result<f64> {
        if g.level() != 0 {
            return Err(Error::LevelMismatch(0, g.level()));
        }
        if g.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: g.dim(),
            });
        }
        let j = self.geometry().ladder_of_exponents(&g.log_norms());
        Ok(self.nstep_density(n, j).value)
    }

    /// `P(S_n in ball i)` at level 0; balls with `i <= 0` are the origin.
    pub fn nstep_ball_mass(&self, n: u64, i: i64) -> Evaluated {
        let g = self.geometry();
        let p = self.p();
        let frac = g.shell_fraction(p);
        let i = i.max(0);
        let mut sum = 0.0;
        let mut j = i;
        loop {
            sum += pow_one_minus(self.multiplier(-j), n) * frac / g.ball_volume(p, j);
            j += 1;
            let bound = g.ball_volume(p, i) / g.ball_volume(p, j);
            if bound <= SERIES_RTOL * sum.abs() || j - i > MAX_TERMS {
                return Evaluated {
                    value: sum * g.ball_volume(p, i),
                    tail_bound: bound,
                };
            }
        }
    }

    /// `P(S_n in shell j)` at level 0; shell 0 is the origin.
    /// Rounding below zero is clamped.
    pub fn nstep_shell_mass(&self, n: u64, j: i64) -> f64 {
        let g = self.geometry();
        let mass = if j <= 0 {
            self.nstep_density(n, None).value
        } else {
            g.shell_volume(self.p(), j) * self.nstep_density(n, Some(j)).value
        };
        mass.max(0.0)
    }

    /// `E ||S_n||^r` with the family's norm (absolute value, max-norm, or
    /// weighted norm), summed shell by shell.
    pub fn nstep_moment(&self, n: u64, r: f64) -> Result<Evaluated> {
        check_moment_order(r, self.b())?;
        let g = self.geometry();
        let (p, b, h) = (self.p(), self.b(), g.h());
        let rad = |j: i64| g.radius(j).value(p, h).powf(r);
        let ratio = pf(p).powf(r - b);
        let mut sum = 0.0;
        let mut j = 1i64;
        loop {
            sum += rad(j) * self.nstep_shell_mass(n, j);
            j += 1;
            // P(S_n outside ball j-1) <= n T(j), and the pair bound decays by p^(r-b)
            let bound = 2.0 * n as f64 * (rad(j) * self.tail(j) + rad(j + 1) * self.tail(j + 1))
                / (1.0 - ratio);
            if bound <= SERIES_RTOL * sum || j > MAX_TERMS {
                return Ok(Evaluated {
                    value: sum,
                    tail_bound: bound,
                });
            }
        }
    }

    /// Draws the ladder position of one step; `None` is the atom.
    pub fn sample_ladder<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<i64> {
        let p = pf(self.p());
        let b = self.b();
        let u: f64 = rng.random();
        match self {
            WalkLaw::OneDim(_) | WalkLaw::Iso(_) => {
                let p0 = self.atom();
                if u < p0 {
                    return None;
                }
                // 1 - v in (0, 1]
                let v = 1.0 - (u - p0) / (1.0 - p0);
                let v = if v > 0.0 { v } else { f64::MIN_POSITIVE };
                Some(1 + (-v.ln() / (b * p.ln())).floor() as i64)
            }
            WalkLaw::Aniso(l) => {
                let v = 1.0 - u;
                let k = (-v.ln() / (b * p.ln())).floor() as i64;
                let (odd_w, even_w) = (p.powf(-l.h * b), p.powf(-b));
                let odd = rng.random::<f64>() * (odd_w + even_w) < odd_w;
                Some(if odd { 2 * k + 1 } else { 2 * k + 2 })
            }
        }
    }

    /// One step of the walk on `G_m^d`, as the law's shell shifted down by `m` levels.
    pub fn sample_step_at_level<R: Rng + ?Sized>(
        &self,
        m: u32,
        k_max: i64,
        rng: &mut R,
    ) -> Result<GroupElem> {
        let p = self.p();
        let Some(j) = self.sample_ladder(rng) else {
            return Ok(GroupElem::identity(p, m, self.dim()));
        };
        if j > k_max {
            return Err(Error::ShellCapExceeded {
                index: j,
                cap: k_max,
            });
        }
        let shift = m as i64 * self.geometry().steps_per_level();
        match self.geometry() {
            Geometry::OneDim => sample_shell_1d(p, j - shift, m, rng),
            Geometry::Coarse => sample_coarse_shell_2d(p, 2 * (j - shift), m, rng),
            Geometry::Fine { .. } => sample_fine_shell_2d(p, j - shift, m, rng),
        }
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<GroupElem> {
        self.sample_step_at_level(0, crate::DEFAULT_K_MAX, rng)
    }

    pub fn component_marginal(&self, coord: usize, k: i64) -> Result<f64> {
        component_marginal(self, coord, k)
    }
}

pub fn dual_index(g: Geometry, y: &[PAdic]) -> Result<Option<i64>> {
    if y.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: y.len(),
        });
    }
    let e: Vec<Option<i64>> = y.iter().map(PAdic::log_abs).collect();
    Ok(match g {
        Geometry::OneDim => e[0],
        Geometry::Coarse => e[0].max(e[1]),
        Geometry::Fine { .. } => fine_index(e[1], e[0]),
    })
}

/// One-step law of coordinate `coord` (1 or 2): probability of the shell
/// `S(k)` for `k >= 1`, and of the origin for `k = 0`.
pub fn component_marginal(law: &WalkLaw, coord: usize, k: i64) -> Result<f64> {
    if !(coord == 1 || coord == 2) {
        return Err(invalid("coord", format!("{coord} is not 1 or 2")));
    }
    if k < 0 {
        return Err(invalid("k", format!("shell {k} is below the origin")));
    }
    let (p, b) = (pf(law.p()), law.b());
    let (pb, pb1) = (p.powf(b), p.powf(b + 1.0));
    match law {
        WalkLaw::OneDim(_) => Err(Error::NeedsTwoDimensions("component_marginal")),
        WalkLaw::Iso(_) => Ok(if k == 0 {
            p * (p - 1.0) / (p * p - 1.0) * (pb - 1.0) / (pb1 - 1.0)
        } else {
            (pb - 1.0) * (p - 1.0) / (p * p - 1.0)
                * (1.0 + (p - 1.0) * pb1 / (pb1 - 1.0))
                * p.powf(-(k as f64) * b)
        }),
        WalkLaw::Aniso(l) => {
            let phb = p.powf(l.h * b);
            let lead = (pb - 1.0) / (pb + phb);
            Ok(match (coord, k) {
                (1, 0) => pb1 / (pb + phb) * (pb - 1.0) / (pb1 - 1.0),
                (2, 0) => phb / (pb + phb) * (pb - 1.0) / (pb1 - 1.0),
                (1, k) => {
                    lead * (phb + (1.0 - 1.0 / p) * pb1 / (pb1 - 1.0)) * p.powf(-(k as f64) * b)
                }
                (_, k) => {
                    lead * (phb + (p - 1.0) * phb * phb / (pb1 - 1.0))
                        * p.powf(-((k - 1) as f64 + l.h) * b)
                }
            })
        }
    }
}
