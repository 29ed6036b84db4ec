//! Heat kernels of the limiting processes, as ball-indicator series.
//!
//! On the dual ladder the limit multiplier is `sigma * M(u)`; the kernel is
//! `rho(t, x) = sum_u V_u (exp(-sigma t M(u)) - exp(-sigma t M(u+1)))` over
//! the dual shells `u` whose annihilator ball contains `x`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::fdd::{fdd_run, Ball, FddOutcome, RadialDensity, Transition};
use crate::laws::{dual_index, AnisoLaw2D, Family, IsoLaw2D, WalkLaw, SERIES_RTOL};
use crate::padic::{check_prime, PAdic};
use crate::series::{exp_diff, Evaluated};
use crate::shells::Geometry;

/// Exponent beyond which `exp(-x)` is dropped from the upper end of a series.
const EXP_CUTOFF: f64 = 40.0;
const MAX_TERMS: i64 = 200_000;
/// `a M` below which the kernel is summed by its first-order part.
const LINEAR_CUTOFF: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: Family,
    pub p: u32,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub sigma: f64,
    pub tolerance: f64,
}

/// A kernel value with the series window that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub value: f64,
    pub tail_bound: f64,
    /// Lowest and highest dual index summed.
    pub lower: i64,
    pub upper: i64,
}

impl KernelSpec {
    pub fn new(family: Family, p: u32, b: f64, h: Option<f64>, sigma: f64) -> Result<Self> {
        check_prime(p)?;
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid("b", format!("{b} is not a positive real")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("{sigma} is not positive")));
        }
        let h = match family {
            Family::Aniso2D => {
                let h = h.ok_or_else(|| invalid("h", "required for the anisotropic family"))?;
                AnisoLaw2D::new(p, b, h)?;
                Some(h)
            }
            _ => {
                if h.is_some_and(|h| family == Family::OneDim || h != 1.0) {
                    return Err(invalid("h", "only the anisotropic family takes h"));
                }
                None
            }
        };
        Ok(Self {
            family,
            p,
            b,
            h,
            sigma,
            tolerance: 1e-12,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance <= 1e-6) {
            return Err(invalid(
                "tolerance",
                format!("{tolerance} is outside (0, 1e-6]"),
            ));
        }
        self.tolerance = tolerance;
        Ok(self)
    }

    /// The limit of a walk family embedded with `lambda(m) = D p^(m b)`:
    /// `sigma = D alpha(P0)` in one dimension, `sigma = D` in two, where the
    /// family's alphas stay inside the multiplier.
    pub fn from_law(law: &WalkLaw, d: f64) -> Result<Self> {
        let sigma = match law {
            WalkLaw::OneDim(l) => d * l.alpha(),
            _ => d,
        };
        Self::new(law.family(), law.p(), law.b(), law.h(), sigma)
    }

    pub fn geometry(&self) -> Geometry {
        match self.family {
            Family::OneDim => Geometry::OneDim,
            Family::Iso2D => Geometry::Coarse,
            Family::Aniso2D => Geometry::Fine {
                h: self.h.unwrap_or(1.0),
            },
        }
    }

    /// `M(u)`: `p^(ub)`, `alpha_max p^(ub)`, or `alpha(u) R(u)^b`.
    pub fn multiplier(&self, u: i64) -> f64 {
        match self.family {
            Family::OneDim => (self.p as f64).powf(u as f64 * self.b),
            Family::Iso2D => WalkLaw::Iso(IsoLaw2D {
                p: self.p,
                b: self.b,
            })
            .multiplier(u),
            Family::Aniso2D => WalkLaw::Aniso(AnisoLaw2D {
                p: self.p,
                b: self.b,
                h: self.h.unwrap_or(0.5),
            })
            .multiplier(u),
        }
    }

    /// `exp(-sigma t M(u))`, or 1 at the dual origin.
    pub fn limit_char_at(&self, t: f64, u: Option<i64>) -> f64 {
        u.map_or(1.0, |u| (-self.sigma * t * self.multiplier(u)).exp())
    }

    pub fn limit_char(&self, t: f64, y: &[PAdic]) -> Result<f64> {
        check_t(t)?;
        Ok(self.limit_char_at(t, dual_index(self.geometry(), y)?))
    }

    fn term(&self, a: f64, u: i64) -> f64 {
        let g = self.geometry();
        g.ball_volume(self.p, u) * exp_diff(a * self.multiplier(u), a * self.multiplier(u + 1))
    }

    /// Smallest `u` with `a M(u) >= level`.
    fn threshold(&self, a: f64, level: f64) -> i64 {
        let mut u = 0i64;
        while a * self.multiplier(u) < level {
            u += 1;
        }
        while a * self.multiplier(u - 1) >= level {
            u -= 1;
        }
        u
    }

    /// `sum_{u <= top} V_u d_u`, with `d_u = exp(-a M(u)) - exp(-a M(u+1))`.
    fn series(&self, a: f64, top: Option<i64>) -> KernelEval {
        let g = self.geometry();
        let p = self.p as f64;
        let u_hi = self.threshold(a, EXP_CUTOFF);
        let cap = top.unwrap_or(i64::MAX);
        let pair_ratio = p.powf(-(2.0 + self.b));
        let mut sum = 0.0;
        let mut bound = 0.0;

        let mut u = cap.min(u_hi - 1);
        let lower;
        let mut count = 0;
        loop {
            sum += self.term(a, u);
            u -= 1;
            count += 1;
            // d_u <= a M(u+1), and the pair of terms shrinks by p^-(2+b)
            let tail = a
                * (g.ball_volume(self.p, u) * self.multiplier(u + 1)
                    + g.ball_volume(self.p, u - 1) * self.multiplier(u))
                / (1.0 - pair_ratio);
            if tail <= SERIES_RTOL * sum || count > MAX_TERMS {
                bound += tail;
                lower = u + 1;
                break;
            }
        }

        let mut upper = cap.min(u_hi - 1);
        let mut u = u_hi;
        while u <= cap {
            sum += self.term(a, u);
            upper = u;
            let head = g.ball_volume(self.p, u + 1) * (-a * self.multiplier(u + 1)).exp();
            if head <= 1e-3 * SERIES_RTOL * sum {
                bound += 2.0 * head;
                break;
            }
            u += 1;
        }
        KernelEval {
            value: sum,
            tail_bound: bound,
            lower,
            upper,
        }
    }

    /// `rho(t, x)` at a point of spatial ladder position `j` (`None` for the origin).
    pub fn heat_kernel_at(&self, t: f64, j: Option<i64>) -> KernelEval {
        self.series(self.sigma * t, j.map(|j| -j))
    }

    pub fn heat_kernel(&self, t: f64, x: &[PAdic]) -> Result<f64> {
        check_t(t)?;
        let g = self.geometry();
        if x.len() != g.dim() {
            return Err(crate::error::Error::DimensionMismatch {
                expected: g.dim(),
                got: x.len(),
            });
        }
        let e: Vec<Option<i64>> = x.iter().map(PAdic::log_abs).collect();
        Ok(self.heat_kernel_at(t, g.ladder_of_exponents(&e)).value)
    }

    /// Mass of `rho(t, .)` on the centered ball of ladder position `j`.
    pub fn ball_mass(&self, t: f64, j: i64) -> Evaluated {
        let g = self.geometry();
        let a = self.sigma * t;
        let inner = self.heat_kernel_at(t, Some(j));
        let vol = g.ball_volume(self.p, j);
        Evaluated {
            value: vol * inner.value + (-a * self.multiplier(1 - j)).exp(),
            tail_bound: vol * inner.tail_bound,
        }
    }

    /// Mass of `rho(t, .)` on the shell of ladder position `j`.
    pub fn shell_mass(&self, t: f64, j: i64) -> f64 {
        self.geometry().shell_volume(self.p, j) * self.heat_kernel_at(t, Some(j)).value
    }

    /// `E ||Y_t||^r`, where the norm is the absolute value, the max-norm, or
    /// the weighted norm according to the family.
    pub fn kernel_moment(&self, t: f64, r: f64) -> Result<Evaluated> {
        check_t(t)?;
        if !(r > 0.0 && r < self.b) {
            return Err(invalid("r", format!("{r} is outside (0, b = {})", self.b)));
        }
        let g = self.geometry();
        let (p, h) = (self.p, g.h());
        let a = self.sigma * t;
        let rad = |j: i64| g.radius(j).value(p, h).powf(r);
        let term = |j: i64| rad(j) * g.shell_volume(p, j) * self.heat_kernel_at(t, Some(j)).value;
        // the bulk of the mass sits on the shell where a M(1 - j) is of order one
        let mid = 1 - self.threshold(a, 1.0);
        let pf = p as f64;
        let rho0 = self.heat_kernel_at(t, None).value;

        let mut sum = 0.0;
        let mut bound = 0.0;
        let w = |j: i64| rad(j) * g.shell_volume(p, j);
        let mut j = mid;
        loop {
            if a * self.multiplier(1 - j) <= LINEAR_CUTOFF {
                // rho is linear in a up to a factor in [exp(-a M(1 - j)), 1], and
                // the linear part is geometric over pairs of shells
                let lin = |j: i64| w(j) * self.first_order(a, j);
                let ratio = lin(j + 2) / lin(j);
                let head = (lin(j) + lin(j + 1)) / (1.0 - ratio);
                let slack = -(-a * self.multiplier(1 - j)).exp_m1();
                sum += head * (1.0 - slack / 2.0);
                bound += head * slack / 2.0;
                break;
            }
            sum += term(j);
            j += 1;
        }
        let mut j = mid - 1;
        loop {
            sum += term(j);
            j -= 1;
            let tail = rho0 * (rad(j) * g.ball_volume(p, j) + rad(j - 1) * g.ball_volume(p, j - 1))
                / (1.0 - pf.powf(-(r + 2.0)));
            if tail <= SERIES_RTOL * sum || mid - j > MAX_TERMS {
                bound += tail;
                break;
            }
        }
        Ok(Evaluated {
            value: sum,
            tail_bound: bound,
        })
    }

    /// `a sum_{u <= -j} V_u (M(u+1) - M(u))`.
    fn first_order(&self, a: f64, j: i64) -> f64 {
        let g = self.geometry();
        let mut s = 0.0;
        let mut u = -j;
        loop {
            let w = g.ball_volume(self.p, u) * (self.multiplier(u + 1) - self.multiplier(u));
            s += w;
            if w <= 1e-17 * s {
                return a * s;
            }
            u -= 1;
        }
    }

    /// Upper bound on `E ||Y_t||^r`: a shell-volume prefactor times
    /// `a^(r/b) Gamma(1 - r/b)`, with `a = sigma t M(0)`.
    pub fn moment_bound(&self, t: f64, r: f64) -> Result<f64> {
        check_t(t)?;
        if !(r > 0.0 && r < self.b) {
            return Err(invalid("r", format!("{r} is outside (0, b = {})", self.b)));
        }
        let p = self.p as f64;
        let (prefactor, coef) = match self.family {
            Family::OneDim => (
                p.powf(r) * (p.powf(r + 1.0) - p.powf(r)) / (p.powf(r + 1.0) - 1.0),
                1.0,
            ),
            Family::Iso2D => (
                p.powf(r) * (p.powf(r + 2.0) - p.powf(r)) / (p.powf(r + 2.0) - 1.0),
                self.multiplier(0),
            ),
            Family::Aniso2D => (
                p.powf(r + 1.0) * (p * p - 1.0) / (p.powf(r + 2.0) - 1.0),
                self.multiplier(0),
            ),
        };
        let a = self.sigma * coef * t;
        Ok(prefactor * a.powf(r / self.b) * gamma(1.0 - r / self.b))
    }

    /// Finite-dimensional distribution of the limit process started at the
    /// origin: the probability that `Y_(t_i)` lies in ball `U_i` for every `i`.
    pub fn fdd_prob(&self, history: &[(f64, Ball)]) -> Result<FddOutcome> {
        let times: Vec<f64> = history.iter().map(|(t, _)| *t).collect();
        check_times(&times)?;
        let mut prev = 0.0;
        let mut steps = Vec::with_capacity(history.len());
        for (t, ball) in history {
            let dt = t - prev;
            prev = *t;
            let tr = if dt == 0.0 {
                Transition::Identity
            } else {
                Transition::Density(Box::new(KernelAt { spec: *self, t: dt }))
            };
            steps.push((tr, ball.clone()));
        }
        fdd_run(self.geometry(), self.p, steps, None)
    }
}

pub(crate) fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("{t} is not positive")));
    }
    Ok(())
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(crate::error::Error::EmptyHistory);
    }
    if times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(crate::error::Error::NonIncreasingTimes);
    }
    Ok(())
}

/// `rho(t, .)` seen as a radial density.
pub struct KernelAt {
    pub spec: KernelSpec,
    pub t: f64,
}

impl RadialDensity for KernelAt {
    fn density(&self, j: Option<i64>) -> f64 {
        self.spec.heat_kernel_at(self.t, j).value
    }

    fn ball_mass(&self, j: i64) -> f64 {
        self.spec.ball_mass(self.t, j).value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_dim() -> KernelSpec {
        KernelSpec::new(Family::OneDim, 2, 1.0, None, 1.0).unwrap()
    }

    #[test]
    fn origin_value_matches_direct_sum() {
        let k = one_dim();
        let direct: f64 = (-80..80)
            .map(|i| {
                let pk = 2f64.powi(i);
                pk * ((-pk).exp() - (-2.0 * pk).exp())
            })
            .sum();
        let v = k.heat_kernel_at(1.0, None).value;
        assert!((v - direct).abs() < 1e-14, "{v} vs {direct}");
    }

    #[test]
    fn ball_masses_increase_to_one() {
        for spec in [
            one_dim(),
            KernelSpec::new(Family::Iso2D, 3, 0.5, None, 2.0).unwrap(),
            KernelSpec::new(Family::Aniso2D, 2, 1.5, Some(0.3), 0.7).unwrap(),
        ] {
            let mut last = 0.0;
            for j in -20..60 {
                let m = spec.ball_mass(0.5, j).value;
                assert!(m >= last - 1e-15);
                last = m;
            }
            assert!((last - 1.0).abs() < 1e-12, "{spec:?}: {last}");
        }
    }

    #[test]
    fn limit_char_examples() {
        let k = one_dim();
        assert!((k.limit_char_at(1.0, Some(0)) - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(k.limit_char_at(3.0, None), 1.0);
    }

    #[test]
    fn tolerance_domain() {
        assert!(one_dim().with_tolerance(1e-5).is_err());
        assert!(one_dim().with_tolerance(1e-9).is_ok());
    }
}
