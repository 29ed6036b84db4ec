//! Embedded pre-limit laws `rho_m`, their characteristic functions `E_m`, and
//! distances to the limit kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fdd::{fdd_run, Ball, FddOutcome, RadialDensity, Transition};
use crate::groups::EmbeddingScheme;
use crate::kernels::{check_t, check_times, KernelSpec};
use crate::laws::{dual_index, WalkLaw, SERIES_RTOL};
use crate::padic::PAdic;
use crate::series::{pow_one_minus, Evaluated};

const EXP_CUTOFF: f64 = 40.0;
const MAX_TERMS: i64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreLimitLaw {
    pub law: WalkLaw,
    pub scheme: EmbeddingScheme,
    /// Diffusion parameter of the limit kernel this law converges to.
    pub sigma: f64,
}

/// Pre-limit density at a fixed number of steps, as a radial density on `Q_p^d`.
pub struct PreLimitAt {
    pub law: WalkLaw,
    pub m: u32,
    pub n: u64,
}

impl PreLimitAt {
    fn shift(&self) -> i64 {
        self.m as i64 * self.law.geometry().steps_per_level()
    }
}

impl RadialDensity for PreLimitAt {
    fn density(&self, j: Option<i64>) -> f64 {
        let g = self.law.geometry();
        let s = self.shift();
        let inner = j.map(|j| j + s).filter(|&j| j > 0);
        g.ball_volume(self.law.p(), s) * self.law.nstep_density(self.n, inner).value
    }

    fn ball_mass(&self, j: i64) -> f64 {
        self.law.nstep_ball_mass(self.n, j + self.shift()).value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupDistance {
    pub n: u64,
    pub t_m: f64,
    /// `integral |exp(-sigma t M) - E_m|` over the dual space.
    pub l1_dual: Evaluated,
    /// `max |rho(t, x) - rho_m(t, x)|` over one point per shell of the grid.
    pub sup_grid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FddComparison {
    pub prob_m: f64,
    pub prob_limit: f64,
    pub diff: f64,
    pub collapsed: bool,
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub family: String,
    pub p: u32,
    pub b: f64,
    pub h: Option<f64>,
    #[serde(rename = "P0")]
    pub p0: Option<f64>,
    pub sigma: f64,
    pub m: u32,
    pub t: f64,
    pub l1_dual: f64,
    pub sup_grid: f64,
}

impl PreLimitLaw {
    pub fn new(law: WalkLaw, scheme: EmbeddingScheme) -> Result<Self> {
        if law.p() != scheme.p {
            return Err(invalid("p", "law and scheme use different primes"));
        }
        if law.b() != scheme.b {
            return Err(invalid("b", "law and scheme use different exponents"));
        }
        let sigma = KernelSpec::from_law(&law, scheme.d)?.sigma;
        Ok(Self { law, scheme, sigma })
    }

    pub fn kernel(&self) -> KernelSpec {
        KernelSpec::from_law(&self.law, self.scheme.d).expect("validated at construction")
    }

    /// Dual and spatial ladder offset of level `m`.
    pub fn shift(&self) -> i64 {
        self.scheme.m as i64 * self.law.geometry().steps_per_level()
    }

    pub fn at_steps(&self, n: u64) -> PreLimitAt {
        PreLimitAt {
            law: self.law,
            m: self.scheme.m,
            n,
        }
    }

    /// `rho_m(t, x) = p^(dm) rho_*(floor(lambda t), p^-m x)` at a point of
    /// ladder position `j`.
    pub fn density_at(&self, t: f64, j: Option<i64>) -> f64 {
        self.at_steps(self.scheme.steps_at(t)).density(j)
    }

    pub fn prelimit_density(&self, t: f64, x: &[PAdic]) -> Result<f64> {
        check_t(t)?;
        let g = self.law.geometry();
        if x.len() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                got: x.len(),
            });
        }
        let e: Vec<Option<i64>> = x.iter().map(PAdic::log_abs).collect();
        Ok(self.density_at(t, g.ladder_of_exponents(&e)))
    }

    /// `E_m(n, u) = (1 - M(u - shift))^n` inside the dual of the lattice, 0 beyond.
    pub fn char_at_steps(&self, n: u64, u: Option<i64>) -> f64 {
        match u {
            None => 1.0,
            Some(u) if u > self.shift() => 0.0,
            Some(u) => pow_one_minus(self.law.multiplier(u - self.shift()), n),
        }
    }

    pub fn prelimit_char(&self, t: f64, y: &[PAdic]) -> Result<f64> {
        check_t(t)?;
        let u = dual_index(self.law.geometry(), y)?;
        Ok(self.char_at_steps(self.scheme.steps_at(t), u))
    }

    /// `integral over the dual of |exp(-sigma t M(y)) - E_m(floor(lambda t), y)| dy`.
    pub fn l1_dual(&self, t: f64) -> Evaluated {
        let g = self.law.geometry();
        let p = self.law.p();
        let kernel = self.kernel();
        let n = self.scheme.steps_at(t);
        let a = kernel.sigma * t;
        let vol = |u: i64| g.shell_volume(p, u);
        let diff =
            |u: i64| (kernel.limit_char_at(t, Some(u)) - self.char_at_steps(n, Some(u))).abs();
        let pair_ratio = (p as f64).powf(-(2.0 + self.law.b()));

        let mut u_hi = self.shift() + 1;
        while a * kernel.multiplier(u_hi) < EXP_CUTOFF {
            u_hi += 1;
        }
        let mut sum = 0.0;
        for u in self.shift() + 1..u_hi {
            sum += vol(u) * diff(u);
        }
        // beyond u_hi only the limit survives, and it dies super-exponentially
        let mut bound = 0.0;
        let mut u = u_hi;
        loop {
            let term = vol(u) * kernel.limit_char_at(t, Some(u));
            sum += term;
            u += 1;
            let head = vol(u) * kernel.limit_char_at(t, Some(u));
            if head <= 1e-3 * SERIES_RTOL * sum.max(f64::MIN_POSITIVE) || u - u_hi > MAX_TERMS {
                bound += 2.0 * head;
                break;
            }
        }
        let mut u = self.shift().min(u_hi - 1);
        let mut count = 0;
        loop {
            sum += vol(u) * diff(u);
            u -= 1;
            count += 1;
            // |e^-x - (1-y)^n| <= |x - n y| + n y^2 / (1 - y), linear in M for small M
            let x = a * kernel.multiplier(u);
            let y = self.law.multiplier(u - self.shift());
            if y < 0.5 {
                let per_m = ((x - n as f64 * y).abs() + n as f64 * y * y / (1.0 - y))
                    / kernel.multiplier(u);
                let tail = per_m
                    * (vol(u) * kernel.multiplier(u) + vol(u - 1) * kernel.multiplier(u - 1))
                    / (1.0 - pair_ratio);
                if tail <= SERIES_RTOL * sum.max(1e-300) || tail < 1e-300 || count > MAX_TERMS {
                    bound += tail;
                    break;
                }
            }
        }
        Evaluated {
            value: sum,
            tail_bound: bound,
        }
    }

    /// Dual distance plus the direct maximum over the origin and one point in
    /// every shell from the lattice resolution up to ladder position `grid_top`.
    pub fn sup_distance(&self, t: f64, grid_top: i64) -> Result<SupDistance> {
        check_t(t)?;
        let kernel = self.kernel();
        let n = self.scheme.steps_at(t);
        let at = self.at_steps(n);
        let grid = std::iter::once(None).chain((1 - self.shift()..=grid_top).map(Some));
        let sup_grid = grid
            .map(|j| (kernel.heat_kernel_at(t, j).value - at.density(j)).abs())
            .fold(0.0, f64::max);
        Ok(SupDistance {
            n,
            t_m: self.scheme.grid_time(t),
            l1_dual: self.l1_dual(t),
            sup_grid,
        })
    }

    /// Probability of the history under the embedded walk and under the limit.
    pub fn fdd_compare(&self, history: &[(f64, Ball)]) -> Result<FddComparison> {
        let times: Vec<f64> = history.iter().map(|(t, _)| *t).collect();
        check_times(&times)?;
        let limit: FddOutcome = self.kernel().fdd_prob(history)?;
        let mut prev = 0u64;
        let mut steps = Vec::with_capacity(history.len());
        for (t, ball) in history {
            let n = self.scheme.steps_at(*t);
            let dn = n - prev;
            prev = n;
            let tr = if dn == 0 {
                Transition::Identity
            } else {
                Transition::Density(Box::new(self.at_steps(dn)))
            };
            steps.push((tr, ball.clone()));
        }
        let discrete = fdd_run(
            self.law.geometry(),
            self.law.p(),
            steps,
            Some(1 - self.shift()),
        )?;
        Ok(FddComparison {
            prob_m: discrete.probability,
            prob_limit: limit.probability,
            diff: (discrete.probability - limit.probability).abs(),
            collapsed: discrete.collapsed || limit.collapsed,
        })
    }

    pub fn row(&self, t: f64, grid_top: i64) -> Result<ConvergenceRow> {
        let d = self.sup_distance(t, grid_top)?;
        let params = self.law.params();
        Ok(ConvergenceRow {
            family: params.family.name().to_string(),
            p: params.p,
            b: params.b,
            h: params.h,
            p0: params.p0,
            sigma: self.sigma,
            m: self.scheme.m,
            t,
            l1_dual: d.l1_dual.value,
            sup_grid: d.sup_grid,
        })
    }
}

/// Convergence table over every `(m, t)` pair, computed in parallel.
pub fn convergence_table(
    law: &WalkLaw,
    d: f64,
    levels: &[u32],
    times: &[f64],
    grid_top: i64,
) -> Result<Vec<ConvergenceRow>> {
    let cells: Vec<(u32, f64)> = levels
        .iter()
        .flat_map(|&m| times.iter().map(move |&t| (m, t)))
        .collect();
    cells
        .par_iter()
        .map(|&(m, t)| {
            let scheme = EmbeddingScheme::new(law.p(), m, d, law.b())?;
            PreLimitLaw::new(*law, scheme)?.row(t, grid_top)
        })
        .collect()
}
