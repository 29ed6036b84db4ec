//! Seeded Monte Carlo for primitive and embedded walks.
//!
//! Paths are split into fixed blocks of [`BLOCK`] paths, and block `i` draws
//! from ChaCha8 stream `i` of the configured seed. Histograms hold integer
//! counts, so merging is exact and the output does not depend on `workers`.
//!
//! Two engines are available. [`Engine::Digits`] carries every coordinate as
//! an integer modulo `p^K` and adds steps one at a time. [`Engine::Shells`]
//! samples `S_n` directly: the largest step shell `J` and its multiplicity
//! `c`, then the sum of the `c` leading digits. If that sum vanishes the
//! position is uniform on ball `J - 1`, otherwise it lies on shell `J`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fdd::Ball;
use crate::groups::EmbeddingScheme;
use crate::laws::WalkLaw;
use crate::padic::{PAdic, DEFAULT_PRECISION};
use crate::shells::{Geometry, ShellKind};

/// Paths per random stream.
pub const BLOCK: u64 = 1 << 14;

/// Half-width multiplier of the Wilson intervals.
pub const WILSON_Z: f64 = 4.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Shells,
    Digits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub law: WalkLaw,
    pub n_paths: u64,
    /// Recorded step counts, strictly increasing.
    pub steps: Vec<u64>,
    pub seed: u64,
    pub workers: usize,
    /// Largest step ladder index drawn before a path is counted as overflow.
    pub k_max: i64,
    pub engine: Engine,
}

impl SimConfig {
    pub fn new(law: WalkLaw, n_paths: u64, steps: Vec<u64>, seed: u64) -> Self {
        Self {
            law,
            n_paths,
            steps,
            seed,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            k_max: crate::DEFAULT_K_MAX,
            engine: Engine::default(),
        }
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_k_max(mut self, k_max: i64) -> Self {
        self.k_max = k_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "must be at least 1"));
        }
        if self.steps.is_empty() {
            return Err(invalid("steps", "nothing to record"));
        }
        if self.steps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("steps", "must be strictly increasing"));
        }
        if self.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        if self.k_max < 1 {
            return Err(invalid("k_max", "must be at least 1"));
        }
        Ok(())
    }

    /// The shell cap actually used: `k_max`, lowered to what `u128` digits hold.
    pub fn effective_cap(&self) -> i64 {
        let k = digit_capacity(self.law.p()) as i64;
        let fits = match self.law.geometry() {
            Geometry::OneDim | Geometry::Coarse => k,
            Geometry::Fine { .. } => 2 * k - 1,
        };
        self.k_max.min(fits)
    }
}

/// Shell histogram of one recorded time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalHistogram {
    pub kind: ShellKind,
    pub n: u64,
    pub t: Option<f64>,
    pub total: u64,
    pub atom: u64,
    pub overflow: u64,
    pub counts: BTreeMap<i64, u64>,
}

impl EmpiricalHistogram {
    pub fn new(kind: ShellKind, n: u64) -> Self {
        Self {
            kind,
            n,
            t: None,
            total: 0,
            atom: 0,
            overflow: 0,
            counts: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, j: Option<i64>) {
        self.total += 1;
        match j {
            None => self.atom += 1,
            Some(j) => *self.counts.entry(j).or_insert(0) += 1,
        }
    }

    pub fn record_overflow(&mut self) {
        self.total += 1;
        self.overflow += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.total += other.total;
        self.atom += other.atom;
        self.overflow += other.overflow;
        for (&j, &c) in &other.counts {
            *self.counts.entry(j).or_insert(0) += c;
        }
    }

    pub fn count(&self, j: Option<i64>) -> u64 {
        match j {
            None => self.atom,
            Some(j) => self.counts.get(&j).copied().unwrap_or(0),
        }
    }

    pub fn frequency(&self, j: Option<i64>) -> f64 {
        self.count(j) as f64 / self.total as f64
    }

    /// Wilson interval for the cell probability.
    pub fn wilson(&self, j: Option<i64>) -> (f64, f64) {
        wilson(self.count(j), self.total, WILSON_Z)
    }

    pub fn half_width(&self, j: Option<i64>) -> f64 {
        let (lo, hi) = self.wilson(j);
        (hi - lo) / 2.0
    }

    /// Whether `prob` lies in the cell's Wilson interval widened by `slack`.
    pub fn covers(&self, j: Option<i64>, prob: f64, slack: f64) -> bool {
        let (lo, hi) = self.wilson(j);
        lo - slack <= prob && prob <= hi + slack
    }

    /// Moves every shell key by `-offset`.
    pub fn shifted(mut self, offset: i64) -> Self {
        self.counts = self
            .counts
            .into_iter()
            .map(|(j, c)| (j - offset, c))
            .collect();
        self
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let phat = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub n: u64,
    pub t: Option<f64>,
    pub r: f64,
    pub mean: f64,
    pub stderr: f64,
    pub used: u64,
    pub overflow: u64,
    /// `stderr / mean > 0.5`.
    pub heavy_tail: bool,
}

/// Sample mean of `radius^r` over the non-overflow paths of a histogram.
pub fn histogram_moment(hist: &EmpiricalHistogram, g: Geometry, p: u32, r: f64) -> MomentEstimate {
    let used = hist.total - hist.overflow;
    let (mut s1, mut s2) = (0.0, 0.0);
    for (&j, &c) in &hist.counts {
        let v = g.radius_pow(p, r, j);
        s1 += c as f64 * v;
        s2 += c as f64 * v * v;
    }
    let nf = used as f64;
    let mean = s1 / nf;
    let var = if used > 1 {
        ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0)
    } else {
        f64::INFINITY
    };
    let stderr = (var / nf).sqrt();
    MomentEstimate {
        n: hist.n,
        t: hist.t,
        r,
        mean,
        stderr,
        used,
        overflow: hist.overflow,
        heavy_tail: stderr > 0.5 * mean,
    }
}

/// Coordinate-wise shell histograms of a two-dimensional run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentHistograms {
    pub n: u64,
    pub coords: [EmpiricalHistogram; 2],
}

/// Largest `K` with `p^K < 2^127`.
pub fn digit_capacity(p: u32) -> u32 {
    let limit = 1u128 << 127;
    let mut k = 0;
    let mut v: u128 = 1;
    while let Some(next) = v.checked_mul(p as u128) {
        if next >= limit {
            break;
        }
        v = next;
        k += 1;
    }
    k
}

/// Integer digits of a coordinate: `x p^K mod p^K`, so a point of norm `p^e`
/// has valuation `K - e`.
struct DigitRing {
    p: u32,
    k: u32,
    pows: Vec<u128>,
}

impl DigitRing {
    fn new(p: u32) -> Self {
        let k = digit_capacity(p);
        let mut pows = Vec::with_capacity(k as usize + 1);
        let mut v: u128 = 1;
        for i in 0..=k {
            pows.push(v);
            if i < k {
                v *= p as u128;
            }
        }
        Self { p, k, pows }
    }

    fn modulus(&self) -> u128 {
        self.pows[self.k as usize]
    }

    fn add(&self, a: u128, b: u128) -> u128 {
        let s = a + b;
        if s >= self.modulus() {
            s - self.modulus()
        } else {
            s
        }
    }

    fn exponent(&self, x: u128) -> Option<i64> {
        if x == 0 {
            return None;
        }
        let v = if self.p == 2 {
            x.trailing_zeros()
        } else {
            let (mut x, mut v) = (x, 0);
            let p = self.p as u128;
            while x % p == 0 {
                x /= p;
                v += 1;
            }
            v
        };
        Some(self.k as i64 - v as i64)
    }

    /// `p^m x` as an element of `Q_p`, where `x = a p^-K`.
    fn embed(&self, a: u128, m: u32) -> PAdic {
        let mut digits = Vec::with_capacity(self.k as usize);
        let (mut a, p) = (a, self.p as u128);
        while a > 0 {
            digits.push((a % p) as u32);
            a /= p;
        }
        PAdic::new(
            self.p,
            m as i64 - self.k as i64,
            &digits,
            m as i64 + DEFAULT_PRECISION,
        )
        .expect("digits below p")
    }

    fn ball<R: Rng + ?Sized>(&self, e: i64, rng: &mut R) -> u128 {
        if e <= 0 {
            return 0;
        }
        let e = e as usize;
        self.pows[self.k as usize - e] * rng.random_range(0..self.pows[e])
    }

    fn shell<R: Rng + ?Sized>(&self, e: i64, rng: &mut R) -> u128 {
        let e = e as usize;
        let lead = rng.random_range(1..self.p) as u128;
        let rest = rng.random_range(0..self.pows[e - 1]);
        self.pows[self.k as usize - e] * (lead + self.p as u128 * rest)
    }

    /// Uniform point on the primitive shell of ladder position `j >= 1`.
    fn step<R: Rng + ?Sized>(&self, g: Geometry, j: i64, rng: &mut R) -> [u128; 2] {
        let fine = |j: i64, rng: &mut R| {
            let k = j.div_euclid(2);
            if j.rem_euclid(2) == 1 {
                [self.ball(k, rng), self.shell(k + 1, rng)]
            } else {
                [self.shell(k, rng), self.ball(k, rng)]
            }
        };
        match g {
            Geometry::OneDim => [self.shell(j, rng), 0],
            Geometry::Fine { .. } => fine(j, rng),
            Geometry::Coarse => {
                let odd = rng.random_range(0..self.p + 1) == 0;
                fine(if odd { 2 * j - 1 } else { 2 * j }, rng)
            }
        }
    }
}

/// Per-block tallies: one ladder histogram per recorded step count, and
/// optionally two coordinate histograms.
#[derive(Clone)]
struct Tally {
    ladder: Vec<EmpiricalHistogram>,
    coords: Option<Vec<[EmpiricalHistogram; 2]>>,
}

impl Tally {
    fn new(kind: ShellKind, steps: &[u64], components: bool) -> Self {
        let ladder = steps
            .iter()
            .map(|&n| EmpiricalHistogram::new(kind, n))
            .collect();
        let coords = components.then(|| {
            steps
                .iter()
                .map(|&n| {
                    [
                        EmpiricalHistogram::new(ShellKind::OneDim, n),
                        EmpiricalHistogram::new(ShellKind::OneDim, n),
                    ]
                })
                .collect()
        });
        Self { ladder, coords }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.ladder.iter_mut().zip(&other.ladder) {
            a.merge(b);
        }
        if let (Some(a), Some(b)) = (self.coords.as_mut(), other.coords.as_ref()) {
            for (x, y) in a.iter_mut().zip(b) {
                x[0].merge(&y[0]);
                x[1].merge(&y[1]);
            }
        }
        self
    }
}

fn kind_of(g: Geometry) -> ShellKind {
    match g {
        Geometry::OneDim => ShellKind::OneDim,
        Geometry::Coarse => ShellKind::Coarse2D,
        Geometry::Fine { .. } => ShellKind::Fine2D,
    }
}

fn digits_block(cfg: &SimConfig, cap: i64, paths: u64, rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let law = &cfg.law;
    let g = law.geometry();
    let ring = DigitRing::new(law.p());
    for _ in 0..paths {
        let mut x = [0u128; 2];
        let mut done = 0u64;
        let mut overflowed = false;
        for (slot, &n) in cfg.steps.iter().enumerate() {
            if !overflowed {
                while done < n {
                    done += 1;
                    let Some(j) = law.sample_ladder(rng) else {
                        continue;
                    };
                    if j > cap {
                        overflowed = true;
                        break;
                    }
                    let s = ring.step(g, j, rng);
                    x = [ring.add(x[0], s[0]), ring.add(x[1], s[1])];
                }
            }
            if overflowed {
                tally.ladder[slot].record_overflow();
                if let Some(c) = tally.coords.as_mut() {
                    c[slot][0].record_overflow();
                    c[slot][1].record_overflow();
                }
                continue;
            }
            let e = [ring.exponent(x[0]), ring.exponent(x[1])];
            tally.ladder[slot].record(g.ladder_of_exponents(&e[..g.dim()]));
            if let Some(c) = tally.coords.as_mut() {
                c[slot][0].record(e[0]);
                c[slot][1].record(e[1]);
            }
        }
    }
}

/// Ladder position of `S_n`, or `Err(())` if some step exceeds `cap`.
fn shells_sample<R: Rng + ?Sized>(
    law: &WalkLaw,
    n: u64,
    cap: i64,
    rng: &mut R,
) -> std::result::Result<Option<i64>, ()> {
    if n == 0 {
        return Ok(None);
    }
    let g = law.geometry();
    let p = law.p();
    // max step ladder <= j  iff  tail(j + 1) <= w
    let v: f64 = 1.0 - rng.random::<f64>();
    let w = -(v.ln() / n as f64).exp_m1();
    if law.tail(cap + 1) > w {
        return Err(());
    }
    if law.atom() > 0.0 && law.tail(1) <= w {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0i64, cap);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if law.tail(mid + 1) <= w {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let top = hi;

    // number of steps at `top`, given that it is the maximum
    let below = 1.0 - law.tail(top + 1);
    let pi = (law.q(top) / below).min(1.0);
    let first = if pi >= 1.0 {
        1
    } else {
        let l = (-pi).ln_1p();
        let all = -(n as f64 * l).exp_m1();
        let u: f64 = rng.random();
        ((-u * all).ln_1p() / l).ceil().clamp(1.0, n as f64) as u64
    };
    let rest = n - first;
    let extra = if pi >= 1.0 {
        rest
    } else if rest == 0 {
        0
    } else {
        Binomial::new(rest, pi).expect("valid binomial").sample(rng)
    };
    let c = 1 + extra;

    // leading digits live in (Z/p)^width
    let width = if g == Geometry::Coarse { 2 } else { 1 };
    let mut sum = [0u32; 2];
    for _ in 0..c {
        let d = rng.random_range(1..p.pow(width));
        sum[0] = (sum[0] + d % p) % p;
        sum[1] = (sum[1] + d / p) % p;
    }
    if sum != [0, 0] {
        return Ok(Some(top));
    }
    let frac = g.shell_fraction(p);
    let mut i = top - 1;
    while i > 0 {
        if rng.random::<f64>() < frac {
            return Ok(Some(i));
        }
        i -= 1;
    }
    Ok(None)
}

fn shells_block(cfg: &SimConfig, cap: i64, paths: u64, rng: &mut ChaCha8Rng, tally: &mut Tally) {
    for _ in 0..paths {
        for (slot, &n) in cfg.steps.iter().enumerate() {
            match shells_sample(&cfg.law, n, cap, rng) {
                Ok(j) => tally.ladder[slot].record(j),
                Err(()) => tally.ladder[slot].record_overflow(),
            }
        }
    }
}

fn run(cfg: &SimConfig, engine: Engine, components: bool) -> Result<Tally> {
    cfg.validate()?;
    let cap = cfg.effective_cap();
    let kind = kind_of(cfg.law.geometry());
    let blocks = cfg.n_paths.div_ceil(BLOCK);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let empty = Tally::new(kind, &cfg.steps, components);
    let tally = pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(b);
                let paths = BLOCK.min(cfg.n_paths - b * BLOCK);
                let mut t = empty.clone();
                match engine {
                    Engine::Digits => digits_block(cfg, cap, paths, &mut rng, &mut t),
                    Engine::Shells => shells_block(cfg, cap, paths, &mut rng, &mut t),
                }
                t
            })
            .reduce(|| empty.clone(), Tally::merge)
    });
    Ok(tally)
}

/// Shell histograms of `S_n` at every recorded `n`.
pub fn simulate_primitive(cfg: &SimConfig) -> Result<Vec<EmpiricalHistogram>> {
    Ok(run(cfg, cfg.engine, false)?.ladder)
}

/// Coordinate-wise shell histograms of a two-dimensional walk, from full digits.
pub fn simulate_components(cfg: &SimConfig) -> Result<Vec<ComponentHistograms>> {
    if cfg.law.dim() != 2 {
        return Err(Error::NeedsTwoDimensions("component histograms"));
    }
    let tally = run(cfg, Engine::Digits, true)?;
    Ok(tally
        .coords
        .expect("requested")
        .into_iter()
        .zip(&cfg.steps)
        .map(|(coords, &n)| ComponentHistograms { n, coords })
        .collect())
}

/// Histograms of `Y_t`, keyed by ladder positions of `Q_p^d`. `Y_t` is
/// `p^m S_n` with `n = floor(lambda t)`, so its ladder is that of `S_n`
/// lowered by `m` levels. `cfg.steps` is ignored.
pub fn simulate_embedded(
    cfg: &SimConfig,
    scheme: &EmbeddingScheme,
    t_grid: &[f64],
) -> Result<Vec<EmpiricalHistogram>> {
    if scheme.p != cfg.law.p() || scheme.b != cfg.law.b() {
        return Err(invalid("scheme", "does not match the law"));
    }
    crate::kernels::check_times(t_grid)?;
    if t_grid.first().is_some_and(|&t| t <= 0.0) {
        return Err(invalid("t", "times must be positive"));
    }
    let steps: Vec<u64> = t_grid.iter().map(|&t| scheme.steps_at(t)).collect();
    if steps.windows(2).any(|w| w[1] == w[0]) {
        return Err(invalid("t_grid", "two times share a lattice step"));
    }
    let mut sub = cfg.clone();
    sub.steps = steps;
    let shift = scheme.m as i64 * cfg.law.geometry().steps_per_level();
    Ok(simulate_primitive(&sub)?
        .into_iter()
        .zip(t_grid)
        .map(|(h, &t)| {
            let mut h = h.shifted(shift);
            h.t = Some(t);
            h
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEstimate {
    pub hits: u64,
    pub total: u64,
    pub overflow: u64,
    pub probability: f64,
    pub wilson: (f64, f64),
}

/// Frequency of `Y_(t_i) in U_i` for every `i`, from full-digit paths.
/// `cfg.steps` and `cfg.engine` are ignored.
pub fn simulate_history(
    cfg: &SimConfig,
    scheme: &EmbeddingScheme,
    history: &[(f64, Ball)],
) -> Result<HistoryEstimate> {
    let times: Vec<f64> = history.iter().map(|(t, _)| *t).collect();
    crate::kernels::check_times(&times)?;
    let g = cfg.law.geometry();
    for (_, ball) in history {
        if ball.center.len() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: g.dim(),
                got: ball.center.len(),
            });
        }
    }
    let steps: Vec<u64> = times.iter().map(|&t| scheme.steps_at(t)).collect();
    let mut sub = cfg.clone();
    sub.steps = steps.clone();
    sub.steps.dedup();
    sub.validate()?;
    let cap = sub.effective_cap();
    let blocks = sub.n_paths.div_ceil(BLOCK);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sub.workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    let law = &sub.law;
    let m = scheme.m;
    let ring = DigitRing::new(law.p());
    let inside = |x: &[u128; 2], ball: &Ball| -> bool {
        let e: Vec<Option<i64>> = (0..g.dim())
            .map(|i| {
                let y = ring.embed(x[i], m);
                y.try_sub(&ball.center[i]).ok().and_then(|d| d.log_abs())
            })
            .collect();
        g.ladder_of_exponents(&e).is_none_or(|j| j <= ball.index)
    };
    let (hits, overflow) = pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(sub.seed);
                rng.set_stream(b);
                let paths = BLOCK.min(sub.n_paths - b * BLOCK);
                let (mut hits, mut overflow) = (0u64, 0u64);
                'path: for _ in 0..paths {
                    let mut x = [0u128; 2];
                    let mut done = 0u64;
                    for ((_, ball), &n) in history.iter().zip(&steps) {
                        while done < n {
                            done += 1;
                            if let Some(j) = law.sample_ladder(&mut rng) {
                                if j > cap {
                                    overflow += 1;
                                    continue 'path;
                                }
                                let s = ring.step(g, j, &mut rng);
                                x = [ring.add(x[0], s[0]), ring.add(x[1], s[1])];
                            }
                        }
                        if !inside(&x, ball) {
                            continue 'path;
                        }
                    }
                    hits += 1;
                }
                (hits, overflow)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    });
    Ok(HistoryEstimate {
        hits,
        total: sub.n_paths,
        overflow,
        probability: hits as f64 / sub.n_paths as f64,
        wilson: wilson(hits, sub.n_paths, WILSON_Z),
    })
}

/// Sample moments `E|S_n|^r` at every recorded `n`.
pub fn empirical_moment(cfg: &SimConfig, r: f64) -> Result<Vec<MomentEstimate>> {
    if !(r > 0.0 && r < cfg.law.b()) {
        return Err(invalid("r", format!("{r} is not in (0, b)")));
    }
    let g = cfg.law.geometry();
    Ok(simulate_primitive(cfg)?
        .iter()
        .map(|h| histogram_moment(h, g, cfg.law.p(), r))
        .collect())
}
