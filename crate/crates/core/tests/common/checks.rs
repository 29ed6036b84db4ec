//! Checks shared by the unit tests and the acceptance run. These combine the
//! library's closed forms with the integer oracles in the parent module and
//! panic on the first disagreement.

use super::{brute_char, coord_exp, ladder_of, pow, Truncated};
use padic_walk::montecarlo::EmpiricalHistogram;
use padic_walk::{Geometry, KernelSpec, PAdic, WalkLaw};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sum of shell masses from a ladder where the inner ball is negligible,
/// outward until the remainder is below `1e-16`.
pub fn shell_sum(k: &KernelSpec, t: f64) -> (f64, f64) {
    let g = k.geometry();
    let rho0 = k.heat_kernel_at(t, None);
    let mut lo = 0;
    while g.ball_volume(k.p, lo) * rho0.value > 1e-17 {
        lo -= 1;
    }
    let mut sum = g.ball_volume(k.p, lo) * rho0.value;
    let mut budget = sum + g.ball_volume(k.p, lo) * rho0.tail_bound;
    let ratio = (k.p as f64).powf(-k.b);
    let mut j = lo + 1;
    loop {
        let e = k.heat_kernel_at(t, Some(j));
        let m = g.shell_volume(k.p, j) * e.value;
        sum += m;
        budget += g.shell_volume(k.p, j) * e.tail_bound;
        let next = k.shell_mass(t, j + 1) + k.shell_mass(t, j + 2);
        if j > 0 && next / (1.0 - ratio) < 1e-16 {
            budget += next / (1.0 - ratio);
            return (sum, budget);
        }
        j += 1;
    }
}

/// Grid of cosets of the ball of exponent `-6` inside the ball of exponent
/// `top` in each coordinate, with point `Y p^-top` for residue `Y`.
pub struct CosetGrid {
    g: Geometry,
    p: u32,
    top: u32,
    side: u64,
    cell: i64,
    exps: Vec<Option<i64>>,
}

impl CosetGrid {
    pub fn new(g: Geometry, p: u32, top: u32) -> Self {
        let side = pow(p, top + 6);
        let exps = (0..side).map(|y| coord_exp(y, p, top)).collect();
        let cell = match g {
            Geometry::Fine { .. } => -12,
            _ => -6,
        };
        Self {
            g,
            p,
            top,
            side,
            cell,
            exps,
        }
    }

    pub fn ladder(&self, y: [u64; 2]) -> Option<i64> {
        let e: Vec<Option<i64>> = (0..self.g.dim())
            .map(|c| self.exps[y[c] as usize])
            .collect();
        ladder_of(self.g, &e)
    }

    fn outer(&self) -> i64 {
        match self.g {
            Geometry::Fine { .. } => 2 * self.top as i64,
            _ => self.top as i64,
        }
    }

    /// `(rho_t * rho_s)(x)`, cell by cell.
    pub fn convolve(&self, k: &KernelSpec, t: f64, s: f64, x: [u64; 2]) -> f64 {
        let lo = self.cell - 1;
        let hi = self.outer() + 80;
        let table = |t: f64| -> Vec<f64> {
            (lo..=hi)
                .map(|j| k.heat_kernel_at(t, Some(j)).value)
                .collect()
        };
        let (rt, rs) = (table(t), table(s));
        let at = |tab: &[f64], j: i64| tab[(j - lo) as usize];
        let vol = self.g.ball_volume(self.p, self.cell);
        let jx = self.ladder(x).unwrap();

        let mut sum = at(&rt, jx) * k.ball_mass(s, self.cell).value
            + at(&rs, jx) * k.ball_mass(t, self.cell).value;
        let side = self.side;
        let second = if self.g.dim() == 2 { side } else { 1 };
        for y1 in 0..second {
            for y0 in 0..side {
                let y = [y0, y1];
                if y == x {
                    continue;
                }
                let Some(jy) = self.ladder(y) else { continue };
                let d = [(x[0] + side - y0) % side, (x[1] + side - y1) % side];
                let jd = self.ladder(d).unwrap();
                sum += vol * at(&rt, jd) * at(&rs, jy);
            }
        }
        // outside the grid, |x - y| = |y|
        for j in self.outer() + 1..=hi {
            sum += self.g.shell_volume(self.p, j) * at(&rt, j) * at(&rs, j);
        }
        sum
    }
}

pub fn spatial_semigroup(k: KernelSpec, top: u32, xs: &[[u64; 2]]) {
    let grid = CosetGrid::new(k.geometry(), k.p, top);
    for &x in xs {
        let jx = grid.ladder(x).unwrap();
        for (t, s) in [(0.5, 1.5), (1.0, 1.0)] {
            let conv = grid.convolve(&k, t, s, x);
            let direct = k.heat_kernel_at(t + s, Some(jx)).value;
            assert!(
                (conv - direct).abs() <= 1e-6 * direct.max(1.0),
                "{k:?} x={x:?} (ladder {jx}) t={t} s={s}: {conv} vs {direct}"
            );
        }
    }
}

/// A random `y` of valuation `u`, as residues modulo `p^L` and as p-adics.
pub fn dual_point(
    g: Geometry,
    p: u32,
    u: [u32; 2],
    l: u32,
    rng: &mut ChaCha8Rng,
) -> ([u64; 2], Vec<PAdic>) {
    let mut res = [0u64; 2];
    let mut ys = Vec::new();
    for c in 0..g.dim() {
        let digits: Vec<u32> = (0..l + 8)
            .map(|i| match i.cmp(&u[c]) {
                std::cmp::Ordering::Less => 0,
                std::cmp::Ordering::Equal => rng.random_range(1..p),
                std::cmp::Ordering::Greater => rng.random_range(0..p),
            })
            .collect();
        res[c] = digits[..l as usize]
            .iter()
            .rev()
            .fold(0u64, |acc, &d| acc * p as u64 + d as u64);
        ys.push(PAdic::new(p, 0, &digits, (l + 8) as i64).unwrap());
    }
    (res, ys)
}

pub fn check_char_family(law: WalkLaw, l: u32, seed: u64) -> usize {
    let g = law.geometry();
    let p = law.p();
    let t = Truncated::new(g, p, l);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    for _ in 0..400 {
        let u = [rng.random_range(0..l), rng.random_range(0..l)];
        let (res, y) = dual_point(g, p, u, l, &mut rng);
        let Some(brute) = brute_char(&t, &law, res) else {
            continue;
        };
        let closed = law.char_fn(&y).unwrap();
        assert!(
            (brute - closed).abs() < 1e-9,
            "{law:?} u={u:?}: {brute} vs {closed}"
        );
        checked += 1;
        if checked == 60 {
            break;
        }
    }
    checked
}

pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Cells expecting at least ten hits are checked one by one, the rest as one
/// pooled cell.
pub fn assert_matches(h: &EmpiricalHistogram, prob: impl Fn(Option<i64>) -> f64, slack: f64) {
    let top = h.counts.keys().max().copied().unwrap_or(0) + 2;
    let bottom = h.counts.keys().min().copied().unwrap_or(0).min(0);
    let cells = std::iter::once(None).chain((bottom..=top).map(Some));
    let (mut seen_q, mut seen_count, mut seen_slack) = (0.0, 0, 0.0);
    for j in cells {
        let q = prob(j);
        if q * (h.total as f64) < 10.0 {
            continue;
        }
        seen_q += q;
        seen_count += h.count(j);
        seen_slack += slack;
        assert!(
            h.covers(j, q, slack),
            "n={} cell {j:?}: freq {} vs {q}, interval {:?}",
            h.n,
            h.frequency(j),
            h.wilson(j)
        );
    }
    let rest = h.total - h.overflow - seen_count;
    let (lo, hi) = padic_walk::montecarlo::wilson(rest, h.total, 4.0);
    let q = 1.0 - seen_q;
    assert!(
        lo - seen_slack - 1e-12 <= q && q <= hi + seen_slack + 1e-12,
        "n={} pooled rare cells: {rest} hits vs {q}",
        h.n
    );
}

pub fn nstep_prob(law: &WalkLaw, n: u64) -> impl Fn(Option<i64>) -> f64 + '_ {
    move |j| match j {
        None => law.nstep_shell_mass(n, 0),
        Some(j) if j <= 0 => 0.0,
        Some(j) => law.nstep_shell_mass(n, j),
    }
}
