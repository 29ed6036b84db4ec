//! Oracles that work with plain integers on truncated groups. A point of
//! `(p^-L Z_p / Z_p)^d` is a tuple of residues `a_i mod p^L` standing for
//! `a_i p^-L`. Nothing here calls the library's series, characters or norms.
#![allow(dead_code)]

pub mod checks;

use padic_walk::{Geometry, WalkLaw};

pub fn pow(p: u32, e: u32) -> u64 {
    (p as u64).pow(e)
}

/// Norm exponent of `a p^-L` in `Q_p / Z_p`; `None` for zero.
pub fn coord_exp(a: u64, p: u32, l: u32) -> Option<i64> {
    if a == 0 {
        return None;
    }
    let (mut a, mut v) = (a, 0);
    while a % p as u64 == 0 {
        a /= p as u64;
        v += 1;
    }
    Some(l as i64 - v)
}

/// Least ladder index whose ball contains a point with coordinate exponents `e`.
pub fn ladder_of(g: Geometry, e: &[Option<i64>]) -> Option<i64> {
    let fits = |e: Option<i64>, allow: i64| e.is_none_or(|e| e <= allow);
    match g {
        Geometry::OneDim => e[0],
        Geometry::Coarse => match (e[0], e[1]) {
            (None, None) => None,
            (a, b) => Some(a.into_iter().chain(b).max().unwrap()),
        },
        Geometry::Fine { .. } => {
            if e[0].is_none() && e[1].is_none() {
                return None;
            }
            // fine ball 2k + eps is B_k x B_(k + eps)
            let lo = e.iter().flatten().min().unwrap() * 2 - 4;
            (lo..).find(|&j| {
                let (k, eps) = (j.div_euclid(2), j.rem_euclid(2));
                fits(e[0], k) && fits(e[1], k + eps)
            })
        }
    }
}

/// The whole truncated group, as flat indices `a_0 + p^L a_1`.
pub struct Truncated {
    pub g: Geometry,
    pub p: u32,
    pub l: u32,
    pub dim: usize,
    pub size: usize,
    pub ladder: Vec<Option<i64>>,
}

impl Truncated {
    pub fn new(g: Geometry, p: u32, l: u32) -> Self {
        let dim = g.dim();
        let side = pow(p, l) as usize;
        let size = side.pow(dim as u32);
        let ladder = (0..size)
            .map(|i| {
                let e: Vec<Option<i64>> = (0..dim)
                    .map(|c| coord_exp(((i / side.pow(c as u32)) % side) as u64, p, l))
                    .collect();
                ladder_of(g, &e)
            })
            .collect();
        Self {
            g,
            p,
            l,
            dim,
            size,
            ladder,
        }
    }

    pub fn side(&self) -> u64 {
        pow(self.p, self.l)
    }

    pub fn coords(&self, i: usize) -> [u64; 2] {
        let side = self.side() as usize;
        [(i % side) as u64, ((i / side) % side) as u64]
    }

    pub fn index(&self, a: [u64; 2]) -> usize {
        let side = self.side();
        (a[0] % side + side * (a[1] % side)) as usize
    }

    pub fn add(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.coords(i), self.coords(j));
        self.index([a[0] + b[0], a[1] + b[1]])
    }

    pub fn top(&self) -> i64 {
        self.ladder.iter().flatten().max().copied().unwrap_or(0)
    }

    /// Number of points at each ladder position `0..=top` (0 is the origin).
    pub fn shell_counts(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.top() as usize + 1];
        for j in &self.ladder {
            c[j.unwrap_or(0) as usize] += 1.0;
        }
        c
    }

    /// The one-step law restricted to this group, as point masses.
    pub fn point_law(&self, law: &WalkLaw) -> Vec<f64> {
        let counts = self.shell_counts();
        self.ladder
            .iter()
            .map(|j| {
                let j = j.unwrap_or(0);
                law.shell_prob(j).unwrap() / counts[j as usize]
            })
            .collect()
    }

    /// `n`-fold convolution of point masses.
    pub fn convolve_power(&self, mu: &[f64], n: u32) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        out[0] = 1.0;
        for _ in 0..n {
            let mut next = vec![0.0; self.size];
            for (i, &a) in out.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, &b) in mu.iter().enumerate() {
                    if b != 0.0 {
                        next[self.add(i, j)] += a * b;
                    }
                }
            }
            out = next;
        }
        out
    }

    /// Masses per ladder position.
    pub fn shell_masses(&self, point: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.top() as usize + 1];
        for (i, &v) in point.iter().enumerate() {
            m[self.ladder[i].unwrap_or(0) as usize] += v;
        }
        m
    }
}

/// Digits of the quotient between consecutive ladder balls.
fn quotient_size(g: Geometry, p: u32) -> f64 {
    match g {
        Geometry::Coarse => (p * p) as f64,
        _ => p as f64,
    }
}

/// Convolution of two radial laws given by their ladder masses `0..=top`.
/// Two points of one shell cancel their leading digit with probability
/// `1/(P-1)`, and the sum is then uniform on the next ball down.
pub fn radial_convolve(g: Geometry, p: u32, a: &[f64], c: &[f64]) -> Vec<f64> {
    let top = a.len();
    let q = quotient_size(g, p);
    // volume of ball k relative to ball i - 1
    let rel = |k: usize, i: usize| q.powi(k as i32 - i as i32 + 1);
    let mut out = vec![0.0; top];
    for i in 0..top {
        for j in 0..top {
            let w = a[i] * c[j];
            if w == 0.0 {
                continue;
            }
            if i != j || i == 0 {
                out[i.max(j)] += w;
                continue;
            }
            out[i] += w * (q - 2.0) / (q - 1.0);
            let cancel = w / (q - 1.0);
            out[0] += cancel * rel(0, i);
            for (k, o) in out.iter_mut().enumerate().take(i).skip(1) {
                *o += cancel * (rel(k, i) - rel(k - 1, i));
            }
        }
    }
    out
}

/// Ladder masses of `S_n` for the law cut at ladder `top`.
pub fn radial_power(law: &WalkLaw, n: u32, top: usize) -> Vec<f64> {
    let g = law.geometry();
    let mu: Vec<f64> = (0..=top as i64)
        .map(|j| law.shell_prob(j).unwrap())
        .collect();
    let mut out = vec![0.0; top + 1];
    out[0] = 1.0;
    for _ in 0..n {
        out = radial_convolve(g, law.p(), &out, &mu);
    }
    out
}

/// Number of points at ladder position `j >= 1`.
pub fn shell_count(g: Geometry, p: u32, j: i64) -> f64 {
    let q = quotient_size(g, p);
    q.powi(j as i32) - q.powi(j as i32 - 1)
}

/// `E chi(<x, y>)` over the one-step law, summed point by point on the
/// truncated group, with `y` given by its residues modulo `p^L`. Requires the
/// character to be nontrivial on the whole group, so every shell beyond it
/// averages to zero; returns `None` otherwise.
pub fn brute_char(t: &Truncated, law: &WalkLaw, y: [u64; 2]) -> Option<f64> {
    let counts = t.shell_counts();
    let side = t.side();
    let mut per_shell = vec![(0.0f64, 0.0f64); counts.len()];
    for i in 0..t.size {
        let a = t.coords(i);
        let mut s = 0u128;
        for c in 0..t.dim {
            s += a[c] as u128 * y[c] as u128;
        }
        let phase = (s % side as u128) as f64 / side as f64;
        let (im, re) = (2.0 * std::f64::consts::PI * phase).sin_cos();
        let j = t.ladder[i].unwrap_or(0) as usize;
        per_shell[j].0 += re;
        per_shell[j].1 += im;
    }
    let whole: f64 = per_shell.iter().map(|s| s.0).sum();
    if whole.abs() > 1e-6 {
        return None;
    }
    let mut total = 0.0;
    for (j, (re, im)) in per_shell.iter().enumerate() {
        assert!(im.abs() < 1e-6 * counts[j].max(1.0), "radial sums are real");
        total += law.shell_prob(j as i64).unwrap() * re / counts[j];
    }
    Some(total)
}

/// Coordinate marginal `P(coordinate c has exponent k)` (k = 0 for zero) of
/// the one-step law, summed over cells of fixed coordinate exponents up to `e_max`.
pub fn joint_marginal(law: &WalkLaw, c: usize, k: i64, e_max: i64) -> f64 {
    let g = law.geometry();
    let p = law.p() as f64;
    let size = |e: Option<i64>| e.map_or(1.0, |e| p.powi(e as i32) - p.powi(e as i32 - 1));
    let exps: Vec<Option<i64>> = std::iter::once(None).chain((1..=e_max).map(Some)).collect();
    let mut counts = std::collections::HashMap::<i64, f64>::new();
    let mut cells = Vec::new();
    for &e1 in &exps {
        for &e2 in &exps {
            let Some(j) = ladder_of(g, &[e1, e2]) else {
                continue;
            };
            let n = size(e1) * size(e2);
            *counts.entry(j).or_insert(0.0) += n;
            cells.push((j, [e1, e2], n));
        }
    }
    // only ladder positions whose shell is complete under the cutoff
    let complete = |j: i64| match g {
        Geometry::Fine { .. } => j < 2 * e_max,
        _ => j <= e_max,
    };
    let mut total = 0.0;
    for (j, e, n) in cells {
        if !complete(j) || e[c - 1].unwrap_or(0) != k {
            continue;
        }
        total += law.shell_prob(j).unwrap() * n / counts[&j];
    }
    total
}
