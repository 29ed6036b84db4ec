//! One line per acceptance criterion, with runtime against its budget.
//! Exits nonzero when any criterion fails.

mod common;

use common::checks::{assert_matches, check_char_family, fit_slope, shell_sum, spatial_semigroup};
use common::{joint_marginal, pow, radial_power, shell_count, Truncated};
use padic_walk::criticality::{p0_max, IDENTITY_TOL};
use padic_walk::montecarlo::{empirical_moment, simulate_components, SimConfig};
use padic_walk::{
    component_marginal, default_h_grid, diffusion_report, endpoint_scan, sigma_components, Ball,
    EmbeddingScheme, Family, KernelSpec, PreLimitLaw, WalkLaw, WalkLaw1D,
};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

fn one_dim(p: u32, b: f64, p0: f64) -> WalkLaw {
    WalkLaw::OneDim(WalkLaw1D::new(p, b, p0).unwrap())
}

fn law_grid() -> Vec<WalkLaw> {
    let mut laws = Vec::new();
    for p in [2, 3, 5] {
        for b in [0.5, 1.0, 2.0] {
            for p0 in [0.0, 0.3, 0.7] {
                laws.push(one_dim(p, b, p0));
            }
            laws.push(WalkLaw::two_dim(p, b, 1.0).unwrap());
            for h in [0.2, 0.5, 0.8] {
                laws.push(WalkLaw::two_dim(p, b, h).unwrap());
            }
        }
    }
    laws
}

fn scaling_families() -> Vec<WalkLaw> {
    vec![
        one_dim(2, 1.0, 0.3),
        one_dim(3, 0.5, 0.0),
        WalkLaw::two_dim(3, 1.0, 1.0).unwrap(),
        WalkLaw::two_dim(2, 1.0, 0.5).unwrap(),
        WalkLaw::two_dim(2, 2.0, 0.8).unwrap(),
    ]
}

fn prelimit(law: WalkLaw, m: u32) -> PreLimitLaw {
    PreLimitLaw::new(law, EmbeddingScheme::new(law.p(), m, 1.0, law.b()).unwrap()).unwrap()
}

fn normalization() -> String {
    let laws = law_grid();
    let worst = laws
        .iter()
        .map(|l| (l.total_mass() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-13, "max |mass - 1| = {worst:e}");
    format!("{} laws, max |mass - 1| = {worst:.1e}", laws.len())
}

fn fourier_oracle() -> String {
    let cases = [
        (one_dim(2, 1.0, 0.3), 10),
        (one_dim(3, 0.5, 0.0), 6),
        (one_dim(5, 2.0, 0.7), 5),
        (WalkLaw::two_dim(2, 1.0, 1.0).unwrap(), 6),
        (WalkLaw::two_dim(3, 0.5, 1.0).unwrap(), 3),
        (WalkLaw::two_dim(2, 1.0, 0.5).unwrap(), 6),
        (WalkLaw::two_dim(3, 2.0, 0.2).unwrap(), 3),
    ];
    let mut fewest = usize::MAX;
    for (i, (law, l)) in cases.into_iter().enumerate() {
        let n = check_char_family(law, l, i as u64);
        assert!(n >= 50, "{law:?}: only {n} dual points");
        fewest = fewest.min(n);
    }
    format!(
        "{} families, >= {fewest} dual points each, tol 1e-9",
        cases.len()
    )
}

fn convolution_oracle() -> String {
    let mut worst: f64 = 0.0;
    // point convolution on the truncated group against the closed form, for
    // tails light enough that steps outside the group cannot matter
    let direct = [
        (one_dim(2, 2.0, 0.3), 12),
        (one_dim(5, 3.0, 0.0), 5),
        (WalkLaw::two_dim(3, 3.0, 1.0).unwrap(), 4),
        (WalkLaw::two_dim(2, 4.0, 0.5).unwrap(), 5),
    ];
    for (law, l) in direct {
        let t = Truncated::new(law.geometry(), law.p(), l);
        let mu = t.point_law(&law);
        let outside = law.tail(t.top() + 1);
        for n in 1..=5u32 {
            let conv = t.convolve_power(&mu, n);
            let cut = (n * n) as f64 * outside * outside;
            assert!(cut < 1e-10, "{law:?}: truncation {cut:e}");
            let masses = t.shell_masses(&conv);
            for (j, m) in masses.iter().enumerate() {
                let count = if j == 0 {
                    1.0
                } else {
                    shell_count(law.geometry(), law.p(), j as i64)
                };
                let closed = law
                    .nstep_density(n as u64, (j > 0).then_some(j as i64))
                    .value;
                let d = (m / count - closed).abs();
                assert!(d < 1e-9, "{law:?} n={n} j={j}: {} vs {closed}", m / count);
                worst = worst.max(d);
            }
        }
    }
    // radial convolution, itself checked against point convolution, on the spec grid
    for law in law_grid() {
        let t = Truncated::new(law.geometry(), law.p(), if law.p() == 2 { 3 } else { 2 });
        let mu = t.point_law(&law);
        for n in 1..=5 {
            let brute = t.shell_masses(&t.convolve_power(&mu, n));
            let radial = radial_power(&law, n, t.top() as usize);
            for (a, b) in brute.iter().zip(&radial) {
                assert!(
                    (a - b).abs() < 1e-12,
                    "{law:?} n={n}: radial {b} vs point {a}"
                );
            }
        }
        let top = 300;
        for n in 1..=5u32 {
            let masses = radial_power(&law, n, top);
            assert!(n as f64 * law.tail(top as i64 + 1) < 1e-12);
            for j in 0..=40i64 {
                let count = if j == 0 {
                    1.0
                } else {
                    shell_count(law.geometry(), law.p(), j)
                };
                let closed = law.nstep_density(n as u64, (j > 0).then_some(j)).value;
                let d = (masses[j as usize] / count - closed).abs();
                assert!(d < 1e-9, "{law:?} n={n} j={j}");
                worst = worst.max(d);
            }
        }
    }
    format!("n <= 5, max density error {worst:.1e}")
}

fn kernel_specs() -> Vec<KernelSpec> {
    let mut out = Vec::new();
    for p in [2, 3, 5] {
        for b in [0.5, 1.0, 2.0] {
            for sigma in [0.3, 1.0] {
                out.push(KernelSpec::new(Family::OneDim, p, b, None, sigma).unwrap());
                out.push(KernelSpec::new(Family::Iso2D, p, b, None, sigma).unwrap());
                for h in [0.2, 0.5, 0.9] {
                    out.push(KernelSpec::new(Family::Aniso2D, p, b, Some(h), sigma).unwrap());
                }
            }
        }
    }
    out
}

fn kernel_mass_and_semigroup() -> String {
    let specs = kernel_specs();
    let mut worst: f64 = 0.0;
    for k in &specs {
        for t in [0.01, 1.0, 50.0] {
            let (mass, budget) = shell_sum(k, t);
            assert!(
                (mass - 1.0).abs() <= budget + 2.0 * k.tolerance,
                "{k:?} t={t}: mass {mass}"
            );
            worst = worst.max((mass - 1.0).abs());
        }
        for u in -8..=8 {
            for (t, s) in [(0.25, 0.5), (1.0, 3.0), (0.01, 7.0)] {
                let lhs = k.limit_char_at(t, Some(u)) * k.limit_char_at(s, Some(u));
                let rhs = k.limit_char_at(t + s, Some(u));
                let x = k.sigma * (t + s) * k.multiplier(u);
                assert!(
                    (lhs - rhs).abs() <= 8.0 * f64::EPSILON * (1.0 + x) * rhs,
                    "{k:?} u={u}"
                );
            }
        }
    }
    for (p, top) in [(2, 8), (3, 4)] {
        let xs: Vec<[u64; 2]> = (0..top + 6)
            .map(|v| [pow(p, v) * (p as u64 - 1), 0])
            .collect();
        for b in [0.7, 1.5] {
            spatial_semigroup(
                KernelSpec::new(Family::OneDim, p, b, None, 1.0).unwrap(),
                top,
                &xs,
            );
        }
    }
    for (p, top) in [(2, 3), (3, 0)] {
        let n = top + 6;
        let xs: Vec<[u64; 2]> = (0..n)
            .step_by(2)
            .flat_map(|v| {
                [
                    [pow(p, v), 0],
                    [pow(p, v), pow(p, n - 1)],
                    [0, pow(p, v)],
                    [pow(p, n - 1), pow(p, v)],
                ]
            })
            .collect();
        spatial_semigroup(
            KernelSpec::new(Family::Iso2D, p, 1.0, None, 1.0).unwrap(),
            top,
            &xs,
        );
        spatial_semigroup(
            KernelSpec::new(Family::Aniso2D, p, 1.0, Some(0.4), 1.0).unwrap(),
            top,
            &xs,
        );
    }
    format!(
        "{} kernels, max |mass - 1| = {worst:.1e}; semigroup at m = 6 within 1e-6",
        specs.len()
    )
}

fn moment_scaling() -> String {
    let mut out = Vec::new();
    for (law, r) in [
        (one_dim(2, 1.0, 0.0), 0.5),
        (WalkLaw::two_dim(3, 1.5, 0.5).unwrap(), 0.6),
    ] {
        let cfg = SimConfig::new(law, 1_000_000, vec![10, 1000], 23);
        for est in empirical_moment(&cfg, r).unwrap() {
            let exact = law.nstep_moment(est.n, r).unwrap().value;
            let z = (est.mean - exact).abs() / est.stderr;
            assert!(
                z <= 4.0,
                "{law:?} n={}: {} +- {} vs {exact}",
                est.n,
                est.mean,
                est.stderr
            );
        }
    }
    for (law, r) in [
        (one_dim(2, 1.0, 0.0), 0.5),
        (one_dim(3, 2.0, 0.3), 1.0),
        (WalkLaw::two_dim(2, 1.0, 1.0).unwrap(), 0.5),
        (WalkLaw::two_dim(2, 1.5, 0.5).unwrap(), 0.9),
    ] {
        let pts: Vec<(f64, f64)> = [10u64, 100, 1000, 10_000]
            .iter()
            .map(|&n| ((n as f64).ln(), law.nstep_moment(n, r).unwrap().value.ln()))
            .collect();
        let slope = fit_slope(&pts);
        assert!(
            (slope - r / law.b()).abs() < 0.05,
            "{law:?}: slope {slope} vs {}",
            r / law.b()
        );
        out.push(format!("{:.3}/{:.3}", slope, r / law.b()));
    }
    format!(
        "4 empirical moments within 4 stderr; slopes {}",
        out.join(" ")
    )
}

fn convergence_diagnostics() -> String {
    let mut rows = 0;
    for law in scaling_families() {
        for t in [0.25, 1.0, 4.0] {
            let d: Vec<f64> = [2, 4, 6, 8]
                .iter()
                .map(|&m| prelimit(law, m).l1_dual(t).value)
                .collect();
            assert!(d.windows(2).all(|w| w[1] < w[0]), "{law:?} t={t}: {d:?}");
            rows += 1;
        }
    }
    format!("{rows} (family, t) rows strictly decreasing over m = 2, 4, 6, 8")
}

fn component_marginals() -> String {
    let mut worst: f64 = 0.0;
    for p in [2, 3, 5] {
        for b in [0.5, 1.0, 2.0] {
            let pf = p as f64;
            let closed =
                pf * (pf - 1.0) * (pf.powf(b) - 1.0) / ((pf * pf - 1.0) * (pf.powf(b + 1.0) - 1.0));
            assert!((p0_max(p, b).unwrap() - closed).abs() < 1e-14);
            for h in [0.2, 0.7, 1.0] {
                let law = WalkLaw::two_dim(p, b, h).unwrap();
                for c in [1, 2] {
                    for k in 0..=4 {
                        let d = (joint_marginal(&law, c, k, 100)
                            - component_marginal(&law, c, k).unwrap())
                        .abs();
                        assert!(d < 1e-10, "{law:?} c={c} k={k}: {d:e}");
                        worst = worst.max(d);
                    }
                }
            }
        }
    }
    for law in [
        WalkLaw::two_dim(2, 1.0, 0.5).unwrap(),
        WalkLaw::two_dim(3, 2.0, 0.2).unwrap(),
    ] {
        let comps = simulate_components(&SimConfig::new(law, 1_000_000, vec![1], 13)).unwrap();
        for (c, h) in comps[0].coords.iter().enumerate() {
            let prob = |k: Option<i64>| match k {
                None => component_marginal(&law, c + 1, 0).unwrap(),
                Some(k) if k <= 0 => 0.0,
                Some(k) => component_marginal(&law, c + 1, k).unwrap(),
            };
            assert_matches(h, prob, 0.0);
        }
    }
    format!("closed forms within {worst:.1e}; histograms at N = 1e6 within 4 sigma")
}

fn criticality_headline() -> String {
    let r = diffusion_report(1.0, 2, 1.0, &default_h_grid()).unwrap();
    let expect = [
        (r.sigma_max, 7.0 / 6.0),
        (r.gaps.left_limit_1, 1.0),
        (r.gaps.left_limit_2, 1.25),
        (r.gaps.gap_1, 1.0 / 6.0),
        (r.gaps.gap_2, 1.0 / 12.0),
    ];
    for (got, want) in expect {
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }
    for c in r.checks() {
        assert!(c.passed, "{c}");
    }
    let s = sigma_components(1.0, 2, 1.0, 0.5).unwrap();
    let convex = s.sigma_1 / 3.0 + 2.0 * s.sigma_2 / 3.0;
    assert!((convex - s.sigma_max).abs() < IDENTITY_TOL);
    let rows = endpoint_scan(2, 1.0, 1.0, &default_h_grid(), 6).unwrap();
    let near: Vec<_> = rows.iter().filter(|r| r.h == 1.0 - 1e-6).collect();
    assert!(!near.is_empty());
    let diff = near.iter().map(|r| r.shell_diff).fold(0.0, f64::max);
    assert!(diff <= 1e-5, "shell difference {diff:e} at h = 1 - 1e-6");
    let jump = near
        .iter()
        .map(|r| (r.sigma_1 - r.sigma_max).abs())
        .fold(f64::INFINITY, f64::min);
    format!("sigma(max) = 7/6, limits 1 and 5/4, gaps 1/6 and 1/12; at h = 1 - 1e-6 shells differ by {diff:.1e} while |sigma_1 - sigma(max)| = {jump:.4}")
}

fn finite_dimensional_laws() -> String {
    let mut worst: f64 = 0.0;
    for law in scaling_families() {
        let (p, dim) = (law.p(), law.geometry().dim());
        let s = law.geometry().steps_per_level();
        let hist = vec![
            (0.5, Ball::centered(p, dim, 0)),
            (1.0, Ball::centered(p, dim, s)),
        ];
        let cmp = prelimit(law, 8).fdd_compare(&hist).unwrap();
        assert!(cmp.diff < 1e-3 && !cmp.collapsed, "{law:?}: {cmp:?}");
        worst = worst.max(cmp.diff);
    }
    format!("path-space convergence replaced by criteria 3, 4, 6 and two-time histories at m = 8: max diff {worst:.1e}")
}

/// Name, runtime budget in seconds, and the check.
type Criterion = (&'static str, u64, fn() -> String);

fn main() {
    std::panic::set_hook(Box::new(|_| {}));
    let criteria: [Criterion; 9] = [
        ("normalization", 1, normalization),
        ("fourier oracle", 30, fourier_oracle),
        ("convolution oracle", 60, convolution_oracle),
        ("kernel mass and semigroup", 10, kernel_mass_and_semigroup),
        ("moment scaling", 120, moment_scaling),
        ("convergence diagnostics", 30, convergence_diagnostics),
        ("component marginals", 120, component_marginals),
        ("criticality headline", 5, criticality_headline),
        ("finite-dimensional laws", 60, finite_dimensional_laws),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= Duration::from_secs(budget) => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, msg)
            }
        };
        failed += usize::from(!ok);
        println!(
            "criterion {} {} {name} ({:.2} s of {budget} s): {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
