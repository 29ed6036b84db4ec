//! One function per subcommand, each producing tables and checks.

use crate::output::{Run, Table};
use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use padic_walk::criticality::IDENTITY_TOL;
use padic_walk::montecarlo::{simulate_components, simulate_primitive, WILSON_Z};
use padic_walk::{
    component_marginal, convergence_table, default_h_grid, diffusion_report, endpoint_scan, Ball,
    Check, EmbeddingScheme, Engine, Family, KernelSpec, LawParams, PreLimitLaw, SimConfig, WalkLaw,
};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Args, Serialize)]
pub struct LawArgs {
    /// 1d, iso2d or aniso2d.
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub b: f64,
    /// Holding probability of the one-dimensional law.
    #[arg(long)]
    pub p0: Option<f64>,
    /// Anisotropy of the two-dimensional law; 1 is the isotropic family.
    #[arg(long)]
    pub h: Option<f64>,
}

impl LawArgs {
    pub fn law(&self) -> Result<WalkLaw> {
        let params = LawParams {
            family: self.family,
            p: self.p,
            b: self.b,
            p0: self.p0,
            h: self.h,
        };
        Ok(WalkLaw::from_params(params)?)
    }
}

/// Diffusion coefficient of the embedding, given either directly or through
/// the limit's `sigma`.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = false, multiple = false)]
pub struct ScaleArgs {
    #[arg(long = "D")]
    pub d: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
}

impl ScaleArgs {
    fn d_for(&self, law: &WalkLaw) -> Result<f64> {
        match (self.d, self.sigma) {
            (Some(d), _) => Ok(d),
            (None, Some(s)) => Ok(s / KernelSpec::from_law(law, 1.0)?.sigma),
            (None, None) => Ok(1.0),
        }
    }
}

fn budgets<const N: usize>(items: [(&'static str, f64); N]) -> BTreeMap<&'static str, f64> {
    items.into_iter().collect()
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LawCmd {
    #[command(flatten)]
    pub law: LawArgs,
    /// Largest step count; n-step tables cover 1..=n.
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Moment orders, each in (0, b).
    #[arg(long, value_delimiter = ',')]
    pub moments: Vec<f64>,
    /// Largest shell index tabulated.
    #[arg(long, default_value_t = 20)]
    pub shells: i64,
    /// Deepest dual index tabulated.
    #[arg(long, default_value_t = 12)]
    pub dual: i64,
}

#[derive(Serialize)]
struct ShellRow {
    index: i64,
    prob: f64,
    tail: f64,
}

#[derive(Serialize)]
struct CharRow {
    dual_index: Option<i64>,
    multiplier: f64,
    char_value: f64,
}

#[derive(Serialize)]
struct NStepRow {
    n: u64,
    index: i64,
    mass: f64,
    density: f64,
    tail_bound: f64,
}

#[derive(Serialize)]
struct MomentRow {
    n: u64,
    r: f64,
    value: f64,
    tail_bound: f64,
}

#[derive(Serialize)]
struct SummaryRow {
    quantity: &'static str,
    value: f64,
}

pub fn law(cmd: &LawCmd) -> Result<Run> {
    let law = cmd.law.law()?;
    if cmd.n == 0 || cmd.shells < 1 || cmd.dual < 0 {
        bail!("--n and --shells must be at least 1 and --dual nonnegative");
    }
    let shells: Vec<ShellRow> = (0..=cmd.shells)
        .map(|j| {
            Ok(ShellRow {
                index: j,
                prob: law.shell_prob(j)?,
                tail: if j == 0 {
                    1.0 - law.atom()
                } else {
                    law.tail(j)
                },
            })
        })
        .collect::<Result<_>>()?;
    let chars: Vec<CharRow> = std::iter::once(None)
        .chain((-cmd.dual..=0).rev().map(Some))
        .map(|u| CharRow {
            dual_index: u,
            multiplier: u.map_or(0.0, |u| law.multiplier(u)),
            char_value: law.char_value(u),
        })
        .collect();
    let mut nstep = Vec::new();
    let mut closure: f64 = 0.0;
    for n in 1..=cmd.n {
        for j in 0..=cmd.shells {
            let e = law.nstep_density(n, (j > 0).then_some(j));
            nstep.push(NStepRow {
                n,
                index: j,
                mass: law.nstep_shell_mass(n, j),
                density: e.value,
                tail_bound: e.tail_bound,
            });
        }
        let far = cmd.shells.max(400);
        let total: f64 = (0..=far).map(|j| law.nstep_shell_mass(n, j)).sum::<f64>()
            + n as f64 * law.tail(far + 1);
        closure = closure.max((total - 1.0).abs());
    }
    let mut moments = Vec::new();
    for &r in &cmd.moments {
        for n in 1..=cmd.n {
            let e = law.nstep_moment(n, r)?;
            moments.push(MomentRow {
                n,
                r,
                value: e.value,
                tail_bound: e.tail_bound,
            });
        }
    }
    let total = law.total_mass();
    let summary = vec![
        SummaryRow {
            quantity: "normalization",
            value: total,
        },
        SummaryRow {
            quantity: "atom",
            value: law.atom(),
        },
        SummaryRow {
            quantity: "multiplier_at_0",
            value: law.multiplier(0),
        },
    ];
    let mut tables = vec![
        Table::from_records("summary", &summary)?,
        Table::from_records("shells", &shells)?,
        Table::from_records("char", &chars)?,
        Table::from_records("nstep", &nstep)?,
    ];
    if !moments.is_empty() {
        tables.push(Table::from_records("moments", &moments)?);
    }
    Ok(Run {
        tables,
        checks: vec![
            Check::within("normalization", (total - 1.0).abs(), 1e-13),
            Check::within("nstep_closure", closure, 1e-9),
        ],
        budgets: budgets([("normalization", 1e-13), ("nstep_closure", 1e-9)]),
        seed: None,
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelCmd {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = -10, allow_hyphen_values = true)]
    pub jmin: i64,
    #[arg(long, default_value_t = 10)]
    pub jmax: i64,
    /// Moment orders, each in (0, b).
    #[arg(long, value_delimiter = ',')]
    pub moments: Vec<f64>,
}

#[derive(Serialize)]
struct KernelRow {
    t: f64,
    index: Option<i64>,
    density: f64,
    tail_bound: f64,
    shell_mass: Option<f64>,
}

#[derive(Serialize)]
struct KernelMomentRow {
    t: f64,
    r: f64,
    value: f64,
    tail_bound: f64,
    gamma_bound: f64,
}

pub fn kernel(cmd: &KernelCmd) -> Result<Run> {
    let k = KernelSpec::new(cmd.family, cmd.p, cmd.b, cmd.h, cmd.sigma)?;
    if cmd.jmin > cmd.jmax || cmd.t.is_empty() {
        bail!("need --jmin <= --jmax and at least one time");
    }
    if let Some(&t) = cmd.t.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        bail!("time {t} is not positive");
    }
    let mut rows = Vec::new();
    let mut mass_err: f64 = 0.0;
    let mut mass_budget: f64 = 0.0;
    for &t in &cmd.t {
        let origin = k.heat_kernel_at(t, None);
        rows.push(KernelRow {
            t,
            index: None,
            density: origin.value,
            tail_bound: origin.tail_bound,
            shell_mass: None,
        });
        for j in cmd.jmin..=cmd.jmax {
            let e = k.heat_kernel_at(t, Some(j));
            rows.push(KernelRow {
                t,
                index: Some(j),
                density: e.value,
                tail_bound: e.tail_bound,
                shell_mass: Some(k.shell_mass(t, j)),
            });
        }
        let big = k.ball_mass(t, 200);
        mass_err = mass_err.max((big.value - 1.0).abs() - big.tail_bound);
        mass_budget = mass_budget.max(2.0 * k.tolerance);
    }
    let mut moments = Vec::new();
    for &r in &cmd.moments {
        for &t in &cmd.t {
            let e = k.kernel_moment(t, r)?;
            moments.push(KernelMomentRow {
                t,
                r,
                value: e.value,
                tail_bound: e.tail_bound,
                gamma_bound: k.moment_bound(t, r)?,
            });
        }
    }
    let mut tables = vec![Table::from_records("values", &rows)?];
    if !moments.is_empty() {
        tables.push(Table::from_records("moments", &moments)?);
    }
    Ok(Run {
        tables,
        checks: vec![Check::within("mass", mass_err.max(0.0), mass_budget)],
        budgets: budgets([("series_tolerance", k.tolerance)]),
        seed: None,
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvergeCmd {
    #[command(flatten)]
    pub law: LawArgs,
    #[command(flatten)]
    pub scale: ScaleArgs,
    /// Levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
    pub m: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub t: Vec<f64>,
    /// Outermost shell of the comparison grid.
    #[arg(long, default_value_t = 10)]
    pub grid_top: i64,
}

#[derive(Serialize)]
struct FddRow {
    m: u32,
    t0: f64,
    t1: f64,
    prob_m: f64,
    prob_limit: f64,
    diff: f64,
}

pub fn converge(cmd: &ConvergeCmd) -> Result<Run> {
    let law = cmd.law.law()?;
    let d = cmd.scale.d_for(&law)?;
    let mut levels = cmd.m.clone();
    levels.sort_unstable();
    levels.dedup();
    let rows = convergence_table(&law, d, &levels, &cmd.t, cmd.grid_top)?;
    let mut decreasing = true;
    for &t in &cmd.t {
        let col: Vec<f64> = rows
            .iter()
            .filter(|r| r.t == t)
            .map(|r| r.l1_dual)
            .collect();
        decreasing &= col.windows(2).all(|w| w[1] < w[0]);
    }
    let dominated = rows.iter().all(|r| r.sup_grid <= r.l1_dual * (1.0 + 1e-12));
    // two-time nested history: origin ball at t/2, the next level's ball at t
    let (p, dim) = (law.p(), law.geometry().dim());
    let step = law.geometry().steps_per_level();
    let mut fdd = Vec::new();
    for &m in &levels {
        for &t in &cmd.t {
            let pl = PreLimitLaw::new(law, EmbeddingScheme::new(p, m, d, law.b())?)?;
            let hist = vec![
                (t / 2.0, Ball::centered(p, dim, 0)),
                (t, Ball::centered(p, dim, step)),
            ];
            let c = pl.fdd_compare(&hist)?;
            fdd.push(FddRow {
                m,
                t0: t / 2.0,
                t1: t,
                prob_m: c.prob_m,
                prob_limit: c.prob_limit,
                diff: c.diff,
            });
        }
    }
    Ok(Run {
        tables: vec![
            Table::from_records("table", &rows)?,
            Table::from_records("fdd", &fdd)?,
        ],
        checks: vec![
            Check::holds("l1_dual_decreasing", decreasing),
            Check::holds("sup_dominated_by_l1", dominated),
        ],
        budgets: budgets([("D", d)]),
        seed: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineArg {
    Shells,
    Digits,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateCmd {
    #[command(flatten)]
    pub law: LawArgs,
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Recorded step counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub steps: Vec<u64>,
    #[arg(long, value_enum, default_value_t = EngineArg::Shells)]
    pub engine: EngineArg,
    /// Largest step shell drawn before a path counts as overflow.
    #[arg(long)]
    pub k_max: Option<i64>,
    /// Also record coordinate histograms (two-dimensional laws).
    #[arg(long)]
    pub components: bool,
}

#[derive(Serialize)]
struct HistRow {
    n: u64,
    index: i64,
    count: u64,
    frequency: f64,
    wilson_lo: f64,
    wilson_hi: f64,
    exact: f64,
}

#[derive(Serialize)]
struct CompRow {
    n: u64,
    coord: usize,
    index: i64,
    count: u64,
    frequency: f64,
    wilson_lo: f64,
    wilson_hi: f64,
    exact: f64,
}

#[derive(Serialize)]
struct OverflowRow {
    n: u64,
    total: u64,
    overflow: u64,
}

pub fn simulate(cmd: &SimulateCmd) -> Result<Run> {
    let law = cmd.law.law()?;
    let mut steps = cmd.steps.clone();
    steps.sort_unstable();
    steps.dedup();
    let mut cfg = SimConfig::new(law, cmd.paths, steps, cmd.seed).with_engine(match cmd.engine {
        EngineArg::Shells => Engine::Shells,
        EngineArg::Digits => Engine::Digits,
    });
    if let Some(w) = cmd.workers {
        cfg = cfg.with_workers(w);
    }
    if let Some(k) = cmd.k_max {
        cfg = cfg.with_k_max(k);
    }
    let hists = simulate_primitive(&cfg)?;
    let mut rows = Vec::new();
    let mut overflow = Vec::new();
    let mut accounted = true;
    for h in &hists {
        let top = h.counts.keys().max().copied().unwrap_or(0);
        for j in 0..=top {
            let key = (j > 0).then_some(j);
            let (lo, hi) = h.wilson(key);
            rows.push(HistRow {
                n: h.n,
                index: j,
                count: h.count(key),
                frequency: h.frequency(key),
                wilson_lo: lo,
                wilson_hi: hi,
                exact: law.nstep_shell_mass(h.n, j),
            });
        }
        accounted &= h.atom + h.overflow + h.counts.values().sum::<u64>() == h.total;
        overflow.push(OverflowRow {
            n: h.n,
            total: h.total,
            overflow: h.overflow,
        });
    }
    let mut tables = vec![
        Table::from_records("shells", &rows)?,
        Table::from_records("overflow", &overflow)?,
    ];
    if cmd.components {
        let mut comp = Vec::new();
        for c in simulate_components(&cfg)? {
            for (i, h) in c.coords.iter().enumerate() {
                let top = h.counts.keys().max().copied().unwrap_or(0);
                for k in 0..=top {
                    let key = (k > 0).then_some(k);
                    let (lo, hi) = h.wilson(key);
                    comp.push(CompRow {
                        n: c.n,
                        coord: i + 1,
                        index: k,
                        count: h.count(key),
                        frequency: h.frequency(key),
                        wilson_lo: lo,
                        wilson_hi: hi,
                        exact: component_marginal(&law, i + 1, k)?,
                    });
                }
            }
        }
        tables.push(Table::from_records("components", &comp)?);
    }
    Ok(Run {
        tables,
        checks: vec![Check::holds("counts_accounted", accounted)],
        budgets: budgets([
            ("wilson_z", WILSON_Z),
            ("k_max", cfg.effective_cap() as f64),
        ]),
        seed: Some(cmd.seed),
    })
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CriticalCmd {
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub b: f64,
    #[arg(long = "D", default_value_t = 1.0)]
    pub d: f64,
    /// Anisotropies below 1; defaults to a grid refined toward 1.
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<f64>,
    /// Coarse shells compared in the endpoint scan.
    #[arg(long, default_value_t = 6)]
    pub k_max: i64,
}

pub fn critical(cmd: &CriticalCmd) -> Result<Run> {
    let grid = if cmd.h.is_empty() {
        default_h_grid()
    } else {
        cmd.h.clone()
    };
    let report = diffusion_report(cmd.d, cmd.p, cmd.b, &grid)?;
    let scan = endpoint_scan(cmd.p, cmd.b, cmd.d, &grid, cmd.k_max)?;
    let g = &report.gaps;
    let summary = vec![
        SummaryRow {
            quantity: "sigma_max",
            value: report.sigma_max,
        },
        SummaryRow {
            quantity: "P0_max",
            value: report.p0_max,
        },
        SummaryRow {
            quantity: "left_limit_1",
            value: g.left_limit_1,
        },
        SummaryRow {
            quantity: "left_limit_2",
            value: g.left_limit_2,
        },
        SummaryRow {
            quantity: "gap_1",
            value: g.gap_1,
        },
        SummaryRow {
            quantity: "gap_2",
            value: g.gap_2,
        },
    ];
    let mut checks = report.checks();
    let near = grid
        .iter()
        .copied()
        .filter(|&h| h < 1.0)
        .fold(0.0, f64::max);
    if near >= 1.0 - 1e-6 {
        let diff = scan
            .iter()
            .filter(|r| r.h == near)
            .map(|r| r.shell_diff)
            .fold(0.0, f64::max);
        checks.push(Check::within("endpoint_shells", diff, 1e-5));
    }
    Ok(Run {
        tables: vec![
            Table::from_records("summary", &summary)?,
            Table::from_records("rows", &report.rows)?,
            Table::from_records("endpoint", &scan)?,
        ],
        checks,
        budgets: budgets([
            ("identity", IDENTITY_TOL * cmd.d.max(1.0)),
            ("endpoint_shells", 1e-5),
        ]),
        seed: None,
    })
}
