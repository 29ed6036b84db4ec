//! Diffusion constants of the coordinate processes of the two-dimensional
//! walks, their left limits at `h = 1`, and the gaps to the isotropic value.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::laws::{component_marginal, WalkLaw};
use crate::padic::check_prime;
use crate::report::Check;

/// Tolerance of the identities checked by [`DiffusionReport::checks`].
pub const IDENTITY_TOL: f64 = 1e-13;

fn check_common(d: f64, p: u32, b: f64) -> Result<()> {
    check_prime(p)?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid("D", format!("{d} is not positive")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid("b", format!("{b} is not positive")));
    }
    Ok(())
}

fn check_open_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(invalid("h", format!("{h} is not in (0, 1)")));
    }
    Ok(())
}

/// `D (1 - P0) (p^(b+1) - 1) / (p^b (p - 1))`.
pub fn sigma_from_p0(d: f64, p: u32, b: f64, p0: f64) -> Result<f64> {
    check_common(d, p, b)?;
    if !(0.0..1.0).contains(&p0) {
        return Err(invalid("P0", format!("{p0} is not in [0, 1)")));
    }
    let p = p as f64;
    Ok(d * (1.0 - p0) * (p.powf(b + 1.0) - 1.0) / (p.powf(b) * (p - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaComponents {
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub sigma_max: f64,
}

pub fn sigma_max(d: f64, p: u32, b: f64) -> Result<f64> {
    check_common(d, p, b)?;
    let p = p as f64;
    Ok(d * (p.powf(b + 2.0) - 1.0) / (p.powf(b) * (p * p - 1.0)))
}

pub fn sigma_components(d: f64, p: u32, b: f64, h: f64) -> Result<SigmaComponents> {
    check_common(d, p, b)?;
    check_open_h(h)?;
    let pf = p as f64;
    let (pb, phb) = (pf.powf(b), pf.powf(h * b));
    Ok(SigmaComponents {
        sigma_1: d / (pf - 1.0) * (pf * (phb + 1.0) / (pb + phb) - 1.0 / pb),
        sigma_2: d * (1.0 + (pb - 1.0) / ((pf - 1.0) * (pb + phb))),
        sigma_max: sigma_max(d, p, b)?,
    })
}

/// `(P0(1), P0(2))`: probabilities that one step leaves coordinate 1 or 2 at 0.
pub fn component_atoms(p: u32, b: f64, h: f64) -> Result<(f64, f64)> {
    check_open_h(h)?;
    let law = WalkLaw::two_dim(p, b, h)?;
    Ok((
        component_marginal(&law, 1, 0)?,
        component_marginal(&law, 2, 0)?,
    ))
}

/// Coordinate atom of the isotropic walk.
pub fn p0_max(p: u32, b: f64) -> Result<f64> {
    component_marginal(&WalkLaw::two_dim(p, b, 1.0)?, 1, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub sigma_max: f64,
    /// `lim_{h -> 1-} sigma(h, 1)`.
    pub left_limit_1: f64,
    /// `lim_{h -> 1-} sigma(h, 2)`.
    pub left_limit_2: f64,
    /// `sigma(max) - sigma(1-, 1)`.
    pub gap_1: f64,
    /// `sigma(1-, 2) - sigma(max)`.
    pub gap_2: f64,
}

pub fn gap_report(d: f64, p: u32, b: f64) -> Result<GapReport> {
    check_common(d, p, b)?;
    let pf = p as f64;
    let pb = pf.powf(b);
    Ok(GapReport {
        sigma_max: sigma_max(d, p, b)?,
        left_limit_1: d * (pf.powf(b + 1.0) + pf - 2.0) / (2.0 * pb * (pf - 1.0)),
        left_limit_2: d * (1.0 + (pb - 1.0) / (2.0 * pb * (pf - 1.0))),
        gap_1: d * (pb - 1.0) / (2.0 * pf.powf(b - 1.0) * (pf + 1.0)),
        gap_2: d * (pb - 1.0) / (2.0 * pb * (pf + 1.0)),
    })
}

/// `{0.05 j : j = 1..19}` followed by `{1 - 10^-k : k = 2..6}`.
pub fn default_h_grid() -> Vec<f64> {
    let mut h: Vec<f64> = (1..=19).map(|j| j as f64 * 0.05).collect();
    h.extend((2..=6).map(|k| 1.0 - 10f64.powi(-k)));
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HRow {
    pub h: f64,
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub sigma_1_from_p0: f64,
    pub sigma_2_from_p0: f64,
    #[serde(rename = "P0_1")]
    pub p0_1: f64,
    #[serde(rename = "P0_2")]
    pub p0_2: f64,
    /// `sigma(h,1) / (p+1) + p sigma(h,2) / (p+1) - sigma(max)`.
    pub convex_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionReport {
    pub p: u32,
    pub b: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub sigma_max: f64,
    pub sigma_max_from_p0: f64,
    #[serde(rename = "P0_max")]
    pub p0_max: f64,
    pub gaps: GapReport,
    pub rows: Vec<HRow>,
}

pub fn diffusion_report(d: f64, p: u32, b: f64, h_grid: &[f64]) -> Result<DiffusionReport> {
    check_common(d, p, b)?;
    let pf = p as f64;
    let rows = h_grid
        .par_iter()
        .map(|&h| {
            let s = sigma_components(d, p, b, h)?;
            let (p0_1, p0_2) = component_atoms(p, b, h)?;
            Ok(HRow {
                h,
                sigma_1: s.sigma_1,
                sigma_2: s.sigma_2,
                sigma_1_from_p0: sigma_from_p0(d, p, b, p0_1)?,
                sigma_2_from_p0: sigma_from_p0(d, p, b, p0_2)?,
                p0_1,
                p0_2,
                convex_residual: s.sigma_1 / (pf + 1.0) + pf * s.sigma_2 / (pf + 1.0) - s.sigma_max,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let p0_max = p0_max(p, b)?;
    Ok(DiffusionReport {
        p,
        b,
        d,
        sigma_max: sigma_max(d, p, b)?,
        sigma_max_from_p0: sigma_from_p0(d, p, b, p0_max)?,
        p0_max,
        gaps: gap_report(d, p, b)?,
        rows,
    })
}

impl DiffusionReport {
    /// The identities and orderings the report must satisfy.
    pub fn checks(&self) -> Vec<Check> {
        let tol = IDENTITY_TOL * self.d.max(1.0);
        let g = &self.gaps;
        let worst = |f: &dyn Fn(&HRow) -> f64| self.rows.iter().map(f).fold(0.0, f64::max);
        let route = worst(&|r| {
            (r.sigma_1 - r.sigma_1_from_p0)
                .abs()
                .max((r.sigma_2 - r.sigma_2_from_p0).abs())
        });
        let convex = worst(&|r| r.convex_residual.abs());
        let ordered = self
            .rows
            .iter()
            .all(|r| r.sigma_1 < self.sigma_max && self.sigma_max < r.sigma_2);
        let monotone = self.rows.windows(2).all(|w| {
            w[1].h <= w[0].h || (w[1].sigma_1 >= w[0].sigma_1 && w[1].sigma_2 <= w[0].sigma_2)
        });
        let gap_err = ((g.sigma_max - g.left_limit_1) - g.gap_1)
            .abs()
            .max(((g.left_limit_2 - g.sigma_max) - g.gap_2).abs());
        vec![
            Check::within("p0_route", route, tol),
            Check::within(
                "p0_route_max",
                (self.sigma_max - self.sigma_max_from_p0).abs(),
                tol,
            ),
            Check::within("convex_identity", convex, tol),
            Check::holds("ordering", ordered),
            Check::holds("monotone_in_h", monotone),
            Check::within("gap_identity", gap_err, tol),
            Check::holds("gaps_positive", g.gap_1 > 0.0 && g.gap_2 > 0.0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointRow {
    pub h: f64,
    pub k: i64,
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub sigma_max: f64,
    #[serde(rename = "P0_1")]
    pub p0_1: f64,
    #[serde(rename = "P0_2")]
    pub p0_2: f64,
    /// Anisotropic probabilities of fine shells `2k - 1` and `2k`, summed.
    pub paired_fine: f64,
    /// Isotropic probability of coarse shell `k`.
    pub coarse: f64,
    pub shell_diff: f64,
    pub gap_1: f64,
    pub gap_2: f64,
}

/// For each `h` and each `k` in `1..=k_max`: component constants and the
/// difference between paired fine shells and the coarse shell.
pub fn endpoint_scan(
    p: u32,
    b: f64,
    d: f64,
    h_grid: &[f64],
    k_max: i64,
) -> Result<Vec<EndpointRow>> {
    check_common(d, p, b)?;
    let iso = WalkLaw::two_dim(p, b, 1.0)?;
    let gaps = gap_report(d, p, b)?;
    let per_h = h_grid
        .par_iter()
        .map(|&h| {
            let s = sigma_components(d, p, b, h)?;
            let (p0_1, p0_2) = component_atoms(p, b, h)?;
            let aniso = WalkLaw::two_dim(p, b, h)?;
            (1..=k_max)
                .map(|k| {
                    let paired_fine = aniso.shell_prob(2 * k - 1)? + aniso.shell_prob(2 * k)?;
                    let coarse = iso.shell_prob(k)?;
                    Ok(EndpointRow {
                        h,
                        k,
                        sigma_1: s.sigma_1,
                        sigma_2: s.sigma_2,
                        sigma_max: s.sigma_max,
                        p0_1,
                        p0_2,
                        paired_fine,
                        coarse,
                        shell_diff: (paired_fine - coarse).abs(),
                        gap_1: gaps.gap_1,
                        gap_2: gaps.gap_2,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_h.into_iter().flatten().collect())
}
