//! Hierarchical random walks on p-adic groups, their heat-kernel limits, and
//! the diffusion constant of the two-dimensional families.

pub mod criticality;
pub mod error;
pub mod fdd;
pub mod groups;
pub mod kernels;
pub mod laws;
pub mod montecarlo;
pub mod padic;
pub mod report;
pub mod scaling;
pub mod series;
pub mod shells;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default cap on the sampled shell index.
pub const DEFAULT_K_MAX: i64 = 64;

pub use criticality::{
    default_h_grid, diffusion_report, endpoint_scan, gap_report, sigma_components, sigma_from_p0,
    DiffusionReport, GapReport,
};
pub use error::{Error, Result};
pub use fdd::{Ball, FddOutcome, RadialDensity};
pub use groups::{embed, quotient_map, EmbeddingScheme, GroupElem};
pub use kernels::{KernelEval, KernelSpec};
pub use laws::{component_marginal, AnisoLaw2D, Family, IsoLaw2D, LawParams, WalkLaw, WalkLaw1D};
pub use montecarlo::{
    empirical_moment, simulate_components, simulate_embedded, simulate_primitive,
    EmpiricalHistogram, Engine, MomentEstimate, SimConfig,
};
pub use padic::{character, pairing_2d, Complex, ComplexUnit, PAdic, Valuation};
pub use report::Check;
pub use scaling::{convergence_table, ConvergenceRow, FddComparison, PreLimitLaw, SupDistance};
pub use series::Evaluated;
pub use shells::{volume, ExactVolume, Geometry, LogRadius, Region, ShellIndex, ShellKind};
