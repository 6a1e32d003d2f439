//! Monte Carlo over Brownian paths: stochastic areas, the quadratic
//! functional `Ŝ_{A,Λ}`, its OU reduction and its planar realization.

pub mod area;
pub mod closed_form;
pub mod estimate;
pub mod kotani;
pub mod ou;
pub mod paths;
pub mod planar;
pub mod quadrature;
pub mod report;

pub use area::{levy_mc, levy_mc_many, mc_char, s_hat, stochastic_area, AreaSpec, McOutcome};
pub use closed_form::{
    det_formula_area03, det_formula_area04, det_formula_continued, det_formula_thm01,
    levy_conditional, levy_unconditional, lsaf2_conditional,
};
pub use estimate::{ComplexEstimate, RealEstimate};
pub use ou::{prop4_check, simulate_ou, OUSpec};
pub use paths::{Path, PathEnsembleConfig};
pub use planar::{realize_2d, StepBasis};
pub use report::VerificationReport;
