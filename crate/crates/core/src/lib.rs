//! KP soliton tau functions, and their realization as expectations of
//! exponentials of quadratic Wiener functionals.

mod dd;
pub mod error;
pub mod fields;
pub mod jet;
pub mod kps;
pub mod matcore;
pub mod mc;
pub mod tau;
pub mod tolerances;

pub use error::{Error, Result};
pub use fields::ScatteringData;
pub use matcore::Mat;
pub use mc::{AreaSpec, ComplexEstimate, PathEnsembleConfig, StepBasis, VerificationReport};
pub use tau::{PhasePoint, SolitonParams, SubsetExpansion, TauFunction, TrivialFactor};
