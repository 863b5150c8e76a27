//! Single-photon propagation through a homogeneously broadened resonant
//! absorber, with the matched-filter input pulse and storage metrics.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod medium;
pub mod metrics;
pub mod optimal;
pub mod propagation;
pub mod signal;
pub mod slice;
pub mod specfun;

pub use error::{Error, Result};
pub use medium::{Kernel, MediumParams};
pub use metrics::{EfficiencyBreakdown, MetricsReport, Simulation};
pub use optimal::{GammaMethod, GammaSeries, OptimalPulseSpec};
pub use propagation::{DepthGrid, ExcitationProfile};
pub use signal::{Signal, Spectrum, TimeGrid, WindowProbability};
pub use slice::{SliceParams, SliceState};
