//! Random-signal Neyman–Pearson detection and the relationship between
//! finite-sample relative efficiency (RE) and Pitman asymptotic relative
//! efficiency (ARE).
//!
//! Modules, bottom-up:
//!
//! - [`stats`]: normal CDF/quantile, Q function, noncentral chi-square
//!   Gaussian limit, finite differences with Richardson extrapolation.
//! - [`signal`]: the Gaussian noise/signal model, the likelihood-ratio
//!   statistic and reproducible sampling.
//! - [`detector`]: detector moment maps, thresholds and detection probability.
//! - [`efficiency`]: efficacy, ARE, sample-size search, the correction term U
//!   and convergence sweeps.
//! - [`mc`]: Monte Carlo checks of all of the above.

pub mod detector;
pub mod efficiency;
pub mod error;
pub mod mc;
pub mod signal;
pub mod stats;

pub use detector::{
    energy_detector, linear_detector, np_random_signal_detector, BuiltinDetector, DetectorSpec,
    OperatingPoint,
};
pub use error::{Error, Result};
pub use signal::{GaussianSignalModel, Hypothesis};
pub use stats::DiffConfig;
