//! Inverse pipeline: spectra to sideband parameters, populations,
//! temperatures and fluctuation statistics.

pub mod average;
pub mod calibrate;
pub mod correct;
pub mod fit;
pub mod lm;
pub mod spectrum;
pub mod stats;
pub mod thermometry;

pub use fit::{fit_lorentzian, fit_lorentzian_data, fit_lorentzian_with, FitOptions, FitResult};
pub use average::{sliding_average, SlidingAverager};
pub use calibrate::{calibrate_power_sweep, CalibrationResult, CalibrationSettings, SweepPoint};
pub use correct::{analyze_frames, correct_backaction, DampingSource, PipelineOptions, TimeSeriesRecord};
pub use thermometry::{asymmetry_thermometry, AsymmetryResult};
pub use spectrum::{fluctuation_spectrum, FluctuationSpectrum, OuFit, Spectrum};
pub use stats::{allan_deviation, deviation_curves, deviation_table, histogram_stats, sigma_vs_n, AllanResult, DeviationTable, Histogram, SigmaLaw};
