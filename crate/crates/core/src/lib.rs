//! Sideband thermometry of a cryogenic optomechanical drum: forward
//! simulation, inverse analysis and the thermal budget of the suspended mode.

pub mod analysis;
pub mod bath;
pub mod constants;
pub mod error;
pub mod io;
pub mod optomech;
pub mod presets;
pub mod special;
pub mod spectral;
pub mod thermal;
pub mod workflow;

pub use bath::{BathParams, BathProcess, BathState};
pub use error::{Error, Result};
pub use optomech::{NoiseBudget, PumpConfig, Scheme, SystemParams};
pub use spectral::{GridSpec, Scenario, SpectrumFrame, TemperatureSchedule};
