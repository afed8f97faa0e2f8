pub mod analyze;
pub mod calibrate;
pub mod report;
pub mod simulate;
pub mod thermal;

pub const FRAMES: &str = "frames.sbth";
pub const FRAMES_TEXT: &str = "frames.txt";
pub const MANIFEST: &str = "manifest.cfg";
pub const CALIBRATION: &str = "calibration.cfg";
pub const CALIBRATION_POINTS: &str = "calibration_points.tsv";
pub const CALIBRATION_MANIFEST: &str = "calibration_manifest.cfg";
pub const TIMESERIES: &str = "timeseries.tsv";
pub const SPECTRUM: &str = "spectrum.tsv";
pub const HISTOGRAM: &str = "histogram.tsv";
pub const DEVIATION: &str = "deviation.tsv";
pub const ALLAN: &str = "allan.tsv";
pub const SUMMARY: &str = "summary.cfg";
pub const THERMAL: &str = "thermal.tsv";
pub const THERMAL_MANIFEST: &str = "thermal_manifest.cfg";
pub const REPORT: &str = "report.md";
