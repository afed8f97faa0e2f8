//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! Physical sections (`system`, `bath`, `noise`, `material`, `thermal`) are
//! either `preset = NAME` alone or a complete explicit list; an absent
//! section falls back to the run-level preset. Run sections (`scenario`,
//! `sweep`, `analysis`, `budget`) have per-key defaults. Frequencies are in
//! Hz, times in s, temperatures in K and powers in W; unit suffixes are
//! rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::DampingSource;
use crate::bath::BathParams;
use crate::constants::hz;
use crate::error::{Error, Result};
use crate::optomech::{power_from_n_cav, NoiseBudget, PumpConfig, Scheme, SystemParams};
use crate::presets::{preset_section, PRESET_NAMES};
use crate::spectral::{GridSpec, Scenario, TemperatureSchedule};
use crate::thermal::{MaterialProps, ThermalStack};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    List(Vec<f64>),
}

impl Value {
    /// Text form that parses back to the identical value.
    pub fn render(&self) -> String {
        match self {
            Value::Num(v) => format!("{v:?}"),
            Value::Int(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(s) => s.clone(),
            Value::List(v) => v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Num,
    Int,
    Bool,
    Text,
    List,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    /// Empty for keys before the first header.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Block {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }
}

/// Syntax-level parse: sections and raw string values, no schema.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub blocks: Vec<Block>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let mut blocks = vec![Block { name: String::new(), line: 0, entries: Vec::new() }];
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = strip_comment(raw).trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {line}: unterminated section header `{s}`")))?
                    .trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                    return Err(Error::Config(format!("line {line}: invalid section name `{name}`")));
                }
                if blocks.iter().any(|b| b.name == name) {
                    return Err(Error::Config(format!("line {line}: section [{name}] appears twice")));
                }
                blocks.push(Block { name: name.to_string(), line, entries: Vec::new() });
                continue;
            }
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`, got `{s}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Config(format!("line {line}: missing key")));
            }
            let block = blocks.last_mut().expect("non-empty");
            if block.get(k).is_some() {
                return Err(Error::Config(format!("line {line}: key `{k}` repeated in section [{}]", block.name)));
            }
            block.entries.push(Entry { key: k.to_string(), value: v.to_string(), line });
        }
        if blocks[0].entries.is_empty() {
            blocks.remove(0);
        }
        Ok(Document { blocks })
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }
}

fn strip_comment(line: &str) -> &str {
    let b = line.as_bytes();
    for (i, &c) in b.iter().enumerate() {
        if c == b'#' && (i == 0 || b[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

pub fn parse_num(raw: &str, at: &str) -> Result<f64> {
    let s = raw.trim();
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::Config(format!("{at}: value must be finite, got `{s}`"))),
        Err(_) => {
            let prefix = (1..s.len()).rev().find(|&i| s.is_char_boundary(i) && s[..i].trim().parse::<f64>().is_ok());
            match prefix {
                Some(i) if s[i..].trim().chars().any(|c| c.is_alphabetic()) => Err(Error::Config(format!(
                    "{at}: unit suffixes are not accepted (`{s}`); write the bare number in Hz, s, K or W"
                ))),
                _ => Err(Error::Config(format!("{at}: expected a number, got `{s}`"))),
            }
        }
    }
}

fn parse_value(kind: Kind, raw: &str, at: &str) -> Result<Value> {
    let s = raw.trim();
    Ok(match kind {
        Kind::Num => Value::Num(parse_num(s, at)?),
        Kind::Int => Value::Int(
            s.parse::<u64>().map_err(|_| Error::Config(format!("{at}: expected a non-negative integer, got `{s}`")))?,
        ),
        Kind::Bool => match s {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => return Err(Error::Config(format!("{at}: expected true or false, got `{s}`"))),
        },
        Kind::Text => {
            if s.is_empty() {
                return Err(Error::Config(format!("{at}: empty value")));
            }
            Value::Text(s.to_string())
        }
        Kind::List => {
            let v = s.split(',').map(|p| parse_num(p, at)).collect::<Result<Vec<_>>>()?;
            if v.is_empty() {
                return Err(Error::Config(format!("{at}: empty list")));
            }
            Value::List(v)
        }
    })
}

#[derive(Debug, Clone, Copy)]
enum Need {
    Required,
    Optional,
    Default(&'static str),
}

struct KeySpec {
    key: &'static str,
    kind: Kind,
    need: Need,
}

const fn k(key: &'static str, kind: Kind, need: Need) -> KeySpec {
    KeySpec { key, kind, need }
}

use Kind::{Bool as B, Int as I, List as L, Num as N, Text as T};
use Need::{Default as D, Optional as O, Required as R};

struct SectionSpec {
    name: &'static str,
    physical: bool,
    keys: &'static [KeySpec],
}

const SECTIONS: &[SectionSpec] = &[
    SectionSpec { name: "run", physical: false, keys: &[k("seed", I, O), k("preset", T, O), k("out", T, O)] },
    SectionSpec {
        name: "system",
        physical: true,
        keys: &[
            k("cavity_frequency", N, R),
            k("mechanical_frequency", N, R),
            k("kappa_tot", N, R),
            k("kappa_ext", N, R),
            k("g0", N, R),
            k("gamma_m_floor", N, R),
            k("duffing_beta", N, R),
            k("mass", N, R),
        ],
    },
    SectionSpec {
        name: "bath",
        physical: true,
        keys: &[
            k("tls_log_slope", N, R),
            k("damping_linear_slope", N, R),
            k("damping_knee", N, R),
            k("t_c", N, R),
            k("sigma_ph_prefactor", N, R),
            k("sigma_f_amp", N, R),
            k("sigma_f_exponent", N, R),
            k("sigma_gamma_amp", N, R),
            k("sigma_gamma_exponent", N, R),
            k("walk_ref_window", N, R),
            k("walk_correlation", N, R),
        ],
    },
    SectionSpec {
        name: "noise",
        physical: true,
        keys: &[
            k("n_cav_noise", N, R),
            k("tech_heating_coeff", N, R),
            k("tech_heating_exponent", N, R),
            k("tech_heating_ref_photons", N, R),
            k("amplifier_background", N, R),
            k("quantum_backaction_floor", B, R),
        ],
    },
    SectionSpec {
        name: "material",
        physical: true,
        keys: &[
            k("v_s", N, R),
            k("theta_d", N, R),
            k("rho", N, R),
            k("c_p_coeff", N, R),
            k("k_bulk_coeff", N, R),
            k("g_eph", N, R),
        ],
    },
    SectionSpec {
        name: "thermal",
        physical: true,
        keys: &[
            k("e_p", N, R),
            k("r1", N, R),
            k("r2", N, R),
            k("kapitza_coeff", N, R),
            k("heat_leak_specific", N, R),
            k("lambda_conf", N, O),
            k("mass", N, O),
        ],
    },
    SectionSpec {
        name: "scenario",
        physical: false,
        keys: &[
            k("duration", N, D("36000")),
            k("frame_dt", N, D("1")),
            k("temperature", N, D("0.1")),
            k("schedule", L, O),
            k("scheme", T, D("red")),
            k("n_cav", N, D("300")),
            k("pump_power", N, O),
            k("detuning_error", N, D("0")),
            k("n_averages", I, D("10")),
            k("n_bins", I, O),
            k("f_start", N, O),
            k("f_step", N, O),
        ],
    },
    SectionSpec {
        name: "sweep",
        physical: false,
        keys: &[
            k("schemes", T, D("red, blue")),
            k("n_cav", L, D("50, 100, 200, 400, 800")),
            k("temperature", N, D("0.1")),
            k("duration", N, D("1800")),
            k("frame_dt", N, D("1")),
            k("n_averages", I, D("10")),
            k("quiet_bath", B, D("true")),
            k("fit_technical_heating", B, D("true")),
            k("n_ref", N, D("300")),
            k("tech_exponent", N, O),
            k("slope_tolerance", N, D("0.2")),
        ],
    },
    SectionSpec {
        name: "analysis",
        physical: false,
        keys: &[
            k("window", N, D("1200")),
            k("damping", T, D("calibrated")),
            k("stride", I, D("1")),
            k("detrend", B, D("true")),
            k("deviation_windows", L, D("300, 600, 1200")),
            k("acquisition_lengths", L, D("1800, 3600, 7200, 14400, 36000")),
            k("allan_taus", L, D("60, 600, 3600")),
            k("allan_window", N, D("36000")),
        ],
    },
    SectionSpec {
        name: "budget",
        physical: false,
        keys: &[k("temperatures", L, D("0.0005, 0.001, 0.01, 0.1")), k("electron_powers", L, D("1e-15, 1e-18"))],
    },
];

fn spec(name: &str) -> Option<&'static SectionSpec> {
    SECTIONS.iter().find(|s| s.name == name)
}

/// A section with every value resolved, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub section: &'static str,
    entries: Vec<(&'static str, Value, bool)>,
}

impl Resolved {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|e| e.0 == key).map(|e| &e.1)
    }

    /// Whether the key was written by the user rather than defaulted.
    pub fn given(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.0 == key && e.2)
    }

    pub fn num(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Value::Num(v)) => Some(*v),
            _ => None,
        }
    }

    fn req_num(&self, key: &str) -> Result<f64> {
        self.num(key).ok_or_else(|| Error::Config(format!("[{}] {key} is missing", self.section)))
    }

    fn int(&self, key: &str) -> Option<u64> {
        match self.get(key) {
            Some(Value::Int(v)) => Some(*v),
            _ => None,
        }
    }

    fn req_int(&self, key: &str) -> Result<u64> {
        self.int(key).ok_or_else(|| Error::Config(format!("[{}] {key} is missing", self.section)))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            Some(Value::Bool(v)) => Ok(*v),
            _ => Err(Error::Config(format!("[{}] {key} is missing", self.section))),
        }
    }

    fn text(&self, key: &str) -> Result<&str> {
        match self.get(key) {
            Some(Value::Text(v)) => Ok(v),
            _ => Err(Error::Config(format!("[{}] {key} is missing", self.section))),
        }
    }

    fn list(&self, key: &str) -> Option<&[f64]> {
        match self.get(key) {
            Some(Value::List(v)) => Some(v),
            _ => None,
        }
    }

    fn req_list(&self, key: &str) -> Result<&[f64]> {
        self.list(key).ok_or_else(|| Error::Config(format!("[{}] {key} is missing", self.section)))
    }

    fn render_into(&self, out: &mut String) {
        let _ = writeln!(out, "[{}]", self.section);
        for (k, v, _) in &self.entries {
            let _ = writeln!(out, "{k} = {}", v.render());
        }
        out.push('\n');
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub n_cav: Vec<f64>,
    pub temperature: f64,
    pub duration: f64,
    pub frame_dt: f64,
    pub n_averages: u32,
    pub quiet_bath: bool,
    pub fit_technical_heating: bool,
    pub n_ref: f64,
    /// Fixes the technical-heating exponent; fitted when `None`.
    pub tech_exponent: Option<f64>,
    pub slope_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSpec {
    pub window: f64,
    pub damping: DampingSource,
    pub stride: usize,
    pub detrend: bool,
    pub deviation_windows: Vec<f64>,
    pub acquisition_lengths: Vec<f64>,
    pub allan_taus: Vec<f64>,
    pub allan_window: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSpec {
    pub temperatures: Vec<f64>,
    pub electron_powers: Vec<f64>,
}

/// A checked configuration; sections are resolved on access so that
/// command-line overrides of the seed and preset apply.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    doc: Document,
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
}

fn check_preset(name: &str, at: &str) -> Result<()> {
    if PRESET_NAMES.contains(&name) {
        Ok(())
    } else {
        Err(Error::Config(format!("{at}: unknown preset `{name}` (known: {})", PRESET_NAMES.join(", "))))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Document::parse(text)?;
        // keys before the first header belong to [run]
        if let Some(i) = doc.blocks.iter().position(|b| b.name.is_empty()) {
            let top = doc.blocks.remove(i);
            match doc.blocks.iter_mut().find(|b| b.name == "run") {
                Some(run) => {
                    for e in top.entries {
                        if run.get(&e.key).is_some() {
                            return Err(Error::Config(format!("line {}: `{}` is also set in [run]", e.line, e.key)));
                        }
                        run.entries.push(e);
                    }
                }
                None => doc.blocks.insert(0, Block { name: "run".into(), ..top }),
            }
        }
        for b in &doc.blocks {
            let sp = spec(&b.name).ok_or_else(|| Error::Config(format!("line {}: unknown section [{}]", b.line, b.name)))?;
            if sp.physical {
                if let Some(p) = b.get("preset") {
                    if b.entries.len() > 1 {
                        return Err(Error::Config(format!(
                            "line {}: section [{}] takes either `preset` or explicit keys, not both",
                            b.line, b.name
                        )));
                    }
                    check_preset(&p.value, &format!("line {}", p.line))?;
                    continue;
                }
            }
            for e in &b.entries {
                let ks = sp.keys.iter().find(|ks| ks.key == e.key).ok_or_else(|| {
                    Error::Config(format!("line {}: unknown key `{}` in section [{}]", e.line, e.key, b.name))
                })?;
                parse_value(ks.kind, &e.value, &format!("line {} ({}.{})", e.line, b.name, e.key))?;
            }
        }
        let mut cfg = RunConfig { doc, ..Default::default() };
        let run = cfg.resolve("run")?;
        cfg.seed = run.int("seed");
        if let Some(Value::Text(p)) = run.get("preset") {
            check_preset(p, "[run] preset")?;
            cfg.preset = Some(p.clone());
        }
        if let Some(Value::Text(o)) = run.get("out") {
            cfg.out = Some(PathBuf::from(o));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Command-line values replace the file's.
    pub fn with_overrides(mut self, seed: Option<u64>, preset: Option<&str>, out: Option<&Path>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = Some(s);
        }
        if let Some(p) = preset {
            check_preset(p, "--preset")?;
            self.preset = Some(p.to_string());
        }
        if let Some(o) = out {
            self.out = Some(o.to_path_buf());
        }
        Ok(self)
    }

    pub fn resolve(&self, section: &str) -> Result<Resolved> {
        let sp = spec(section).ok_or_else(|| Error::Config(format!("unknown section [{section}]")))?;
        let block = self.doc.block(section).filter(|b| !b.entries.is_empty());
        let mut entries = Vec::with_capacity(sp.keys.len());
        if sp.physical {
            let preset = match block {
                Some(b) => b.get("preset").map(|e| e.value.clone()),
                None => Some(self.preset.clone().ok_or_else(|| {
                    Error::Config(format!("section [{section}] is missing and no preset is selected"))
                })?),
            };
            if let Some(p) = preset {
                let values = preset_section(&p, section)
                    .ok_or_else(|| Error::Config(format!("preset `{p}` has no section [{section}]")))?;
                for ks in sp.keys {
                    if let Some((_, v)) = values.iter().find(|(k, _)| *k == ks.key) {
                        entries.push((ks.key, v.clone(), false));
                    }
                }
                return Ok(Resolved { section: sp.name, entries });
            }
        }
        for ks in sp.keys {
            let at = |line: usize| format!("line {line} ({section}.{})", ks.key);
            match block.and_then(|b| b.get(ks.key)) {
                Some(e) => entries.push((ks.key, parse_value(ks.kind, &e.value, &at(e.line))?, true)),
                None => match ks.need {
                    Need::Required => {
                        return Err(Error::Config(format!(
                            "section [{section}] is explicit but lacks `{}` (give every key or use `preset = NAME`)",
                            ks.key
                        )))
                    }
                    Need::Optional => {}
                    Need::Default(d) => entries.push((ks.key, parse_value(ks.kind, d, "default")?, false)),
                },
            }
        }
        Ok(Resolved { section: sp.name, entries })
    }

    pub fn system(&self) -> Result<SystemParams> {
        let s = self.resolve("system")?;
        let sys = SystemParams {
            omega_c: hz(s.req_num("cavity_frequency")?),
            omega_m0: hz(s.req_num("mechanical_frequency")?),
            kappa_tot: hz(s.req_num("kappa_tot")?),
            kappa_ext: hz(s.req_num("kappa_ext")?),
            g0: hz(s.req_num("g0")?),
            gamma_m_floor: hz(s.req_num("gamma_m_floor")?),
            duffing_beta: s.req_num("duffing_beta")?,
            mass: s.req_num("mass")?,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn bath(&self) -> Result<BathParams> {
        let s = self.resolve("bath")?;
        let b = BathParams {
            tls_log_slope: hz(s.req_num("tls_log_slope")?),
            damping_linear_slope: hz(s.req_num("damping_linear_slope")?),
            damping_knee: s.req_num("damping_knee")?,
            t_c: s.req_num("t_c")?,
            sigma_ph_prefactor: s.req_num("sigma_ph_prefactor")?,
            sigma_f_amp: s.req_num("sigma_f_amp")?,
            sigma_f_exponent: s.req_num("sigma_f_exponent")?,
            sigma_gamma_amp: s.req_num("sigma_gamma_amp")?,
            sigma_gamma_exponent: s.req_num("sigma_gamma_exponent")?,
            walk_ref_window: s.req_num("walk_ref_window")?,
            walk_correlation: s.req_num("walk_correlation")?,
            rng_seed: 0,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn noise(&self, sys: &SystemParams) -> Result<NoiseBudget> {
        let s = self.resolve("noise")?;
        let ref_photons = s.req_num("tech_heating_ref_photons")?;
        if !(ref_photons > 0.0) {
            return Err(Error::Config(format!("[noise] tech_heating_ref_photons must be > 0, got {ref_photons}")));
        }
        let n = NoiseBudget {
            n_cav_noise: s.req_num("n_cav_noise")?,
            tech_heating_coeff: s.req_num("tech_heating_coeff")?,
            tech_heating_exponent: s.req_num("tech_heating_exponent")?,
            tech_heating_ref_power: power_from_n_cav(ref_photons, sys)?,
            amplifier_background: s.req_num("amplifier_background")?,
            quantum_backaction_floor: s.bool("quantum_backaction_floor")?,
        };
        n.validate()?;
        Ok(n)
    }

    /// Reference photon number of the technical-heating law.
    pub fn tech_ref_photons(&self) -> Result<f64> {
        self.resolve("noise")?.req_num("tech_heating_ref_photons")
    }

    pub fn material(&self) -> Result<MaterialProps> {
        let s = self.resolve("material")?;
        let m = MaterialProps {
            v_s: s.req_num("v_s")?,
            theta_d: s.req_num("theta_d")?,
            rho: s.req_num("rho")?,
            c_p_coeff: s.req_num("c_p_coeff")?,
            k_bulk_coeff: s.req_num("k_bulk_coeff")?,
            g_eph: s.req_num("g_eph")?,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn stack(&self) -> Result<ThermalStack> {
        let s = self.resolve("thermal")?;
        let t = ThermalStack {
            e_p: s.req_num("e_p")?,
            r1: s.req_num("r1")?,
            r2: s.req_num("r2")?,
            kapitza_coeff: s.req_num("kapitza_coeff")?,
            heat_leak_specific: s.req_num("heat_leak_specific")?,
            lambda_conf: s.num("lambda_conf"),
            mass_override: s.num("mass"),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required: set `seed` in [run] or pass --seed".into()))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let seed = self.require_seed()?;
        let sys = self.system()?;
        let bath = self.bath()?;
        let noise = self.noise(&sys)?;
        let s = self.resolve("scenario")?;
        let schedule = match s.list("schedule") {
            Some(pts) => {
                if s.given("temperature") {
                    return Err(Error::Config("[scenario] set either `temperature` or `schedule`, not both".into()));
                }
                if pts.len() % 2 != 0 {
                    return Err(Error::Config("[scenario] schedule must list time, temperature pairs".into()));
                }
                TemperatureSchedule::piecewise(pts.chunks(2).map(|c| (c[0], c[1])).collect())?
            }
            None => {
                let t = s.req_num("temperature")?;
                if !(t > 0.0) {
                    return Err(Error::Config(format!("[scenario] temperature must be > 0, got {t}")));
                }
                TemperatureSchedule::constant(t)
            }
        };
        let scheme: Scheme = s.text("scheme")?.parse()?;
        let pump = match s.num("pump_power") {
            Some(p) => {
                if s.given("n_cav") {
                    return Err(Error::Config("[scenario] set either `n_cav` or `pump_power`, not both".into()));
                }
                PumpConfig::from_power(scheme, p, &sys)
            }
            None => PumpConfig::from_n_cav(scheme, s.req_num("n_cav")?, &sys),
        }
        .map_err(as_config)?
        .with_detuning(hz(s.req_num("detuning_error")?));
        let grid = match (s.int("n_bins"), s.num("f_start"), s.num("f_step")) {
            (None, None, None) => None,
            (Some(n), Some(a), Some(d)) => Some(GridSpec::new(n as usize, a, d).map_err(as_config)?),
            _ => return Err(Error::Config("[scenario] n_bins, f_start and f_step go together".into())),
        };
        let n_averages = u32::try_from(s.req_int("n_averages")?)
            .map_err(|_| Error::Config("[scenario] n_averages is too large".into()))?;
        let sc = Scenario {
            duration: s.req_num("duration")?,
            frame_dt: s.req_num("frame_dt")?,
            schedule,
            pump,
            sys,
            bath,
            noise,
            grid,
            n_averages,
            seed,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn sweep(&self) -> Result<SweepSpec> {
        let s = self.resolve("sweep")?;
        let schemes = s
            .text("schemes")?
            .split(',')
            .map(|p| p.trim().parse::<Scheme>())
            .collect::<Result<Vec<_>>>()?;
        let n_averages = u32::try_from(s.req_int("n_averages")?)
            .map_err(|_| Error::Config("[sweep] n_averages is too large".into()))?;
        let spec = SweepSpec {
            schemes,
            n_cav: s.req_list("n_cav")?.to_vec(),
            temperature: s.req_num("temperature")?,
            duration: s.req_num("duration")?,
            frame_dt: s.req_num("frame_dt")?,
            n_averages,
            quiet_bath: s.bool("quiet_bath")?,
            fit_technical_heating: s.bool("fit_technical_heating")?,
            n_ref: s.req_num("n_ref")?,
            tech_exponent: s.num("tech_exponent"),
            slope_tolerance: s.req_num("slope_tolerance")?,
        };
        if spec.n_cav.len() < 3 {
            return Err(Error::Config(format!("[sweep] has {} drive powers; at least 3 are required", spec.n_cav.len())));
        }
        if spec.n_cav.iter().any(|&n| !(n > 0.0)) {
            return Err(Error::Config("[sweep] photon numbers must be > 0".into()));
        }
        if !(spec.temperature > 0.0 && spec.frame_dt > 0.0 && spec.duration >= spec.frame_dt) {
            return Err(Error::Config("[sweep] needs temperature > 0 and duration >= frame_dt > 0".into()));
        }
        Ok(spec)
    }

    pub fn analysis(&self) -> Result<AnalysisSpec> {
        let s = self.resolve("analysis")?;
        let damping = match s.text("damping")? {
            "calibrated" => DampingSource::Calibrated,
            "measured" => DampingSource::MeasuredWidth,
            other => {
                return Err(Error::Config(format!("[analysis] damping must be `calibrated` or `measured`, got `{other}`")))
            }
        };
        let spec = AnalysisSpec {
            window: s.req_num("window")?,
            damping,
            stride: s.req_int("stride")?.max(1) as usize,
            detrend: s.bool("detrend")?,
            deviation_windows: s.req_list("deviation_windows")?.to_vec(),
            acquisition_lengths: s.req_list("acquisition_lengths")?.to_vec(),
            allan_taus: s.req_list("allan_taus")?.to_vec(),
            allan_window: s.req_num("allan_window")?,
        };
        if !(spec.window > 0.0) || spec.deviation_windows.iter().chain(&spec.acquisition_lengths).chain(&spec.allan_taus).any(|&v| !(v > 0.0)) {
            return Err(Error::Config("[analysis] windows, lengths and taus must be > 0".into()));
        }
        Ok(spec)
    }

    pub fn budget(&self) -> Result<BudgetSpec> {
        let s = self.resolve("budget")?;
        let spec = BudgetSpec {
            temperatures: s.req_list("temperatures")?.to_vec(),
            electron_powers: s.req_list("electron_powers")?.to_vec(),
        };
        if spec.temperatures.iter().any(|&t| !(t > 0.0)) || spec.electron_powers.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Config("[budget] temperatures must be > 0 and powers >= 0".into()));
        }
        Ok(spec)
    }

    /// Fully explicit configuration text for the named sections; feeding
    /// it back reproduces the same resolved values. Sections that cannot be
    /// resolved are left out.
    pub fn manifest(&self, sections: &[&str]) -> String {
        let mut out = String::new();
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "[run]\nseed = {seed}\n");
        }
        for name in sections {
            if let Ok(r) = self.resolve(name) {
                r.render_into(&mut out);
            }
        }
        out
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    }
}

pub const SIMULATION_SECTIONS: [&str; 4] = ["system", "bath", "noise", "scenario"];
pub const ALL_SECTIONS: [&str; 9] = ["system", "bath", "noise", "material", "thermal", "scenario", "sweep", "analysis", "budget"];
