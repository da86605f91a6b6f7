//! Plain-text scenario files.
//!
//! ```text
//! [converter1]
//! L_mH = 1
//! C_uF = 10
//! Vin_V = 16
//! Imax_A = 5
//! [converter2]
//! ...
//! [control]
//! k1 = 1
//! k2 = 1
//! [load]
//! 0 = 10        # t_s = R_ohm
//! 0.05 = 15
//! [sim]
//! Vref_V = 8
//! init = zero   # or equilibrium
//! ```
//!
//! Values are kept in the units they are written in; [`ScenarioFile::to_scenario`]
//! converts to SI. Keeping the written values makes printing and re-parsing
//! exact.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::control::{coupling, ControlGains};
use crate::model::{ConverterParams, PlantState};
use crate::sim::{LoadSchedule, LoadStep, Scenario, DEFAULT_DT, DEFAULT_T_END};

pub const DEFAULT_RECORD_EVERY: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("line {line}: cannot parse `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: key `{key}` appears before any section")]
    KeyOutsideSection { line: usize, key: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: duplicate key `{key}` in [{section}]")]
    DuplicateKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("missing key `{key}` in [{section}]")]
    MissingKey { section: String, key: String },
    #[error("line {line}: `{key}` is not a number: `{value}`")]
    NonNumeric {
        line: usize,
        key: String,
        value: String,
    },
    #[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// All states zero (cold start).
    #[default]
    Zero,
    /// Analytic steady state for the initial load.
    Equilibrium,
}

impl InitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            InitMode::Zero => "zero",
            InitMode::Equilibrium => "equilibrium",
        }
    }
}

/// One converter in engineering units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterEntry {
    pub l_mh: f64,
    pub c_uf: f64,
    pub vin_v: f64,
    pub imax_a: f64,
}

impl ConverterEntry {
    pub fn to_params(&self) -> ConverterParams {
        ConverterParams {
            inductance: self.l_mh / 1e3,
            capacitance: self.c_uf / 1e6,
            vin: self.vin_v,
            i_max: self.imax_a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub converter1: ConverterEntry,
    pub converter2: ConverterEntry,
    pub gains: ControlGains,
    /// `(t_s, R_ohm)` pairs.
    pub load: Vec<(f64, f64)>,
    pub vref_v: f64,
    pub dt_s: f64,
    pub t_end_s: f64,
    pub record_every: usize,
    pub init: InitMode,
}

const CONVERTER_KEYS: [&str; 4] = ["L_mH", "C_uF", "Vin_V", "Imax_A"];
const CONTROL_KEYS: [&str; 5] = ["k1", "k2", "duty_min", "duty_max", "x_guard"];
const SIM_KEYS: [&str; 5] = ["Vref_V", "dt_s", "t_end_s", "record_every", "init"];

struct Entry {
    line: usize,
    value: String,
}

#[derive(Default)]
struct Raw {
    sections: HashMap<&'static str, HashMap<String, Entry>>,
    load: Vec<(usize, String, String)>,
}

fn section_name(name: &str) -> Option<&'static str> {
    ["converter1", "converter2", "control", "load", "sim"]
        .into_iter()
        .find(|s| *s == name)
}

fn allowed_keys(section: &str) -> &'static [&'static str] {
    match section {
        "converter1" | "converter2" => &CONVERTER_KEYS,
        "control" => &CONTROL_KEYS,
        _ => &SIM_KEYS,
    }
}

fn tokenize(text: &str) -> Result<Raw, ScenarioError> {
    let mut raw = Raw::default();
    let mut current: Option<&'static str> = None;
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let body = full.split('#').next().unwrap_or("").trim();
        if body.is_empty() || body.starts_with(';') {
            continue;
        }
        if let Some(inner) = body.strip_prefix('[') {
            let name = inner.strip_suffix(']').ok_or_else(|| ScenarioError::Syntax {
                line,
                text: body.to_string(),
            })?;
            let name = name.trim();
            current = Some(section_name(name).ok_or_else(|| ScenarioError::UnknownSection {
                line,
                name: name.to_string(),
            })?);
            raw.sections.entry(current.unwrap()).or_default();
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(ScenarioError::Syntax {
                line,
                text: body.to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ScenarioError::Syntax {
                line,
                text: body.to_string(),
            });
        }
        let Some(section) = current else {
            return Err(ScenarioError::KeyOutsideSection {
                line,
                key: key.to_string(),
            });
        };
        if section == "load" {
            raw.load.push((line, key.to_string(), value.to_string()));
            continue;
        }
        if !allowed_keys(section).contains(&key) {
            return Err(ScenarioError::UnknownKey {
                line,
                section: section.to_string(),
                key: key.to_string(),
            });
        }
        let map = raw.sections.entry(section).or_default();
        if map.contains_key(key) {
            return Err(ScenarioError::DuplicateKey {
                line,
                section: section.to_string(),
                key: key.to_string(),
            });
        }
        map.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }
    Ok(raw)
}

fn number(line: usize, key: &str, value: &str) -> Result<f64, ScenarioError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ScenarioError::NonNumeric {
            line,
            key: key.to_string(),
            value: value.to_string(),
        })
}

fn invalid(key: &str, line: Option<usize>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.to_string(),
        line,
        message: message.into(),
    }
}

struct Reader<'a> {
    raw: &'a Raw,
}

impl Reader<'_> {
    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.raw.sections.get(section).and_then(|m| m.get(key))
    }

    fn line(&self, section: &str, key: &str) -> Option<usize> {
        self.entry(section, key).map(|e| e.line)
    }

    fn required(&self, section: &str, key: &str) -> Result<f64, ScenarioError> {
        let e = self.entry(section, key).ok_or_else(|| ScenarioError::MissingKey {
            section: section.to_string(),
            key: key.to_string(),
        })?;
        number(e.line, key, &e.value)
    }

    fn optional(&self, section: &str, key: &str, default: f64) -> Result<f64, ScenarioError> {
        match self.entry(section, key) {
            Some(e) => number(e.line, key, &e.value),
            None => Ok(default),
        }
    }

    fn positive(&self, section: &str, key: &str, v: f64) -> Result<f64, ScenarioError> {
        if v > 0.0 {
            Ok(v)
        } else {
            Err(invalid(key, self.line(section, key), format!("must be > 0, got {v}")))
        }
    }

    fn converter(&self, section: &str) -> Result<ConverterEntry, ScenarioError> {
        let mut vals = [0.0; 4];
        for (v, key) in vals.iter_mut().zip(CONVERTER_KEYS) {
            *v = self.positive(section, key, self.required(section, key)?)?;
        }
        Ok(ConverterEntry {
            l_mh: vals[0],
            c_uf: vals[1],
            vin_v: vals[2],
            imax_a: vals[3],
        })
    }
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let raw = tokenize(text)?;
    let rd = Reader { raw: &raw };

    let converter1 = rd.converter("converter1")?;
    let converter2 = rd.converter("converter2")?;

    let defaults = ControlGains::default();
    let gains = ControlGains {
        k1: rd.positive("control", "k1", rd.required("control", "k1")?)?,
        k2: rd.positive("control", "k2", rd.required("control", "k2")?)?,
        x_guard: rd.positive(
            "control",
            "x_guard",
            rd.optional("control", "x_guard", defaults.x_guard)?,
        )?,
        duty_min: rd.optional("control", "duty_min", defaults.duty_min)?,
        duty_max: rd.optional("control", "duty_max", defaults.duty_max)?,
    };
    if !(0.0 <= gains.duty_min && gains.duty_min < gains.duty_max && gains.duty_max <= 1.0) {
        let line = rd
            .line("control", "duty_max")
            .or_else(|| rd.line("control", "duty_min"));
        return Err(invalid(
            "duty_min/duty_max",
            line,
            format!(
                "need 0 <= duty_min < duty_max <= 1, got [{}, {}]",
                gains.duty_min, gains.duty_max
            ),
        ));
    }
    let x = coupling(&converter1.to_params(), &converter2.to_params());
    if !(x.abs() >= gains.x_guard) {
        return Err(invalid(
            "Imax_A",
            rd.line("converter2", "Imax_A"),
            format!(
                "converters too similar: |1/(I2m L2) - 1/(I1m L1)| = {:.3e} is below x_guard {}",
                x.abs(),
                gains.x_guard
            ),
        ));
    }

    let mut load = Vec::with_capacity(raw.load.len());
    for (line, t, r) in &raw.load {
        let t_s = number(*line, t, t)?;
        let r_ohm = number(*line, t, r)?;
        if r_ohm <= 0.0 {
            return Err(invalid("load", Some(*line), format!("resistance must be > 0, got {r_ohm}")));
        }
        match load.last() {
            None if t_s != 0.0 => {
                return Err(invalid("load", Some(*line), "first entry must be at t = 0"))
            }
            Some(&(prev, _)) if t_s <= prev => {
                return Err(invalid(
                    "load",
                    Some(*line),
                    format!("event times must be strictly increasing ({prev} then {t_s})"),
                ))
            }
            _ => {}
        }
        load.push((t_s, r_ohm));
    }
    if load.is_empty() {
        return Err(ScenarioError::MissingKey {
            section: "load".into(),
            key: "<t_s> = <R_ohm>".into(),
        });
    }

    let vref_v = rd.positive("sim", "Vref_V", rd.required("sim", "Vref_V")?)?;
    let vin = converter1.vin_v.min(converter2.vin_v);
    if vref_v >= vin {
        return Err(invalid(
            "Vref_V",
            rd.line("sim", "Vref_V"),
            format!("Vref must be below input voltage ({vref_v} V >= {vin} V)"),
        ));
    }
    let dt_s = rd.positive("sim", "dt_s", rd.optional("sim", "dt_s", DEFAULT_DT)?)?;
    let t_end_s = rd.optional("sim", "t_end_s", DEFAULT_T_END)?;
    if t_end_s < 0.0 {
        return Err(invalid("t_end_s", rd.line("sim", "t_end_s"), "must be >= 0"));
    }
    let record_every = match rd.entry("sim", "record_every") {
        None => DEFAULT_RECORD_EVERY,
        Some(e) => match e.value.parse::<usize>() {
            Ok(n) if n >= 1 => n,
            Ok(_) => return Err(invalid("record_every", Some(e.line), "must be >= 1")),
            Err(_) => {
                return Err(ScenarioError::NonNumeric {
                    line: e.line,
                    key: "record_every".into(),
                    value: e.value.clone(),
                })
            }
        },
    };
    let init = match rd.entry("sim", "init") {
        None => InitMode::Zero,
        Some(e) => match e.value.as_str() {
            "zero" => InitMode::Zero,
            "equilibrium" => InitMode::Equilibrium,
            other => {
                return Err(invalid(
                    "init",
                    Some(e.line),
                    format!("expected `zero` or `equilibrium`, got `{other}`"),
                ))
            }
        },
    };

    let file = ScenarioFile {
        converter1,
        converter2,
        gains,
        load,
        vref_v,
        dt_s,
        t_end_s,
        record_every,
        init,
    };
    file.to_scenario()?;
    Ok(file)
}

impl ScenarioFile {
    /// Convert to an SI-unit [`Scenario`], validating it.
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioError> {
        let wrap = |e: crate::Error| invalid("scenario", None, e.to_string());
        let load = LoadSchedule::new(
            self.load
                .iter()
                .map(|&(t, resistance)| LoadStep { t, resistance })
                .collect(),
        )
        .map_err(wrap)?;
        let mut scenario = Scenario {
            converter1: self.converter1.to_params(),
            converter2: self.converter2.to_params(),
            gains: self.gains,
            vref: self.vref_v,
            load,
            dt: self.dt_s,
            t_end: self.t_end_s,
            initial_state: PlantState::ZERO,
        };
        if self.init == InitMode::Equilibrium {
            scenario.initial_state = scenario.initial_equilibrium().map_err(wrap)?;
        }
        scenario.validate().map_err(wrap)?;
        Ok(scenario)
    }

    /// Canonical text form; parsing it yields an identical `ScenarioFile`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, c) in [("converter1", &self.converter1), ("converter2", &self.converter2)] {
            let _ = writeln!(s, "[{name}]");
            let _ = writeln!(s, "L_mH = {}", c.l_mh);
            let _ = writeln!(s, "C_uF = {}", c.c_uf);
            let _ = writeln!(s, "Vin_V = {}", c.vin_v);
            let _ = writeln!(s, "Imax_A = {}", c.imax_a);
            s.push('\n');
        }
        let g = &self.gains;
        let _ = writeln!(s, "[control]");
        let _ = writeln!(s, "k1 = {}", g.k1);
        let _ = writeln!(s, "k2 = {}", g.k2);
        let _ = writeln!(s, "duty_min = {}", g.duty_min);
        let _ = writeln!(s, "duty_max = {}", g.duty_max);
        let _ = writeln!(s, "x_guard = {}", g.x_guard);
        s.push('\n');
        let _ = writeln!(s, "[load]");
        for (t, r) in &self.load {
            let _ = writeln!(s, "{t} = {r}");
        }
        s.push('\n');
        let _ = writeln!(s, "[sim]");
        let _ = writeln!(s, "Vref_V = {}", self.vref_v);
        let _ = writeln!(s, "dt_s = {:e}", self.dt_s);
        let _ = writeln!(s, "t_end_s = {}", self.t_end_s);
        let _ = writeln!(s, "record_every = {}", self.record_every);
        let _ = writeln!(s, "init = {}", self.init.as_str());
        s
    }
}
