//! Experiment configuration: a JSON document whose fields can all be
//! overridden from the command line, resolved into concrete values before a
//! run.

use std::path::Path;

use amred_core::{AngleSchedule, ArraySpec, Error, PiMultiple, Result, SignMatrix, SignVariant};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SHOTS: u64 = 10_000;
/// Counter width used by array generators when `m` is not given.
pub const DEFAULT_GENERATOR_M: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Search,
    Filter,
    Iterate,
    NullElement,
    Decoherence,
}

impl Mode {
    pub fn is_sampled(self) -> bool {
        self != Mode::Iterate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Signs {
    /// The fixed 4x4 and 8x8 reference patterns (m = 2 and m = 3 only).
    Paper,
    Doubling,
}

impl Signs {
    pub fn variant(self, m: u32) -> Result<SignVariant> {
        match self {
            Signs::Doubling => Ok(SignVariant::Doubling),
            Signs::Paper => SignVariant::reference_for(m).ok_or_else(|| {
                Error::Config(format!(
                    "reference sign patterns exist for m = 2 and m = 3 only, got m = {m}"
                ))
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Array given literally or produced by a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArraySource {
    List(Vec<u64>),
    Generator(ArrayGenerator),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ArrayGenerator {
    /// `0, 1, …, M−1` with the values at positions 0 and `zero_index` swapped.
    Range {
        #[serde(default)]
        zero_index: usize,
    },
    /// `M−1` copies of `value` and a single 0 at `zero_index` (default: last).
    Constant {
        value: u64,
        #[serde(default)]
        zero_index: Option<usize>,
    },
}

impl ArrayGenerator {
    pub fn generate(&self, m: u32) -> Result<Vec<u64>> {
        let len = 1usize
            .checked_shl(m)
            .filter(|_| m <= 20)
            .ok_or_else(|| Error::Config(format!("m = {m} is too large")))?;
        let check = |z: usize| {
            if z < len {
                Ok(z)
            } else {
                Err(Error::Config(format!(
                    "zero_index {z} outside an array of {len}"
                )))
            }
        };
        match *self {
            ArrayGenerator::Range { zero_index } => {
                let z = check(zero_index)?;
                let mut values: Vec<u64> = (0..len as u64).collect();
                values.swap(0, z);
                Ok(values)
            }
            ArrayGenerator::Constant { value, zero_index } => {
                let z = check(zero_index.unwrap_or(len - 1))?;
                let mut values = vec![value; len];
                values[z] = 0;
                Ok(values)
            }
        }
    }
}

/// Preset name or per-bit π-multiples, most significant bit first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Angles(Vec<f64>),
    Preset(String),
}

impl ScheduleSpec {
    /// Comma-separated numbers become an angle list, anything else a preset name.
    pub fn parse(text: &str) -> ScheduleSpec {
        let parsed: std::result::Result<Vec<f64>, _> =
            text.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match parsed {
            Ok(angles) => ScheduleSpec::Angles(angles),
            Err(_) => ScheduleSpec::Preset(text.trim().to_string()),
        }
    }

    pub fn build(&self, n_bits: u32) -> Result<AngleSchedule> {
        match self {
            ScheduleSpec::Preset(name) => match name.as_str() {
                "default" => Ok(AngleSchedule::default_for(n_bits)),
                "highest-bit-pi" => Ok(AngleSchedule::highest_bit_pi(n_bits)),
                "exact-match" => Ok(AngleSchedule::exact_match()),
                other => Err(Error::Config(format!(
                    "unknown schedule preset '{other}' (expected default, highest-bit-pi or exact-match)"
                ))),
            },
            ScheduleSpec::Angles(angles) => {
                let schedule = AngleSchedule::per_bit("custom", angles.iter().map(|&a| PiMultiple(a)).collect())?;
                schedule.check_width(n_bits)?;
                Ok(schedule)
            }
        }
    }
}

/// One schedule or a per-iteration list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schedules {
    One(ScheduleSpec),
    Many(Vec<ScheduleSpec>),
}

impl Schedules {
    pub fn into_vec(self) -> Vec<ScheduleSpec> {
        match self {
            Schedules::One(s) => vec![s],
            Schedules::Many(v) => v,
        }
    }
}

/// Every field is optional; missing ones take mode-dependent defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub array: Option<ArraySource>,
    pub bits: Option<u32>,
    pub m: Option<u32>,
    pub target: Option<u64>,
    pub exclude: Option<u64>,
    pub schedule: Option<Schedules>,
    pub signs: Option<Signs>,
    pub iterations: Option<usize>,
    pub cycles: Option<u32>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub format: Option<Format>,
}

macro_rules! take_some {
    ($dst:ident, $src:ident, $($field:ident),*) => {
        $( if $src.$field.is_some() { $dst.$field = $src.$field; } )*
    };
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fields set in `overrides` replace the ones here.
    pub fn merge(mut self, overrides: ExperimentConfig) -> Self {
        take_some!(
            self, overrides, mode, array, bits, m, target, exclude, schedule, signs, iterations,
            cycles, shots, seed, out, format
        );
        self
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let mode = self
            .mode
            .ok_or_else(|| Error::Config("no mode given".to_string()))?;
        let array = match (&self.array, mode) {
            (Some(ArraySource::List(values)), _) => values.clone(),
            (Some(ArraySource::Generator(g)), _) => {
                g.generate(self.m.unwrap_or(DEFAULT_GENERATOR_M))?
            }
            (None, Mode::Iterate) => ArrayGenerator::Range { zero_index: 3 }
                .generate(self.m.unwrap_or(DEFAULT_GENERATOR_M))
                .or_else(|_| {
                    ArrayGenerator::Range { zero_index: 0 }
                        .generate(self.m.unwrap_or(DEFAULT_GENERATOR_M))
                })?,
            (None, _) => return Err(Error::Config("no array given".to_string())),
        };
        if !array.len().is_power_of_two() || array.len() < 2 {
            return Err(Error::Config(format!(
                "array length {} is not a power of two >= 2",
                array.len()
            )));
        }
        let m = array.len().trailing_zeros();
        if let Some(given) = self.m {
            if given != m {
                return Err(Error::Config(format!(
                    "m = {given} but the array has {} elements",
                    array.len()
                )));
            }
        }
        let target = self.target.unwrap_or(0);
        let widest = array
            .iter()
            .copied()
            .chain([target])
            .chain(self.exclude)
            .max()
            .unwrap_or(0);
        let bits = self
            .bits
            .unwrap_or_else(|| (64 - widest.leading_zeros()).max(1));

        let default_preset = match mode {
            Mode::NullElement => "exact-match",
            _ => "default",
        };
        let specs = self
            .schedule
            .clone()
            .map(Schedules::into_vec)
            .unwrap_or_else(|| vec![ScheduleSpec::Preset(default_preset.to_string())]);
        if specs.is_empty() {
            return Err(Error::Config("empty schedule list".to_string()));
        }
        if specs.len() > 1 && mode != Mode::Iterate {
            return Err(Error::Config(
                "per-iteration schedules only apply to iterate".to_string(),
            ));
        }
        let schedules = specs
            .iter()
            .map(|s| s.build(bits))
            .collect::<Result<Vec<_>>>()?;
        if mode == Mode::NullElement && schedules[0] != AngleSchedule::exact_match() {
            return Err(Error::Config(
                "null-element runs use the exact-match schedule".to_string(),
            ));
        }
        let exclude = match (mode, self.exclude) {
            (Mode::Filter, None) => {
                return Err(Error::Config("filter needs --exclude".to_string()))
            }
            (_, e) => e,
        };
        let signs = self.signs.unwrap_or(Signs::Doubling);
        signs.variant(m)?;
        let spec = ArraySpec::new(array, target, bits)?;

        let (shots, seed) = if mode.is_sampled() {
            let shots = self.shots.unwrap_or(DEFAULT_SHOTS);
            if shots == 0 {
                return Err(Error::Config("shots must be at least 1".to_string()));
            }
            let seed = self
                .seed
                .ok_or_else(|| Error::Config("sampled runs need --seed".to_string()))?;
            (Some(shots), Some(seed))
        } else {
            (None, None)
        };
        let iterations = match mode {
            Mode::Iterate => Some(self.iterations.unwrap_or(spec.len())),
            _ => None,
        };
        if iterations == Some(0) {
            return Err(Error::Config("iterations must be at least 1".to_string()));
        }
        let cycles = match mode {
            Mode::Decoherence | Mode::NullElement => Some(self.cycles.unwrap_or(1)),
            _ => None,
        };
        if mode == Mode::Decoherence && cycles == Some(0) {
            return Err(Error::Config(
                "decoherence needs at least one cycle".to_string(),
            ));
        }
        Ok(Resolved {
            mode,
            array: spec,
            schedules,
            signs,
            exclude,
            iterations,
            cycles,
            shots,
            seed,
            format: self.format.unwrap_or_default(),
        })
    }
}

/// Fully determined run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub mode: Mode,
    pub array: ArraySpec,
    pub schedules: Vec<AngleSchedule>,
    pub signs: Signs,
    pub exclude: Option<u64>,
    pub iterations: Option<usize>,
    pub cycles: Option<u32>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub format: Format,
}

#[derive(Serialize)]
struct ScheduleRecord<'a> {
    name: &'a str,
    /// `None` for the exact-match rule.
    angles_pi: Option<Vec<f64>>,
}

impl Resolved {
    pub fn sign_variant(&self) -> SignVariant {
        self.signs
            .variant(self.array.counter_bits())
            .expect("checked during resolution")
    }

    pub fn sign_matrix(&self) -> Result<SignMatrix> {
        SignMatrix::build(self.array.counter_bits(), self.sign_variant())
    }

    /// Seed and shots of a sampled run.
    pub fn sampling(&self) -> Result<(u64, u64)> {
        match (self.shots, self.seed) {
            (Some(shots), Some(seed)) => Ok((shots, seed)),
            _ => Err(Error::Config("run is not sampled".to_string())),
        }
    }

    /// The configuration after defaults and presets are expanded; embedded in every output.
    pub fn to_json(&self) -> serde_json::Value {
        let schedules: Vec<ScheduleRecord> = self
            .schedules
            .iter()
            .map(|s| ScheduleRecord {
                name: s.name(),
                angles_pi: s.per_bit_angles().map(|a| a.iter().map(|p| p.0).collect()),
            })
            .collect();
        serde_json::json!({
            "mode": self.mode,
            "array": self.array.elements(),
            "bits": self.array.n_bits(),
            "m": self.array.counter_bits(),
            "target": self.array.target(),
            "exclude": self.exclude,
            "schedules": schedules,
            "signs": self.signs,
            "iterations": self.iterations,
            "cycles": self.cycles,
            "shots": self.shots,
            "seed": self.seed,
            "format": self.format,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn search(array: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            mode: Some(Mode::Search),
            array: Some(ArraySource::List(array)),
            seed: Some(1),
            ..Default::default()
        }
    }

    #[test]
    fn bits_default_to_the_widest_value() {
        let r = search(vec![15, 14, 6, 0]).resolve().unwrap();
        assert_eq!(r.array.n_bits(), 4);
        assert_eq!(r.shots, Some(DEFAULT_SHOTS));
        assert_eq!(r.schedules[0], AngleSchedule::default_for(4));
    }

    #[test]
    fn sampled_runs_need_a_seed() {
        let mut c = search(vec![1, 0]);
        c.seed = None;
        assert!(matches!(c.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn iterate_defaults() {
        let c = ExperimentConfig {
            mode: Some(Mode::Iterate),
            schedule: Some(Schedules::One(ScheduleSpec::Preset("exact-match".into()))),
            ..Default::default()
        };
        let r = c.resolve().unwrap();
        assert_eq!(r.array.elements(), &[3, 1, 2, 0, 4, 5, 6, 7]);
        assert_eq!(r.iterations, Some(8));
        assert_eq!(r.seed, None);
    }

    #[test]
    fn json_round_trip_and_overrides() {
        let text =
            r#"{"mode":"search","array":[15,14,6,0],"schedule":[0.5,0.25,0.125,0.0625],"seed":3}"#;
        let c = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(
            c.schedule,
            Some(Schedules::One(ScheduleSpec::Angles(vec![
                0.5, 0.25, 0.125, 0.0625
            ])))
        );
        let merged = c.merge(ExperimentConfig {
            seed: Some(9),
            ..Default::default()
        });
        assert_eq!(merged.seed, Some(9));
        assert_eq!(
            merged.resolve().unwrap().schedules[0]
                .per_bit_angles()
                .unwrap()
                .len(),
            4
        );
        assert!(ExperimentConfig::from_json(r#"{"mood":"search"}"#).is_err());
    }

    #[test]
    fn generators_and_lists_of_schedules() {
        let text = r#"{"mode":"iterate","m":2,"array":{"kind":"constant","value":7},"schedule":["default","highest-bit-pi"]}"#;
        let r = ExperimentConfig::from_json(text)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(r.array.elements(), &[7, 7, 7, 0]);
        assert_eq!(r.schedules.len(), 2);
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        let mut c = search(vec![1, 0, 3]);
        assert!(c.resolve().is_err());
        c.array = Some(ArraySource::List(vec![1, 0]));
        c.schedule = Some(Schedules::One(ScheduleSpec::Preset("fastest".into())));
        assert!(c.resolve().is_err());
        c.schedule = Some(Schedules::One(ScheduleSpec::Angles(vec![0.75, 0.5])));
        assert!(c.resolve().is_err());
        c.schedule = None;
        c.signs = Some(Signs::Paper);
        assert!(c.resolve().is_err());
        let filter = ExperimentConfig {
            mode: Some(Mode::Filter),
            ..search(vec![1, 0])
        };
        assert!(filter.resolve().is_err());
    }

    #[test]
    fn schedule_text_parsing() {
        assert_eq!(
            ScheduleSpec::parse("0.5, 0.25"),
            ScheduleSpec::Angles(vec![0.5, 0.25])
        );
        assert_eq!(
            ScheduleSpec::parse("highest-bit-pi"),
            ScheduleSpec::Preset("highest-bit-pi".into())
        );
    }
}
