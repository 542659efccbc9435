//! Canonical configurations behind each reproduced figure.

use amred_core::{Error, Result};

use crate::config::{
    ArrayGenerator, ArraySource, ExperimentConfig, Mode, ScheduleSpec, Schedules, Signs,
};
use crate::output::{Panel, Report};
use crate::run::run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FigureId {
    Fig4,
    Fig5,
    Fig6,
    Fig8,
    Fig10,
    Fig11,
    Fig12,
    Fig14,
    Fig15,
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
            FigureId::Fig6 => "fig6",
            FigureId::Fig8 => "fig8",
            FigureId::Fig10 => "fig10",
            FigureId::Fig11 => "fig11",
            FigureId::Fig12 => "fig12",
            FigureId::Fig14 => "fig14",
            FigureId::Fig15 => "fig15",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        <Self as clap::ValueEnum>::from_str(text, true)
            .map_err(|_| Error::Config(format!("unknown figure '{text}'")))
    }

    pub fn is_sampled(self) -> bool {
        !matches!(self, FigureId::Fig11 | FigureId::Fig12 | FigureId::Fig14)
    }
}

/// Array of the equalizer figure: eight distinct six-bit values, four of them ≥ 32.
pub const EQUALIZER_ARRAY: [u64; 8] = [3, 45, 17, 60, 9, 38, 26, 51];
pub const FILTER_ARRAY: [u64; 8] = [6, 0, 7, 9, 11, 2, 13, 15];

/// `63, 61, …, 3, 1, 0, 2, …, 60, 62`.
pub fn interleaved_64() -> Vec<u64> {
    (0..32u64)
        .rev()
        .map(|k| 2 * k + 1)
        .chain((0..32u64).map(|k| 2 * k))
        .collect()
}

fn list(values: Vec<u64>) -> Option<ArraySource> {
    Some(ArraySource::List(values))
}

fn preset(name: &str) -> Option<Schedules> {
    Some(Schedules::One(ScheduleSpec::Preset(name.to_string())))
}

fn single(config: ExperimentConfig, name: Option<&str>) -> Result<Vec<Panel>> {
    let resolved = config.resolve()?;
    let mut panels = run(&resolved)?.panels;
    if let Some(name) = name {
        for p in &mut panels {
            p.name = Some(match &p.name {
                Some(inner) => format!("{name}-{inner}"),
                None => name.to_string(),
            });
        }
    }
    Ok(panels)
}

/// Mean probability below 32 over mean probability at or above 32.
pub fn suppression_ratio(values: &[u64], p: &[f64]) -> f64 {
    let mean = |keep: fn(u64) -> bool| {
        let sel: Vec<f64> = values
            .iter()
            .zip(p)
            .filter(|(v, _)| keep(**v))
            .map(|(_, x)| *x)
            .collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    mean(|v| v < 32) / mean(|v| v >= 32)
}

pub fn figure(id: FigureId, shots: Option<u64>, seed: Option<u64>) -> Result<Report> {
    if id.is_sampled() && seed.is_none() {
        return Err(Error::Config(format!(
            "{} is sampled and needs --seed",
            id.name()
        )));
    }
    let sampled = |mode: Mode| ExperimentConfig {
        mode: Some(mode),
        shots,
        seed,
        ..Default::default()
    };
    let panels = match id {
        FigureId::Fig4 => single(
            ExperimentConfig {
                array: list(vec![15, 14, 6, 0]),
                bits: Some(4),
                signs: Some(Signs::Paper),
                ..sampled(Mode::Search)
            },
            None,
        )?,
        FigureId::Fig5 => {
            let mut panels = single(
                ExperimentConfig {
                    array: list((0..64).collect()),
                    bits: Some(6),
                    ..sampled(Mode::Search)
                },
                Some("ascending"),
            )?;
            panels.extend(single(
                ExperimentConfig {
                    array: list(interleaved_64()),
                    bits: Some(6),
                    ..sampled(Mode::Search)
                },
                Some("interleaved"),
            )?);
            panels
        }
        FigureId::Fig6 => single(
            ExperimentConfig {
                array: list(vec![15, 15, 15, 0]),
                bits: Some(4),
                signs: Some(Signs::Paper),
                ..sampled(Mode::Search)
            },
            None,
        )?,
        FigureId::Fig8 => {
            let mut panels = Vec::new();
            for (m, value, bits) in [(4u32, 127u64, 7u32), (5, 15, 4)] {
                panels.extend(single(
                    ExperimentConfig {
                        array: Some(ArraySource::Generator(ArrayGenerator::Constant {
                            value,
                            zero_index: None,
                        })),
                        m: Some(m),
                        bits: Some(bits),
                        cycles: Some(1),
                        ..sampled(Mode::Decoherence)
                    },
                    Some(&format!("m{}", 1 << m)),
                )?);
            }
            panels
        }
        FigureId::Fig10 => {
            let mut panels = Vec::new();
            for m in [3u32, 4] {
                panels.extend(single(
                    ExperimentConfig {
                        array: Some(ArraySource::Generator(ArrayGenerator::Constant {
                            value: 15,
                            zero_index: None,
                        })),
                        m: Some(m),
                        bits: Some(4),
                        ..sampled(Mode::NullElement)
                    },
                    Some(&format!("m{}", 1 << m)),
                )?);
            }
            panels
        }
        FigureId::Fig11 | FigureId::Fig12 => {
            let ms: &[u32] = if id == FigureId::Fig11 { &[3] } else { &[3, 4] };
            let mut panels = Vec::new();
            for &m in ms {
                panels.extend(single(
                    ExperimentConfig {
                        mode: Some(Mode::Iterate),
                        array: Some(ArraySource::Generator(ArrayGenerator::Range {
                            zero_index: 3,
                        })),
                        m: Some(m),
                        schedule: preset("exact-match"),
                        iterations: Some(if id == FigureId::Fig11 { 8 } else { 1 << m }),
                        ..Default::default()
                    },
                    Some(&format!("m{}", 1 << m)),
                )?);
            }
            panels
        }
        FigureId::Fig14 => {
            let iterate = |schedules: Vec<&str>| ExperimentConfig {
                mode: Some(Mode::Iterate),
                array: list(EQUALIZER_ARRAY.to_vec()),
                bits: Some(6),
                iterations: Some(schedules.len()),
                schedule: Some(Schedules::Many(
                    schedules
                        .into_iter()
                        .map(|s| ScheduleSpec::Preset(s.into()))
                        .collect(),
                )),
                ..Default::default()
            };
            let mut panels = single(iterate(vec!["highest-bit-pi"]), Some("left"))?;
            panels.extend(single(
                iterate(vec!["default", "highest-bit-pi", "highest-bit-pi"]),
                Some("right"),
            )?);
            panels
                .into_iter()
                .map(|p| {
                    let last = p
                        .iteration_rows()
                        .and_then(|r| r.last())
                        .map(|r| r.probabilities.clone())
                        .unwrap_or_default();
                    let ratio = suppression_ratio(&EQUALIZER_ARRAY, &last);
                    p.metric("suppression_ratio", ratio)
                })
                .collect()
        }
        FigureId::Fig15 => single(
            ExperimentConfig {
                array: list(FILTER_ARRAY.to_vec()),
                bits: Some(4),
                exclude: Some(15),
                ..sampled(Mode::Filter)
            },
            None,
        )?,
    };
    let mut report = Report::new(panels);
    report.figure = Some(id.name().to_string());
    Ok(report)
}
