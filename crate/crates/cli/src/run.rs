//! Executes a resolved configuration and collects the result panels.

use amred_core::channel::{iterate, markov_transition, target_mass};
use amred_core::oracle::{brute_force_curve, closed_form_single_call, compare_histogram};
use amred_core::search::{
    decoherence_protocol, filter_exclude, null_element_procedure, single_call_search, SearchConfig,
    SearchMode,
};
use amred_core::{sample_distribution, Histogram, Result};

use crate::config::{Mode, Resolved};
use crate::output::{Comparison, HistogramRow, IterationRow, Panel, Report, Table};

/// Bin-wise z threshold for every histogram comparison.
pub const COMPARISON_SIGMA: f64 = 4.0;

fn bits_label(index: usize, m: u32) -> String {
    format!("{index:0width$b}", width = m as usize)
}

/// Histogram panel with a comparison against `oracle` (exact probabilities of
/// the histogram when `None`).
fn histogram_panel(
    resolved: &Resolved,
    hist: &Histogram,
    oracle: Option<(&str, Vec<f64>)>,
) -> Result<Panel> {
    let exact = hist.exact_probs().map(|p| p.to_vec()).unwrap_or_default();
    let m = resolved.array.counter_bits();
    let rows = (0..hist.len())
        .map(|k| HistogramRow {
            counter_index: k,
            counter_bits: bits_label(k, m),
            count: hist.count(k),
            frequency: hist.frequency(k),
            exact_probability: exact.get(k).copied().unwrap_or(f64::NAN),
        })
        .collect();
    let (name, expected) = oracle.unwrap_or(("statevector", exact));
    let comparison = if hist.shots() >= 100 {
        Some(Comparison {
            oracle: name.to_string(),
            report: compare_histogram(hist, &expected, COMPARISON_SIGMA)?,
        })
    } else {
        None
    };
    let mut panel = Panel::new(resolved.to_json(), Table::Histogram(rows));
    panel.comparison = comparison;
    Ok(panel)
}

fn search_config(resolved: &Resolved, mode: SearchMode) -> SearchConfig {
    SearchConfig {
        array: resolved.array.clone(),
        schedule: resolved.schedules[0].clone(),
        signs: resolved.sign_variant(),
        mode,
        cycles: resolved.cycles.unwrap_or(0),
    }
}

/// Index of the largest probability (lowest index on ties).
pub fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold(0, |best, (i, &x)| if x > p[best] { i } else { best })
}

pub fn run(resolved: &Resolved) -> Result<Report> {
    let panels = match resolved.mode {
        Mode::Search => vec![run_search(resolved)?],
        Mode::Filter => vec![run_filter(resolved)?],
        Mode::NullElement => vec![run_null_element(resolved)?],
        Mode::Decoherence => run_decoherence(resolved)?,
        Mode::Iterate => vec![run_iterate(resolved)?],
    };
    Ok(Report::new(panels))
}

fn run_search(resolved: &Resolved) -> Result<Panel> {
    let (shots, seed) = resolved.sampling()?;
    let out = single_call_search(&search_config(resolved, SearchMode::Nearest))?;
    let hist = sample_distribution(&out.distribution, shots, seed)?;
    let oracle = if resolved.array.is_distinct() {
        Some((
            "closed-form",
            closed_form_single_call(&resolved.array, &resolved.schedules[0])?,
        ))
    } else {
        None
    };
    let m = resolved.array.len() as f64;
    let peak = argmax(&out.distribution);
    Ok(histogram_panel(resolved, &hist, oracle)?
        .metric("exact_mode_bin", peak as f64)
        .metric("peak_gain", out.distribution[peak] * m))
}

fn run_filter(resolved: &Resolved) -> Result<Panel> {
    let (shots, seed) = resolved.sampling()?;
    let exclude = resolved
        .exclude
        .expect("filter runs carry an excluded value");
    let out = filter_exclude(&resolved.array, exclude, resolved.sign_variant())?;
    let hist = sample_distribution(&out.distribution, shots, seed)?;
    let excluded_mass: f64 = out.excluded.iter().map(|&k| out.distribution[k]).sum();
    let mut panel =
        histogram_panel(resolved, &hist, None)?.metric("excluded_probability", excluded_mass);
    panel.notes = out.warnings;
    Ok(panel)
}

fn run_null_element(resolved: &Resolved) -> Result<Panel> {
    let (shots, seed) = resolved.sampling()?;
    let out = null_element_procedure(&search_config(resolved, SearchMode::ExactMatch))?;
    // The final state is a mixture over measurement records; sampling its
    // counter marginal gives the same outcome statistics as per-shot trajectories.
    let hist = sample_distribution(&out.distribution, shots, seed)?;
    let p = out.distribution[out.match_index];
    Ok(histogram_panel(resolved, &hist, None)?
        .metric("match_index", out.match_index as f64)
        .metric("p_match", p)
        .metric("p_match_times_m", p * resolved.array.len() as f64))
}

fn run_decoherence(resolved: &Resolved) -> Result<Vec<Panel>> {
    let (shots, seed) = resolved.sampling()?;
    let run = decoherence_protocol(&search_config(resolved, SearchMode::Nearest), shots, seed)?;
    let mut panels = Vec::new();
    for (name, hist) in [("first", &run.first), ("second", &run.second)] {
        let exact = hist.exact_probs().map(|p| p.to_vec()).unwrap_or_default();
        panels.push(
            histogram_panel(resolved, hist, None)?
                .named(name)
                .metric("p_target", target_mass(&resolved.array, &exact))
                .metric(
                    "sampled_p_target",
                    target_mass(&resolved.array, &hist.frequencies()),
                ),
        );
    }
    Ok(panels)
}

fn run_iterate(resolved: &Resolved) -> Result<Panel> {
    let t = resolved.iterations.unwrap_or(1);
    let signs = resolved.sign_matrix()?;
    let diag = iterate(&resolved.array, &resolved.schedules, t, &signs)?;
    let m = resolved.array.len();
    let rows: Vec<IterationRow> = diag
        .iter()
        .enumerate()
        .map(|(i, p)| IterationRow {
            iteration: i + 1,
            p_target: target_mass(&resolved.array, p),
            brute_force: brute_force_curve(m, i + 1),
            probabilities: p.clone(),
        })
        .collect();
    let mut panel = Panel::new(resolved.to_json(), Table::Iteration(rows));
    if resolved.array.is_distinct() {
        let mut p = nalgebra::DVector::from_element(m, 1.0 / m as f64);
        let mut worst: f64 = 0.0;
        for (i, row) in diag.iter().enumerate() {
            let schedule = &resolved.schedules[i.min(resolved.schedules.len() - 1)];
            p = markov_transition(&resolved.array, schedule)? * p;
            worst = row
                .iter()
                .zip(p.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(worst, f64::max);
        }
        panel = panel.metric("max_markov_deviation", worst);
    }
    Ok(panel)
}
