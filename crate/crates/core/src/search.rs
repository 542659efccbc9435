//! End-to-end procedures built on the statevector engine.
//!
//! * [`single_call_search`]: one load and one rotation pass.
//! * [`decoherence_protocol`]: rotate, measure, rotate again without reloading, measure.
//! * [`null_element_procedure`]: exact-match search that uses the matching element
//!   as an amplitude buffer.
//! * [`filter_exclude`]: drive the counter of an unwanted value to probability zero.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::histogram::{sample_shots, Histogram};
use crate::rotation::{
    AngleSchedule, PiMultiple, RotationOperator, ScheduleKind, SignMatrix, SignVariant,
};
use crate::statevector::{
    draw, walsh_hadamard, ArraySpec, Ensemble, PureState, Register, RegisterLayout,
};

/// Outcome probabilities and post-measurement state at one node of the record tree.
type Node = Arc<(Vec<f64>, PureState)>;

/// Cycle count at which the null-element probability reaches its plateau.
pub const NULL_ELEMENT_DEFAULT_CYCLES: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Nearest,
    ExactMatch,
    Filter { exclude: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub array: ArraySpec,
    pub schedule: AngleSchedule,
    pub signs: SignVariant,
    pub mode: SearchMode,
    /// Extra measure/rotate (or measure/redistribute/rotate) cycles.
    pub cycles: u32,
}

impl SearchConfig {
    /// Nearest-value search with the default schedule, doubling signs and one re-measurement cycle.
    pub fn nearest(array: ArraySpec) -> Self {
        let schedule = AngleSchedule::default_for(array.n_bits());
        Self {
            array,
            schedule,
            signs: SignVariant::Doubling,
            mode: SearchMode::Nearest,
            cycles: 1,
        }
    }

    pub fn exact_match(array: ArraySpec) -> Self {
        Self {
            array,
            schedule: AngleSchedule::exact_match(),
            signs: SignVariant::Doubling,
            mode: SearchMode::ExactMatch,
            cycles: NULL_ELEMENT_DEFAULT_CYCLES,
        }
    }

    pub fn with_signs(mut self, signs: SignVariant) -> Self {
        self.signs = signs;
        self
    }

    pub fn with_schedule(mut self, schedule: AngleSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_cycles(mut self, cycles: u32) -> Self {
        self.cycles = cycles;
        self
    }

    pub fn sign_matrix(&self) -> Result<SignMatrix> {
        SignMatrix::build(self.array.counter_bits(), self.signs)
    }
}

/// Counter distribution together with the state that produced it.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub state: PureState,
    pub distribution: Vec<f64>,
}

/// Applies one full rotation pass for `target`.
///
/// Per-bit schedules rotate the counter bit by bit, most significant first,
/// in branches where the data bit differs from the target bit. The
/// exact-match schedule rotates by π in every branch whose data differs from
/// the target.
pub fn rotation_pass(
    state: &mut PureState,
    target: u64,
    schedule: &AngleSchedule,
    signs: &SignMatrix,
) -> Result<()> {
    let n = state.layout().n_data_bits();
    schedule.check_width(n)?;
    match schedule.kind() {
        ScheduleKind::PerBit(angles) => {
            for (i, angle) in angles.iter().enumerate() {
                if angle.0 == 0.0 {
                    continue;
                }
                let bit = n - 1 - i as u32;
                let op = RotationOperator::new(signs, angle.radians())?;
                state.apply_conditioned_rotation(bit, (target >> bit) & 1 == 1, &op)?;
            }
        }
        ScheduleKind::ExactMatch => {
            let op = RotationOperator::new(signs, PiMultiple::ONE.radians())?.to_complex();
            state.apply_counter_operator_where(&op, |data, _| data != target)?;
        }
    }
    Ok(())
}

fn normalized_distribution(state: &PureState) -> Result<Vec<f64>> {
    state.check_normalized()?;
    Ok(state.marginal(Register::Counter))
}

/// Load, one rotation pass, read the counter marginal.
pub fn single_call_search(config: &SearchConfig) -> Result<SearchOutcome> {
    if config.mode != SearchMode::Nearest {
        return Err(Error::Precondition(
            "single-call search runs in nearest mode".to_string(),
        ));
    }
    config.schedule.check_width(config.array.n_bits())?;
    let signs = config.sign_matrix()?;
    let layout = RegisterLayout::for_array(&config.array, 0)?;
    let mut state = PureState::load(&config.array, layout)?;
    rotation_pass(&mut state, config.array.target(), &config.schedule, &signs)?;
    let distribution = normalized_distribution(&state)?;
    Ok(SearchOutcome {
        state,
        distribution,
    })
}

/// First and final counter histograms of the re-measurement protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceRun {
    pub first: Histogram,
    pub second: Histogram,
}

fn prepared_state(config: &SearchConfig, signs: &SignMatrix) -> Result<PureState> {
    config.schedule.check_width(config.array.n_bits())?;
    let layout = RegisterLayout::for_array(&config.array, 0)?;
    let mut state = PureState::load(&config.array, layout)?;
    rotation_pass(&mut state, config.array.target(), &config.schedule, signs)?;
    Ok(state)
}

/// Exact first- and final-measurement distributions of the re-measurement protocol.
pub fn decoherence_exact(config: &SearchConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    if config.cycles == 0 {
        return Err(Error::Precondition(
            "re-measurement needs at least one cycle".to_string(),
        ));
    }
    let signs = config.sign_matrix()?;
    let state = prepared_state(config, &signs)?;
    let first = normalized_distribution(&state)?;
    let mut ensemble = Ensemble::pure(state);
    for _ in 0..config.cycles {
        ensemble.measure(Register::Counter)?;
        ensemble
            .try_for_each(|s| rotation_pass(s, config.array.target(), &config.schedule, &signs))?;
    }
    let last = ensemble.marginal(Register::Counter);
    Ok((first, last))
}

/// Per shot: load once, rotate, measure the counter (collapsing it), repeat the
/// rotation pass without reloading `cycles` times with a measurement after
/// each, and record the first and last outcomes.
///
/// The collapsed state only depends on the outcomes seen so far, so states
/// are cached per outcome path and shared between shots.
pub fn decoherence_protocol(
    config: &SearchConfig,
    shots: u64,
    seed: u64,
) -> Result<DecoherenceRun> {
    let (exact_first, exact_last) = decoherence_exact(config)?;
    let signs = config.sign_matrix()?;
    let root = prepared_state(config, &signs)?;
    let dim = config.array.len();
    let cache: Mutex<HashMap<Vec<usize>, Node>> = Mutex::new(HashMap::new());

    let node = |path: &[usize], parent: &PureState| -> Result<Node> {
        if let Some(hit) = cache.lock().expect("cache poisoned").get(path) {
            return Ok(hit.clone());
        }
        let (_, mut next) =
            parent.collapse(Register::Counter, *path.last().expect("non-empty path"))?;
        rotation_pass(&mut next, config.array.target(), &config.schedule, &signs)?;
        let entry = Arc::new((next.marginal(Register::Counter), next));
        cache
            .lock()
            .expect("cache poisoned")
            .insert(path.to_vec(), entry.clone());
        Ok(entry)
    };

    let root_probs = root.marginal(Register::Counter);
    let counts = sample_shots(shots, seed, 2, dim, |rng| {
        let mut path = Vec::with_capacity(config.cycles as usize + 1);
        let first = draw(&root_probs, rng);
        path.push(first);
        let mut current = node(&path, &root)?;
        for _ in 1..config.cycles {
            let o = draw(&current.0, rng);
            path.push(o);
            let parent = current.1.clone();
            current = node(&path, &parent)?;
        }
        Ok(vec![first, draw(&current.0, rng)])
    })?;
    let mut counts = counts.into_iter();
    Ok(DecoherenceRun {
        first: Histogram::new(counts.next().unwrap_or_default(), seed, Some(exact_first))?,
        second: Histogram::new(counts.next().unwrap_or_default(), seed, Some(exact_last))?,
    })
}

/// Result of the null-element procedure: an exact mixture over measurement records.
#[derive(Debug, Clone)]
pub struct NullElementOutcome {
    pub ensemble: Ensemble,
    pub distribution: Vec<f64>,
    pub match_index: usize,
    pub cycles: u32,
}

const MISMATCH_FLAG: u64 = 1;
const MATCH_MARKER: u64 = 1 << 1;
const RELOAD_FLAG: u64 = 1 << 2;
const RELOAD_SHIFT: u32 = 3;

/// Exact-match search for the unique element equal to the target.
///
/// Ancilla layout: bit 0 mismatch flag, bit 1 match marker, bit 2 reload
/// flag, bits `3..3+n` the reload register. Steps:
///
/// 1. load the array;
/// 2. comparator `C ≠ B` into the mismatch flag, then `A(π)` on the counter where it is set;
/// 3. comparator `C = B` into the match marker;
/// 4. each cycle: measure the counter; Hadamard every counter qubit in the
///    unmarked branch to spread amplitude the mismatches left on the counter;
///    measure again; reload the element at the current counter value into the
///    reload register, compare it with the target into the reload flag and
///    rotate the counter by `A(π)` where the flag is set; measure and reset the
///    reload qubits (they hold a definite value at that point).
///
/// The counter state of the matching element is never rotated by a reload, so
/// it only ever receives amplitude.
pub fn null_element_procedure(config: &SearchConfig) -> Result<NullElementOutcome> {
    if config.mode != SearchMode::ExactMatch {
        return Err(Error::Precondition(
            "null-element procedure runs in exact-match mode".to_string(),
        ));
    }
    let array = &config.array;
    let target = array.target();
    let matches = array.positions_of(target);
    if matches.len() != 1 {
        return Err(Error::Precondition(format!(
            "null-element procedure needs exactly one element equal to {target}, found {}",
            matches.len()
        )));
    }
    let n = array.n_bits();
    let signs = config.sign_matrix()?;
    let layout = RegisterLayout::for_array(array, RELOAD_SHIFT + n)?;
    let flip = RotationOperator::new(&signs, PiMultiple::ONE.radians())?.to_complex();
    let hadamard = walsh_hadamard(array.counter_bits());

    let mut state = PureState::load(array, layout)?;
    state.xor_ancilla(|data, _, _| if data != target { MISMATCH_FLAG } else { 0 })?;
    state.apply_counter_operator_where(&flip, |_, anc| anc & MISMATCH_FLAG != 0)?;
    state.xor_ancilla(|data, _, _| if data == target { MATCH_MARKER } else { 0 })?;
    state.check_normalized()?;

    let elements = array.elements().to_vec();
    let reload_mask = ((1u64 << n) - 1) << RELOAD_SHIFT;
    let mut ensemble = Ensemble::pure(state);
    for _ in 0..config.cycles {
        ensemble.measure(Register::Counter)?;
        ensemble.try_for_each(|s| {
            s.apply_counter_operator_where(&hadamard, |_, anc| anc & MATCH_MARKER == 0)
        })?;
        ensemble.measure(Register::Counter)?;
        ensemble.try_for_each(|s| {
            s.xor_ancilla(|_, counter, _| elements[counter] << RELOAD_SHIFT)?;
            s.xor_ancilla(|_, _, anc| {
                if (anc & reload_mask) >> RELOAD_SHIFT != target {
                    RELOAD_FLAG
                } else {
                    0
                }
            })?;
            s.apply_counter_operator_where(&flip, |_, anc| anc & RELOAD_FLAG != 0)
        })?;
        ensemble.measure_and_reset(reload_mask | RELOAD_FLAG)?;
    }
    let distribution = ensemble.marginal(Register::Counter);
    let total: f64 = distribution.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Invariant(format!(
            "null-element mixture lost weight: {total}"
        )));
    }
    Ok(NullElementOutcome {
        ensemble,
        distribution,
        match_index: matches[0],
        cycles: config.cycles,
    })
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub state: PureState,
    pub distribution: Vec<f64>,
    /// Counter indices whose element equals the excluded value.
    pub excluded: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Rotates the counter by `A(π)` in the branch whose data equals `exclude`.
///
/// With a single matching element the excluded counter state keeps
/// `cos(π/2) = 0` of its amplitude, so its probability is exactly zero.
pub fn filter_exclude(
    array: &ArraySpec,
    exclude: u64,
    signs: SignVariant,
) -> Result<FilterOutcome> {
    if exclude >> array.n_bits() != 0 {
        return Err(Error::Config(format!(
            "excluded value {exclude} does not fit in {} bits",
            array.n_bits()
        )));
    }
    let signs = SignMatrix::build(array.counter_bits(), signs)?;
    let layout = RegisterLayout::for_array(array, 0)?;
    let mut state = PureState::load(array, layout)?;
    let excluded = array.positions_of(exclude);
    let mut warnings = Vec::new();
    match excluded.len() {
        0 => {
            let msg = format!("no element equals {exclude}; filter is a no-op");
            log::warn!("{msg}");
            warnings.push(msg);
        }
        1 => {}
        k => {
            let msg = format!(
                "{k} elements equal {exclude}; their counter columns interfere and may not all reach zero"
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    if !excluded.is_empty() {
        let op = RotationOperator::new(&signs, PiMultiple::ONE.radians())?.to_complex();
        state.apply_counter_operator_where(&op, |data, _| data == exclude)?;
    }
    let distribution = normalized_distribution(&state)?;
    Ok(FilterOutcome {
        state,
        distribution,
        excluded,
        warnings,
    })
}

/// Re-measurement run focused on the element farthest from the target.
#[derive(Debug, Clone)]
pub struct RemeasureFilterReport {
    pub run: DecoherenceRun,
    /// Counter index of the element with the largest total angle.
    pub outlier: usize,
    pub first_frequency: f64,
    pub second_frequency: f64,
    pub exact_first: f64,
    pub exact_second: f64,
}

/// Runs [`decoherence_protocol`] and reports how the outlier's bin changes
/// between the first and the final measurement.
pub fn nearest_with_remeasure_filter(
    config: &SearchConfig,
    shots: u64,
    seed: u64,
) -> Result<RemeasureFilterReport> {
    let target = config.array.target();
    let mut outlier = 0;
    let mut widest = PiMultiple(-1.0);
    for (k, &v) in config.array.elements().iter().enumerate() {
        let angle = config.schedule.total_angle(v, target)?;
        if angle > widest {
            widest = angle;
            outlier = k;
        }
    }
    let run = decoherence_protocol(config, shots, seed)?;
    let exact = |h: &Histogram| h.exact_probs().map(|p| p[outlier]).unwrap_or(f64::NAN);
    Ok(RemeasureFilterReport {
        first_frequency: run.first.frequency(outlier),
        second_frequency: run.second.frequency(outlier),
        exact_first: exact(&run.first),
        exact_second: exact(&run.second),
        outlier,
        run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn array(values: &[u64], target: u64, n: u32) -> ArraySpec {
        ArraySpec::new(values.to_vec(), target, n).unwrap()
    }

    #[test]
    fn msb_rotation_touches_only_mismatching_branches() {
        let a = array(&[15, 14, 6, 0], 0, 4);
        let layout = RegisterLayout::for_array(&a, 0).unwrap();
        let loaded = PureState::load(&a, layout).unwrap();
        let mut rotated = loaded.clone();
        let signs = SignMatrix::build(2, SignVariant::Reference4).unwrap();
        let op = RotationOperator::new(&signs, std::f64::consts::FRAC_PI_2).unwrap();
        rotated.apply_conditioned_rotation(3, false, &op).unwrap();
        for d in 0..4 {
            assert_eq!(
                rotated.amplitude(0b0110, d, 0),
                loaded.amplitude(0b0110, d, 0)
            );
            assert_eq!(
                rotated.amplitude(0b0000, d, 0),
                loaded.amplitude(0b0000, d, 0)
            );
        }
        assert!(
            (rotated.amplitude(0b1111, 0, 0).re - 0.5 * (std::f64::consts::PI / 4.0).cos()).abs()
                < 1e-15
        );
        assert!(rotated.amplitude(0b1111, 1, 0).norm() > 0.1);
        assert!((rotated.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_rotation_leaves_state_alone() {
        let a = array(&[15, 14, 6, 0], 0, 4);
        let mut s = PureState::load(&a, RegisterLayout::for_array(&a, 0).unwrap()).unwrap();
        let before = s.clone();
        let op = RotationOperator::new(&SignMatrix::build(2, SignVariant::Doubling).unwrap(), 0.0)
            .unwrap();
        s.apply_conditioned_rotation(2, false, &op).unwrap();
        assert_eq!(s, before);
        assert!(s.apply_conditioned_rotation(4, false, &op).is_err());
    }

    #[test]
    fn single_call_reference_distribution() {
        let cfg =
            SearchConfig::nearest(array(&[15, 14, 6, 0], 0, 4)).with_signs(SignVariant::Reference4);
        let out = single_call_search(&cfg).unwrap();
        let expect = [0.108_285_01, 0.117_769_30, 0.335_529_80, 0.438_415_89];
        for (p, e) in out.distribution.iter().zip(expect) {
            assert!((p - e).abs() < 1e-8);
        }
    }

    #[test]
    fn all_elements_equal_target_stay_uniform() {
        let cfg = SearchConfig::nearest(array(&[5, 5, 5, 5, 5, 5, 5, 5], 5, 3));
        let out = single_call_search(&cfg).unwrap();
        assert!(out.distribution.iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn schedule_width_mismatch_is_rejected() {
        let cfg = SearchConfig::nearest(array(&[3, 2, 1, 0], 0, 2))
            .with_schedule(AngleSchedule::default_for(3));
        assert!(matches!(single_call_search(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_anomaly_reference_values() {
        let cfg = SearchConfig::nearest(array(&[15, 15, 15, 0], 0, 4))
            .with_signs(SignVariant::Reference4);
        let p = single_call_search(&cfg).unwrap().distribution;
        // (a−2b)²/4, a²/4, (a+2b)²/4, b²/4 + 1/4 with a = cos(15π/32), b = sin(15π/32)/√3
        let expect = [0.276_215_00, 0.002_401_84, 0.388_850_44, 0.332_532_72];
        for (x, e) in p.iter().zip(expect) {
            assert!((x - e).abs() < 1e-8, "{x} vs {e}");
        }
    }

    #[test]
    fn decoherence_needs_a_cycle() {
        let cfg = SearchConfig::nearest(array(&[15, 15, 15, 0], 0, 4)).with_cycles(0);
        assert!(matches!(
            decoherence_exact(&cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn decoherence_is_seed_deterministic() {
        let cfg = SearchConfig::nearest(array(&[15, 15, 15, 0], 0, 4))
            .with_signs(SignVariant::Reference4);
        let a = decoherence_protocol(&cfg, 20_000, 4).unwrap();
        let b = decoherence_protocol(&cfg, 20_000, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decoherence_on_distinct_elements_is_well_defined() {
        let cfg = SearchConfig::nearest(array(&[15, 14, 6, 0], 0, 4)).with_cycles(2);
        let (first, last) = decoherence_exact(&cfg).unwrap();
        assert!((first.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((last.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_angle_elements_stay_symmetric() {
        let flat = AngleSchedule::per_bit("flat", vec![PiMultiple(0.25); 4]).unwrap();
        let cfg = SearchConfig::nearest(array(&[1, 2, 4, 8], 0, 4)).with_schedule(flat);
        let (first, second) = decoherence_exact(&cfg).unwrap();
        for p in [&first, &second] {
            assert!(p.iter().all(|x| (x - p[0]).abs() < 1e-12), "{p:?}");
        }
    }

    #[test]
    fn filter_drives_excluded_bin_to_zero() {
        let a = array(&[6, 0, 7, 9, 11, 2, 13, 15], 0, 4);
        let out = filter_exclude(&a, 15, SignVariant::Doubling).unwrap();
        assert!(out.distribution[7].abs() < 1e-12);
        for p in &out.distribution[..7] {
            assert!((p - 1.0 / 7.0).abs() < 1e-12);
        }
        assert!(out.warnings.is_empty());
    }

    #[test]
    fn filter_without_match_is_a_noop() {
        let a = array(&[6, 0, 7, 9, 11, 2, 13, 15], 0, 4);
        let out = filter_exclude(&a, 4, SignVariant::Doubling).unwrap();
        assert!(out.distribution.iter().all(|p| (p - 0.125).abs() < 1e-15));
        assert_eq!(out.warnings.len(), 1);
        assert!(filter_exclude(&a, 16, SignVariant::Doubling).is_err());
    }

    #[test]
    fn filter_flags_duplicates() {
        let a = array(&[15, 0, 7, 15], 0, 4);
        let out = filter_exclude(&a, 15, SignVariant::Doubling).unwrap();
        assert_eq!(out.excluded, vec![0, 3]);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn null_element_rejects_bad_match_counts() {
        let none = SearchConfig::exact_match(array(&[1, 1, 1, 1], 0, 1));
        assert!(matches!(
            null_element_procedure(&none),
            Err(Error::Precondition(_))
        ));
        let two = SearchConfig::exact_match(array(&[0, 1, 0, 1], 0, 1));
        assert!(matches!(
            null_element_procedure(&two),
            Err(Error::Precondition(_))
        ));
        let wrong_mode = SearchConfig::nearest(array(&[0, 1, 1, 1], 0, 1));
        assert!(matches!(
            null_element_procedure(&wrong_mode),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn null_element_without_cycles_on_distinct_mismatches_doubles() {
        // Distinct mismatches cannot interfere: the match keeps 1/M and collects
        // (M−1)/M · 1/(M−1) from the rest.
        let cfg = SearchConfig::exact_match(array(&[5, 1, 2, 0, 4, 3, 7, 6], 0, 3)).with_cycles(0);
        let out = null_element_procedure(&cfg).unwrap();
        assert!((out.distribution[3] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn null_element_without_cycles_on_identical_mismatches_interferes() {
        // All mismatches share one data state; the match bin gets
        // 1/M + (Σ_{k≠z} S_zk)² / (M(M−1)). Row 3 of the doubling pattern sums to ±1.
        let cfg = SearchConfig::exact_match(array(&[1, 1, 1, 0, 1, 1, 1, 1], 0, 1)).with_cycles(0);
        let out = null_element_procedure(&cfg).unwrap();
        let s = SignMatrix::build(3, SignVariant::Doubling).unwrap();
        let row: i64 = (0..8).filter(|&k| k != 3).map(|k| s.get(3, k) as i64).sum();
        let expect = 1.0 / 8.0 + (row * row) as f64 / 56.0;
        assert!((out.distribution[3] - expect).abs() < 1e-12);
    }

    #[test]
    fn null_element_plateau_is_three_minus_two_over_m() {
        for (m_bits, zero_at) in [(3u32, 3usize), (3, 0), (4, 3), (4, 11)] {
            let m = 1usize << m_bits;
            let mut values = vec![1u64; m];
            values[zero_at] = 0;
            for signs in [SignVariant::Doubling] {
                for cycles in 1..=2 {
                    let cfg = SearchConfig::exact_match(array(&values, 0, 1))
                        .with_signs(signs)
                        .with_cycles(cycles);
                    let out = null_element_procedure(&cfg).unwrap();
                    let expect = (3.0 - 2.0 / m as f64) / m as f64;
                    assert!(
                        (out.distribution[zero_at] - expect).abs() < 1e-10,
                        "M={m} z={zero_at} c={cycles}"
                    );
                }
            }
        }
    }

    #[test]
    fn remeasure_filter_suppresses_a_moderate_outlier() {
        let cfg = SearchConfig::nearest(array(&[1, 0, 2, 1, 3, 0, 2, 8], 0, 4));
        let r = nearest_with_remeasure_filter(&cfg, 100_000, 17).unwrap();
        assert_eq!(r.outlier, 7);
        assert!(r.exact_second < r.exact_first);
        assert!(r.second_frequency < r.first_frequency);
    }

    #[test]
    fn remeasure_filter_outlier_equal_to_target_is_not_suppressed() {
        let cfg = SearchConfig::nearest(array(&[1, 0, 2, 1, 3, 0, 2, 0], 0, 4));
        let (first, second) = decoherence_exact(&cfg).unwrap();
        assert!(second[7] >= first[7]);
        assert!(first[7] >= 0.125 - 1e-12 || second[7] >= 0.125);
    }

    proptest! {
        #[test]
        fn sign_variants_agree_on_distinct_arrays(perm in Just((0u64..4).collect::<Vec<_>>()).prop_shuffle(), target in 0u64..16) {
            let values: Vec<u64> = perm.iter().map(|v| v * 3 + 1).collect();
            let a = ArraySpec::new(values, target, 4).unwrap();
            let p1 = single_call_search(&SearchConfig::nearest(a.clone()).with_signs(SignVariant::Reference4)).unwrap().distribution;
            let p2 = single_call_search(&SearchConfig::nearest(a).with_signs(SignVariant::Doubling)).unwrap().distribution;
            for (x, y) in p1.iter().zip(&p2) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
