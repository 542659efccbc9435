//! Dense pure-state engine for the data (`C`), counter (`D`) and ancilla registers.
//!
//! Basis index layout: `data | counter << n | ancilla << (n + m)`, so the data
//! register occupies the low bits. Bit 0 is least significant in every register.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{config_err, Error, Result};
use crate::rotation::RotationOperator;

/// Norm tolerance for states handed between procedures.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Branches lighter than this are dropped when an ensemble is split by a measurement.
const BRANCH_CUTOFF: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Register {
    Data,
    Counter,
    Ancilla,
}

/// Qubit counts of the three registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    n_data_bits: u32,
    m_counter_bits: u32,
    n_ancilla: u32,
}

impl RegisterLayout {
    /// Largest total qubit count the dense engine accepts.
    pub const MAX_QUBITS: u32 = 26;

    pub fn new(n_data_bits: u32, m_counter_bits: u32, n_ancilla: u32) -> Result<Self> {
        if n_data_bits == 0 || m_counter_bits == 0 {
            return config_err("data and counter registers need at least one qubit each");
        }
        let total = n_data_bits as u64 + m_counter_bits as u64 + n_ancilla as u64;
        if total > Self::MAX_QUBITS as u64 {
            return config_err(format!(
                "{total} qubits requested, the dense engine is capped at {}",
                Self::MAX_QUBITS
            ));
        }
        Ok(Self {
            n_data_bits,
            m_counter_bits,
            n_ancilla,
        })
    }

    /// Layout sized for `array`, with `n_ancilla` extra qubits.
    pub fn for_array(array: &ArraySpec, n_ancilla: u32) -> Result<Self> {
        Self::new(array.n_bits(), array.counter_bits(), n_ancilla)
    }

    pub fn n_data_bits(&self) -> u32 {
        self.n_data_bits
    }

    pub fn m_counter_bits(&self) -> u32 {
        self.m_counter_bits
    }

    pub fn n_ancilla(&self) -> u32 {
        self.n_ancilla
    }

    pub fn total_qubits(&self) -> u32 {
        self.n_data_bits + self.m_counter_bits + self.n_ancilla
    }

    /// Number of counter states `M = 2^m`.
    pub fn counter_dim(&self) -> usize {
        1 << self.m_counter_bits
    }

    pub fn data_dim(&self) -> usize {
        1 << self.n_data_bits
    }

    pub fn ancilla_dim(&self) -> usize {
        1 << self.n_ancilla
    }

    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn register_dim(&self, register: Register) -> usize {
        match register {
            Register::Data => self.data_dim(),
            Register::Counter => self.counter_dim(),
            Register::Ancilla => self.ancilla_dim(),
        }
    }

    #[inline]
    pub fn index(&self, data: u64, counter: usize, ancilla: u64) -> usize {
        data as usize
            | counter << self.n_data_bits
            | (ancilla as usize) << (self.n_data_bits + self.m_counter_bits)
    }

    /// Inverse of [`RegisterLayout::index`]: `(data, counter, ancilla)`.
    #[inline]
    pub fn split(&self, index: usize) -> (u64, usize, u64) {
        let data = index & (self.data_dim() - 1);
        let counter = (index >> self.n_data_bits) & (self.counter_dim() - 1);
        let ancilla = index >> (self.n_data_bits + self.m_counter_bits);
        (data as u64, counter, ancilla as u64)
    }

    #[inline]
    fn component(&self, index: usize, register: Register) -> usize {
        let (data, counter, ancilla) = self.split(index);
        match register {
            Register::Data => data as usize,
            Register::Counter => counter,
            Register::Ancilla => ancilla as usize,
        }
    }
}

/// The classical input: `M = 2^m` unsigned `n`-bit values and the target `B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArraySpec {
    elements: Vec<u64>,
    target: u64,
    n_bits: u32,
}

impl ArraySpec {
    pub fn new(elements: Vec<u64>, target: u64, n_bits: u32) -> Result<Self> {
        if n_bits == 0 || n_bits > 32 {
            return config_err(format!("element width must be 1..=32 bits, got {n_bits}"));
        }
        let len = elements.len();
        if len < 2 || !len.is_power_of_two() {
            return config_err(format!(
                "array length must be a power of two and at least 2, got {len}"
            ));
        }
        let limit = 1u64 << n_bits;
        if let Some(bad) = elements.iter().find(|&&v| v >= limit) {
            return config_err(format!("element {bad} does not fit in {n_bits} bits"));
        }
        if target >= limit {
            return config_err(format!("target {target} does not fit in {n_bits} bits"));
        }
        Ok(Self {
            elements,
            target,
            n_bits,
        })
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn target(&self) -> u64 {
        self.target
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Counter qubits `m` with `2^m = len`.
    pub fn counter_bits(&self) -> u32 {
        self.elements.len().trailing_zeros()
    }

    pub fn is_distinct(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.len());
        self.elements.iter().all(|v| seen.insert(*v))
    }

    /// Counter indices holding `value`.
    pub fn positions_of(&self, value: u64) -> Vec<usize> {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == value)
            .map(|(k, _)| k)
            .collect()
    }

    /// Distinct values in order of first appearance.
    pub fn distinct_values(&self) -> Vec<u64> {
        let mut seen = std::collections::HashSet::new();
        self.elements
            .iter()
            .copied()
            .filter(|v| seen.insert(*v))
            .collect()
    }
}

/// Normalized amplitude vector over a [`RegisterLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    layout: RegisterLayout,
}

impl PureState {
    /// Builds `(1/√M) Σ_k |A_k⟩_C |k⟩_D |0…0⟩_anc` directly, without a gate sequence.
    pub fn load(array: &ArraySpec, layout: RegisterLayout) -> Result<Self> {
        if layout.n_data_bits() != array.n_bits() {
            return config_err(format!(
                "array uses {} data bits but the layout has {}",
                array.n_bits(),
                layout.n_data_bits()
            ));
        }
        if layout.counter_dim() != array.len() {
            return config_err(format!(
                "array has {} elements but the counter spans {} states",
                array.len(),
                layout.counter_dim()
            ));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        let amp = Complex64::new(1.0 / (array.len() as f64).sqrt(), 0.0);
        for (k, &value) in array.elements().iter().enumerate() {
            amplitudes[layout.index(value, k, 0)] = amp;
        }
        Ok(Self { amplitudes, layout })
    }

    /// Computational basis state `|data⟩|counter⟩|ancilla⟩`.
    pub fn basis(layout: RegisterLayout, data: u64, counter: usize, ancilla: u64) -> Result<Self> {
        if data as usize >= layout.data_dim()
            || counter >= layout.counter_dim()
            || ancilla as usize >= layout.ancilla_dim()
        {
            return config_err("basis label outside the register ranges");
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amplitudes[layout.index(data, counter, ancilla)] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, layout })
    }

    /// Wraps raw amplitudes; fails unless they are normalized within [`NORM_TOLERANCE`].
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return config_err(format!(
                "{} amplitudes supplied for a {}-dimensional layout",
                amplitudes.len(),
                layout.dim()
            ));
        }
        let state = Self { amplitudes, layout };
        state.check_normalized()?;
        Ok(state)
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, data: u64, counter: usize, ancilla: u64) -> Complex64 {
        self.amplitudes[self.layout.index(data, counter, ancilla)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let defect = (self.norm() - 1.0).abs();
        if defect > NORM_TOLERANCE {
            return Err(Error::Invariant(format!(
                "state norm drifted by {defect:e}"
            )));
        }
        Ok(())
    }

    /// Applies the `M×M` operator `op` to the counter inside every `(data, ancilla)`
    /// branch selected by `predicate`. Unselected branches are left bit-for-bit intact.
    pub fn apply_counter_operator_where<F>(
        &mut self,
        op: &DMatrix<Complex64>,
        predicate: F,
    ) -> Result<()>
    where
        F: Fn(u64, u64) -> bool,
    {
        let m_dim = self.layout.counter_dim();
        if op.nrows() != m_dim || op.ncols() != m_dim {
            return config_err(format!(
                "{}x{} operator applied to a {m_dim}-state counter",
                op.nrows(),
                op.ncols()
            ));
        }
        let stride = self.layout.data_dim();
        let block = stride * m_dim;
        let mut input = vec![Complex64::new(0.0, 0.0); m_dim];
        for ancilla in 0..self.layout.ancilla_dim() {
            for data in 0..stride {
                if !predicate(data as u64, ancilla as u64) {
                    continue;
                }
                let base = ancilla * block + data;
                let mut occupied = false;
                for (k, slot) in input.iter_mut().enumerate() {
                    *slot = self.amplitudes[base + k * stride];
                    occupied |= slot.re != 0.0 || slot.im != 0.0;
                }
                if !occupied {
                    continue;
                }
                for j in 0..m_dim {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, a) in input.iter().enumerate() {
                        acc += op[(j, k)] * a;
                    }
                    self.amplitudes[base + j * stride] = acc;
                }
            }
        }
        Ok(())
    }

    /// Rotates the counter in every branch whose data bit `data_bit` differs from `target_bit`.
    pub fn apply_conditioned_rotation(
        &mut self,
        data_bit: u32,
        target_bit: bool,
        op: &RotationOperator,
    ) -> Result<()> {
        if data_bit >= self.layout.n_data_bits() {
            return config_err(format!(
                "data bit {data_bit} out of range for a {}-bit register",
                self.layout.n_data_bits()
            ));
        }
        let matrix = op.to_complex();
        self.apply_counter_operator_where(&matrix, |data, _| {
            ((data >> data_bit) & 1 == 1) != target_bit
        })
    }

    /// XORs `f(data, counter, ancilla)` into the ancilla register.
    ///
    /// `f` must not depend on the ancilla bits it flips, which makes the map a
    /// permutation of basis states (comparators and register copies are of
    /// this form). A violation is reported as an invariant error.
    pub fn xor_ancilla<F>(&mut self, f: F) -> Result<()>
    where
        F: Fn(u64, usize, u64) -> u64,
    {
        let limit = self.layout.ancilla_dim() as u64;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            if amp.re == 0.0 && amp.im == 0.0 {
                continue;
            }
            let (data, counter, ancilla) = self.layout.split(index);
            let mask = f(data, counter, ancilla);
            if mask >= limit {
                return config_err(format!(
                    "ancilla mask {mask:#b} exceeds the ancilla register"
                ));
            }
            let flipped = ancilla ^ mask;
            if f(data, counter, flipped) != mask {
                return Err(Error::Invariant(
                    "ancilla update depends on the bits it writes".to_string(),
                ));
            }
            out[self.layout.index(data, counter, flipped)] = *amp;
        }
        self.amplitudes = out;
        Ok(())
    }

    /// Born-rule marginal of one register.
    pub fn marginal(&self, register: Register) -> Vec<f64> {
        let mut probs = vec![0.0; self.layout.register_dim(register)];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            let p = amp.norm_sqr();
            if p != 0.0 {
                probs[self.layout.component(index, register)] += p;
            }
        }
        probs
    }

    /// Projects `register` onto `outcome` and renormalizes. Returns the outcome
    /// probability together with the post-measurement state.
    pub fn collapse(&self, register: Register, outcome: usize) -> Result<(f64, PureState)> {
        if outcome >= self.layout.register_dim(register) {
            return config_err(format!("outcome {outcome} out of range"));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        let mut prob = 0.0;
        for (index, amp) in self.amplitudes.iter().enumerate() {
            if self.layout.component(index, register) == outcome {
                amplitudes[index] = *amp;
                prob += amp.norm_sqr();
            }
        }
        if prob <= f64::MIN_POSITIVE {
            return Err(Error::Invariant(format!(
                "projection onto outcome {outcome} has zero weight"
            )));
        }
        let scale = 1.0 / prob.sqrt();
        for amp in amplitudes.iter_mut() {
            *amp *= scale;
        }
        Ok((
            prob,
            PureState {
                amplitudes,
                layout: self.layout,
            },
        ))
    }

    /// Projective measurement of `register`: draws an outcome from the marginal
    /// and returns it with the collapsed state.
    pub fn measure<R: Rng + ?Sized>(
        &self,
        register: Register,
        rng: &mut R,
    ) -> Result<(usize, PureState)> {
        let probs = self.marginal(register);
        let outcome = draw(&probs, rng);
        let (_, collapsed) = self.collapse(register, outcome)?;
        Ok((outcome, collapsed))
    }

    /// Phase-normalized, quantized fingerprint used to merge identical ensemble branches.
    fn fingerprint(&self) -> Vec<(usize, i64, i64)> {
        const GRID: f64 = 1e9;
        let Some(lead) = self.amplitudes.iter().find(|a| a.norm() > 1e-12) else {
            return Vec::new();
        };
        let phase = lead.conj() / lead.norm();
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 1e-12)
            .map(|(i, a)| {
                let z = a * phase;
                (
                    i,
                    (z.re * GRID).round() as i64,
                    (z.im * GRID).round() as i64,
                )
            })
            .collect()
    }
}

/// Samples an index from a probability vector by inverse CDF.
pub(crate) fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
            acc += p;
            if u < acc {
                return i;
            }
        }
    }
    last_nonzero
}

/// `H^{⊗m}` on the counter, as an `2^m × 2^m` matrix.
pub fn walsh_hadamard(m_counter_bits: u32) -> DMatrix<Complex64> {
    let dim = 1usize << m_counter_bits;
    let scale = 1.0 / (dim as f64).sqrt();
    DMatrix::from_fn(dim, dim, |j, k| {
        let sign = if (j & k).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        Complex64::new(sign * scale, 0.0)
    })
}

/// A probabilistic mixture of pure states, produced by mid-circuit measurements.
///
/// Every branch is tracked exactly, so marginals of an ensemble are exact
/// probabilities rather than sampled frequencies. Branches that coincide up
/// to a global phase are merged after each measurement.
#[derive(Debug, Clone)]
pub struct Ensemble {
    branches: Vec<(f64, PureState)>,
}

impl Ensemble {
    pub fn pure(state: PureState) -> Self {
        Self {
            branches: vec![(1.0, state)],
        }
    }

    pub fn branches(&self) -> &[(f64, PureState)] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|(w, _)| w).sum()
    }

    /// Applies the same unitary step to every branch.
    pub fn try_for_each<F>(&mut self, mut step: F) -> Result<()>
    where
        F: FnMut(&mut PureState) -> Result<()>,
    {
        self.branches.iter_mut().try_for_each(|(_, s)| step(s))
    }

    /// Measures `register` in every branch, splitting each branch by outcome.
    pub fn measure(&mut self, register: Register) -> Result<()> {
        let mut next = Vec::new();
        for (weight, state) in &self.branches {
            for (outcome, p) in state.marginal(register).into_iter().enumerate() {
                if weight * p > BRANCH_CUTOFF {
                    let (_, collapsed) = state.collapse(register, outcome)?;
                    next.push((weight * p, collapsed));
                }
            }
        }
        self.branches = merge(next);
        Ok(())
    }

    /// Measures the ancilla bits in `mask` and resets them to zero.
    pub fn measure_and_reset(&mut self, mask: u64) -> Result<()> {
        let mut next = Vec::new();
        for (weight, state) in &self.branches {
            let layout = state.layout();
            let mut groups: Vec<(u64, f64)> = Vec::new();
            for (index, amp) in state.amplitudes().iter().enumerate() {
                let p = amp.norm_sqr();
                if p == 0.0 {
                    continue;
                }
                let value = layout.split(index).2 & mask;
                match groups.iter_mut().find(|(v, _)| *v == value) {
                    Some((_, acc)) => *acc += p,
                    None => groups.push((value, p)),
                }
            }
            for (value, p) in groups {
                if weight * p <= BRANCH_CUTOFF {
                    continue;
                }
                let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
                let scale = 1.0 / p.sqrt();
                for (index, amp) in state.amplitudes().iter().enumerate() {
                    let (data, counter, ancilla) = layout.split(index);
                    if ancilla & mask == value {
                        amplitudes[layout.index(data, counter, ancilla ^ value)] = amp * scale;
                    }
                }
                next.push((weight * p, PureState { amplitudes, layout }));
            }
        }
        self.branches = merge(next);
        Ok(())
    }

    /// Exact weighted marginal over all branches.
    pub fn marginal(&self, register: Register) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for (weight, state) in &self.branches {
            let probs = state.marginal(register);
            if out.is_empty() {
                out = vec![0.0; probs.len()];
            }
            for (o, p) in out.iter_mut().zip(probs) {
                *o += weight * p;
            }
        }
        out
    }
}

fn merge(branches: Vec<(f64, PureState)>) -> Vec<(f64, PureState)> {
    let mut merged: Vec<(f64, PureState)> = Vec::with_capacity(branches.len());
    let mut slots: HashMap<Vec<(usize, i64, i64)>, usize> = HashMap::new();
    for (weight, state) in branches {
        let key = state.fingerprint();
        match slots.get(&key) {
            Some(&slot) => merged[slot].0 += weight,
            None => {
                slots.insert(key, merged.len());
                merged.push((weight, state));
            }
        }
    }
    merged
}
