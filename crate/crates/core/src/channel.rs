//! Iterated reload as a quantum channel on the counter.
//!
//! Each iteration loads a fresh copy of the array against the current
//! counter, rotates the counter and discards the copy. Tracing the copy out
//! leaves the Kraus map `ρ ↦ Σ_c K_c ρ K_cᵀ` with `K_c = A(φ(c))·Π_c`, where `Π_c`
//! projects onto the counter indices holding value `c`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rotation::{AngleSchedule, PiMultiple, RotationOperator, ScheduleKind, SignMatrix};
use crate::statevector::{ArraySpec, PureState, Register, RegisterLayout};

pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Density matrix over the counter register.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    rho: DMatrix<Complex64>,
}

impl DensityState {
    pub fn maximally_mixed(dim: usize) -> Self {
        let scale = Complex64::new(1.0 / dim as f64, 0.0);
        Self {
            rho: DMatrix::identity(dim, dim) * scale,
        }
    }

    /// Checked constructor.
    pub fn from_matrix(rho: DMatrix<Complex64>) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::Config(format!(
                "density matrix is {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let state = Self { rho };
        state.check()?;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.rho[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn hermitian_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.rho.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Trace one, Hermitian, no eigenvalue below the floor.
    pub fn check(&self) -> Result<()> {
        let trace = self.trace();
        if (trace - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::Invariant(format!("trace is {trace}")));
        }
        let herm = self.hermitian_defect();
        if herm > HERMITIAN_TOLERANCE {
            return Err(Error::Invariant(format!("not Hermitian: defect {herm:e}")));
        }
        let low = self.min_eigenvalue();
        if low < EIGENVALUE_FLOOR {
            return Err(Error::Invariant(format!("negative eigenvalue {low:e}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct KrausOperator {
    pub value: u64,
    pub angle: PiMultiple,
    /// Counter indices holding `value`.
    pub support: Vec<usize>,
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct ReloadChannel {
    kraus: Vec<KrausOperator>,
    dim: usize,
}

impl ReloadChannel {
    /// One Kraus operator per distinct value, in order of first appearance.
    pub fn build(array: &ArraySpec, schedule: &AngleSchedule, signs: &SignMatrix) -> Result<Self> {
        schedule.check_width(array.n_bits())?;
        let dim = array.len();
        if signs.dim() != dim {
            return Err(Error::Config(format!(
                "sign matrix is {0}x{0}, array has {dim} elements",
                signs.dim()
            )));
        }
        let mut kraus = Vec::new();
        for value in array.distinct_values() {
            let angle = schedule.total_angle(value, array.target())?;
            let rotation = RotationOperator::new(signs, angle.radians())?;
            let support = array.positions_of(value);
            let mut projector = DMatrix::<f64>::zeros(dim, dim);
            for &k in &support {
                projector[(k, k)] = 1.0;
            }
            kraus.push(KrausOperator {
                value,
                angle,
                support,
                matrix: rotation.matrix() * projector,
            });
        }
        let channel = Self { kraus, dim };
        let defect = channel.completeness_defect();
        if defect > 1e-12 {
            return Err(Error::Invariant(format!(
                "Kraus completeness defect {defect:e}"
            )));
        }
        Ok(channel)
    }

    pub fn kraus_ops(&self) -> &[KrausOperator] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest entry of `Σ KᵀK − I`.
    pub fn completeness_defect(&self) -> f64 {
        let mut sum = DMatrix::<f64>::zeros(self.dim, self.dim);
        for k in &self.kraus {
            sum += k.matrix.transpose() * &k.matrix;
        }
        (sum - DMatrix::<f64>::identity(self.dim, self.dim))
            .abs()
            .max()
    }

    pub fn apply(&self, rho: &DensityState) -> Result<DensityState> {
        if rho.dim() != self.dim {
            return Err(Error::Config(format!(
                "density matrix dim {} vs channel dim {}",
                rho.dim(),
                self.dim
            )));
        }
        let mut out = DMatrix::<Complex64>::zeros(self.dim, self.dim);
        for k in &self.kraus {
            let kc = k.matrix.map(|x| Complex64::new(x, 0.0));
            out += &kc * rho.matrix() * kc.transpose();
        }
        let next = DensityState { rho: out };
        next.check()?;
        Ok(next)
    }
}

/// Column-stochastic transition matrix of the counter distribution under
/// one reload, valid only when all elements are distinct.
pub fn markov_transition(array: &ArraySpec, schedule: &AngleSchedule) -> Result<DMatrix<f64>> {
    if !array.is_distinct() {
        return Err(Error::Precondition(
            "Markov reduction needs distinct elements".to_string(),
        ));
    }
    schedule.check_width(array.n_bits())?;
    let m = array.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for (k, &v) in array.elements().iter().enumerate() {
        let half = schedule.total_angle(v, array.target())?.radians() / 2.0;
        let (c2, s2) = (half.cos().powi(2), half.sin().powi(2));
        for j in 0..m {
            t[(j, k)] = if j == k { c2 } else { s2 / (m as f64 - 1.0) };
        }
    }
    Ok(t)
}

/// Counter marginal after each of `t` reloads, starting from `I/M`.
/// Iteration `i` uses `schedules[i]`; the last schedule repeats.
pub fn iterate(
    array: &ArraySpec,
    schedules: &[AngleSchedule],
    t: usize,
    signs: &SignMatrix,
) -> Result<Vec<Vec<f64>>> {
    if t == 0 {
        return Err(Error::Precondition(
            "at least one iteration is required".to_string(),
        ));
    }
    if schedules.is_empty() {
        return Err(Error::Config("no schedule given".to_string()));
    }
    let channels = schedules
        .iter()
        .map(|s| ReloadChannel::build(array, s, signs))
        .collect::<Result<Vec<_>>>()?;
    let mut rho = DensityState::maximally_mixed(array.len());
    let mut out = Vec::with_capacity(t);
    for i in 0..t {
        rho = channels[i.min(channels.len() - 1)].apply(&rho)?;
        out.push(rho.diagonal());
    }
    Ok(out)
}

/// Probability mass on counter indices whose element equals the target.
pub fn target_mass(array: &ArraySpec, distribution: &[f64]) -> f64 {
    array
        .positions_of(array.target())
        .iter()
        .map(|&k| distribution[k])
        .sum()
}

/// Marginals of the channel engine and of an explicit pure-state run side by side.
#[derive(Debug, Clone)]
pub struct CrossCheck {
    pub channel: Vec<Vec<f64>>,
    pub pure_state: Vec<Vec<f64>>,
    pub max_discrepancy: f64,
}

fn rotate_from<F>(
    state: &mut PureState,
    source: F,
    target: u64,
    schedule: &AngleSchedule,
    signs: &SignMatrix,
) -> Result<()>
where
    F: Fn(u64, u64) -> u64 + Copy,
{
    let n = state.layout().n_data_bits();
    match schedule.kind() {
        ScheduleKind::PerBit(angles) => {
            for (i, angle) in angles.iter().enumerate() {
                if angle.0 == 0.0 {
                    continue;
                }
                let bit = n - 1 - i as u32;
                let op = RotationOperator::new(signs, angle.radians())?.to_complex();
                state.apply_counter_operator_where(&op, |data, anc| {
                    ((source(data, anc) ^ target) >> bit) & 1 == 1
                })?;
            }
        }
        ScheduleKind::ExactMatch => {
            let op = RotationOperator::new(signs, PiMultiple::ONE.radians())?.to_complex();
            state.apply_counter_operator_where(&op, |data, anc| source(data, anc) != target)?;
        }
    }
    Ok(())
}

/// Runs `t ≤ 2` iterations with every register kept alive: the first pass
/// rotates from the original data register, the second reloads the array
/// into an appended register `C′` and rotates from it.
///
/// For distinct elements this agrees with [`iterate`]. With duplicates the
/// original load keeps coherence between equal elements that the channel's
/// uniform start does not have; the discrepancy is reported, not hidden.
pub fn pure_state_cross_check(
    array: &ArraySpec,
    schedules: &[AngleSchedule],
    t: usize,
    signs: &SignMatrix,
) -> Result<CrossCheck> {
    if !(1..=2).contains(&t) {
        return Err(Error::Precondition(format!(
            "pure-state cross-check supports 1 or 2 iterations, got {t}"
        )));
    }
    let channel = iterate(array, schedules, t, signs)?;
    let n = array.n_bits();
    let target = array.target();
    let schedule_at = |i: usize| &schedules[i.min(schedules.len() - 1)];
    let layout = RegisterLayout::for_array(array, if t == 2 { n } else { 0 })?;
    let mut state = PureState::load(array, layout)?;
    rotate_from(&mut state, |data, _| data, target, schedule_at(0), signs)?;
    let mut pure_state = vec![state.marginal(Register::Counter)];
    if t == 2 {
        let elements = array.elements();
        state.xor_ancilla(|_, counter, _| elements[counter])?;
        rotate_from(&mut state, |_, anc| anc, target, schedule_at(1), signs)?;
        pure_state.push(state.marginal(Register::Counter));
    }
    state.check_normalized()?;
    let max_discrepancy = channel
        .iter()
        .flatten()
        .zip(pure_state.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CrossCheck {
        channel,
        pure_state,
        max_discrepancy,
    })
}
