//! Counter rotation operators `A(φ) = cos(φ/2)·I + sin(φ/2)/√(d−1)·S`.
//!
//! `S` is a `{0, ±1}` sign matrix with zero diagonal, `S = −Sᵀ` and
//! `S·Sᵀ = (d−1)·I`. Those three properties make `S/√(d−1)` a real
//! orthogonal square root of `−I`, so `A(φ) = exp(φ/2 · S/√(d−1))` is
//! orthogonal and `A(φ₁)·A(φ₂) = A(φ₁ + φ₂)`. The per-bit rotations of a
//! schedule therefore compose into one rotation by the summed angle.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

const REFERENCE_SIGNS_4: &str = include_str!("../assets/signs_d4.txt");
const REFERENCE_SIGNS_8: &str = include_str!("../assets/signs_d8.txt");

/// Which sign pattern fills the off-diagonal of a rotation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignVariant {
    /// Skew doubling recursion seeded at order 2; any `1 ≤ m ≤ 6`.
    Doubling,
    /// The fixed reference 4×4 pattern (`m = 2`).
    Reference4,
    /// The fixed reference 8×8 exact-match pattern (`m = 3`).
    Reference8,
}

impl SignVariant {
    /// The fixed reference pattern for `m` counter qubits, if one exists.
    pub fn reference_for(m: u32) -> Option<SignVariant> {
        match m {
            2 => Some(SignVariant::Reference4),
            3 => Some(SignVariant::Reference8),
            _ => None,
        }
    }
}

impl fmt::Display for SignVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SignVariant::Doubling => "doubling",
            SignVariant::Reference4 => "reference-4",
            SignVariant::Reference8 => "reference-8",
        };
        f.write_str(name)
    }
}

/// Square `{0, ±1}` matrix driving the off-diagonal of [`RotationOperator`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignMatrix {
    dim: usize,
    entries: Vec<i8>,
    variant: SignVariant,
}

impl SignMatrix {
    /// Builds the sign matrix for `m` counter qubits and checks every invariant.
    pub fn build(m: u32, variant: SignVariant) -> Result<Self> {
        if !(1..=6).contains(&m) {
            return config_err(format!(
                "sign matrices are built for 1 ≤ m ≤ 6, got m = {m}"
            ));
        }
        let matrix = match variant {
            SignVariant::Doubling => Self::doubling(m),
            SignVariant::Reference4 if m == 2 => {
                Self::from_rows(parse_sign_rows(REFERENCE_SIGNS_4)?, variant)?
            }
            SignVariant::Reference8 if m == 3 => {
                Self::from_rows(parse_sign_rows(REFERENCE_SIGNS_8)?, variant)?
            }
            _ => return config_err(format!("sign variant {variant} is not defined for m = {m}")),
        };
        matrix.check()?;
        Ok(matrix)
    }

    fn doubling(m: u32) -> Self {
        // H = I + W, grown as [[H, H], [−Hᵀ, Hᵀ]].
        let mut h = vec![vec![1i8, 1], vec![-1, 1]];
        for _ in 1..m {
            let d = h.len();
            let mut next = vec![vec![0i8; 2 * d]; 2 * d];
            for i in 0..d {
                for j in 0..d {
                    next[i][j] = h[i][j];
                    next[i][j + d] = h[i][j];
                    next[i + d][j] = -h[j][i];
                    next[i + d][j + d] = h[j][i];
                }
            }
            h = next;
        }
        let dim = h.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in h.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                entries.push(if i == j { v - 1 } else { v });
            }
        }
        Self {
            dim,
            entries,
            variant: SignVariant::Doubling,
        }
    }

    /// Wraps explicit rows. Only shape and the `{0, ±1}` alphabet are checked;
    /// use [`SignMatrix::check`] or [`validate_operator`] for the structure.
    pub fn from_rows(rows: Vec<Vec<i8>>, variant: SignVariant) -> Result<Self> {
        let dim = rows.len();
        if dim < 2 {
            return config_err("sign matrix needs at least two rows");
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for row in &rows {
            if row.len() != dim {
                return config_err("sign matrix rows must form a square");
            }
            if let Some(v) = row.iter().find(|v| !(-1..=1).contains(*v)) {
                return config_err(format!("sign entry {v} is not in {{0, +1, -1}}"));
            }
            entries.extend_from_slice(row);
        }
        Ok(Self {
            dim,
            entries,
            variant,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> SignVariant {
        self.variant
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        self.entries.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    /// Copy with entry `(i, j)` replaced; the result is not re-validated.
    pub fn with_entry(&self, i: usize, j: usize, value: i8) -> Self {
        let mut out = self.clone();
        out.entries[i * self.dim + j] = value;
        out
    }

    /// `max |S_ij + S_ji|`, including the diagonal (which must be zero).
    pub fn antisymmetry_defect(&self) -> i64 {
        let mut worst = 0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.get(i, j) as i64 + self.get(j, i) as i64).abs());
            }
        }
        worst
    }

    /// `max |(S·Sᵀ − (d−1)·I)_ij|` in exact integer arithmetic.
    pub fn gram_defect(&self) -> i64 {
        let d = self.dim;
        let mut worst = 0;
        for i in 0..d {
            for j in 0..d {
                let dot: i64 = (0..d)
                    .map(|k| self.get(i, k) as i64 * self.get(j, k) as i64)
                    .sum();
                let expect = if i == j { d as i64 - 1 } else { 0 };
                worst = worst.max((dot - expect).abs());
            }
        }
        worst
    }

    pub fn check(&self) -> Result<()> {
        if !self.dim.is_power_of_two() {
            return config_err(format!(
                "sign matrix dimension {} is not a power of two",
                self.dim
            ));
        }
        if self.antisymmetry_defect() != 0 {
            return config_err("sign matrix is not antisymmetric with zero diagonal");
        }
        if self.gram_defect() != 0 {
            return config_err("sign matrix rows are not mutually orthogonal");
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j) as f64)
    }
}

impl fmt::Display for SignMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.entries.chunks(self.dim) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Parses whitespace-separated rows of `0`, `1`, `-1` (a leading `+` is accepted).
pub fn parse_sign_rows(text: &str) -> Result<Vec<Vec<i8>>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            line.split_whitespace()
                .map(|tok| {
                    tok.trim_start_matches('+')
                        .parse::<i8>()
                        .map_err(|_| Error::Config(format!("bad sign entry {tok:?}")))
                })
                .collect()
        })
        .collect()
}

/// Real orthogonal counter rotation by `phi ∈ [0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationOperator {
    phi: f64,
    matrix: DMatrix<f64>,
}

impl RotationOperator {
    /// Angles above π are rejected rather than wrapped: past π the retained
    /// amplitude starts growing back.
    pub fn new(sign: &SignMatrix, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&phi) {
            return Err(Error::Domain(format!(
                "rotation angle {phi} outside [0, π]"
            )));
        }
        let d = sign.dim();
        let a = (phi / 2.0).cos();
        let b = (phi / 2.0).sin() / ((d - 1) as f64).sqrt();
        let matrix = DMatrix::from_fn(
            d,
            d,
            |i, j| if i == j { a } else { b * sign.get(i, j) as f64 },
        );
        Ok(Self { phi, matrix })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.matrix.map(|v| Complex64::new(v, 0.0))
    }

    /// `max |(AᵀA − I)_ij|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let gram = self.matrix.transpose() * &self.matrix;
        max_abs_diff(&gram, &DMatrix::identity(self.dim(), self.dim()))
    }
}

/// Non-negative multiple of π. Dyadic schedule angles stay exact in `f64`,
/// so sums of schedule entries never drift.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PiMultiple(pub f64);

impl PiMultiple {
    pub const ZERO: PiMultiple = PiMultiple(0.0);
    pub const ONE: PiMultiple = PiMultiple(1.0);

    pub fn radians(self) -> f64 {
        self.0 * PI
    }
}

impl std::ops::Add for PiMultiple {
    type Output = PiMultiple;
    fn add(self, rhs: Self) -> Self {
        PiMultiple(self.0 + rhs.0)
    }
}

impl std::iter::Sum for PiMultiple {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(PiMultiple::ZERO, |a, b| a + b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// One angle per data bit, most significant bit first.
    PerBit(Vec<PiMultiple>),
    /// Rotate by π on any mismatch, 0 on an exact match.
    ExactMatch,
}

/// Per-bit rotation angles encoding the bitwise distance to the target.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSchedule {
    name: String,
    kind: ScheduleKind,
}

impl AngleSchedule {
    /// Schedule sums are allowed to exceed π by at most this (for decimal input).
    const SUM_SLACK: f64 = 1e-12;

    pub fn per_bit(name: impl Into<String>, angles: Vec<PiMultiple>) -> Result<Self> {
        if angles.is_empty() {
            return config_err("an angle schedule needs at least one bit");
        }
        if let Some(a) = angles.iter().find(|a| a.0 < 0.0 || !a.0.is_finite()) {
            return Err(Error::Domain(format!(
                "schedule angle {}π is negative or not finite",
                a.0
            )));
        }
        let total: PiMultiple = angles.iter().copied().sum();
        if total.0 > 1.0 + Self::SUM_SLACK {
            return Err(Error::Domain(format!(
                "schedule angles sum to {}π, which exceeds π",
                total.0
            )));
        }
        Ok(Self {
            name: name.into(),
            kind: ScheduleKind::PerBit(angles),
        })
    }

    /// π/2, π/4, … from the most significant bit down.
    pub fn default_for(n_bits: u32) -> Self {
        let angles = (1..=n_bits)
            .map(|i| PiMultiple(0.5f64.powi(i as i32)))
            .collect();
        Self {
            name: "default".to_string(),
            kind: ScheduleKind::PerBit(angles),
        }
    }

    /// π on the most significant bit, nothing else.
    pub fn highest_bit_pi(n_bits: u32) -> Self {
        let mut angles = vec![PiMultiple::ZERO; n_bits as usize];
        angles[0] = PiMultiple::ONE;
        Self {
            name: "highest-bit-pi".to_string(),
            kind: ScheduleKind::PerBit(angles),
        }
    }

    pub fn exact_match() -> Self {
        Self {
            name: "exact-match".to_string(),
            kind: ScheduleKind::ExactMatch,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    /// Per-bit angles, or `None` for the exact-match schedule.
    pub fn per_bit_angles(&self) -> Option<&[PiMultiple]> {
        match &self.kind {
            ScheduleKind::PerBit(a) => Some(a),
            ScheduleKind::ExactMatch => None,
        }
    }

    /// Fails unless the schedule covers exactly `n_bits` data bits.
    pub fn check_width(&self, n_bits: u32) -> Result<()> {
        match &self.kind {
            ScheduleKind::PerBit(a) if a.len() != n_bits as usize => config_err(format!(
                "schedule {:?} has {} angles for {n_bits}-bit data",
                self.name,
                a.len()
            )),
            _ => Ok(()),
        }
    }

    /// Sum of the angles over the bit positions where `value` and `target` differ.
    pub fn total_angle(&self, value: u64, target: u64) -> Result<PiMultiple> {
        match &self.kind {
            ScheduleKind::ExactMatch => Ok(if value == target {
                PiMultiple::ZERO
            } else {
                PiMultiple::ONE
            }),
            ScheduleKind::PerBit(angles) => {
                let n = angles.len() as u32;
                if n < 64 && (value >> n != 0 || target >> n != 0) {
                    return Err(Error::Domain(format!(
                        "values {value} and {target} must fit the {n}-bit schedule"
                    )));
                }
                let diff = value ^ target;
                let total = angles
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (diff >> (n - 1 - *i as u32)) & 1 == 1)
                    .map(|(_, a)| *a)
                    .sum::<PiMultiple>();
                Ok(PiMultiple(total.0.min(1.0)))
            }
        }
    }
}

/// Structural defects of a rotation family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorDiagnostics {
    /// `max |(S·Sᵀ − (d−1)I)_ij|`, exact.
    pub gram_defect: i64,
    /// `max |S_ij + S_ji|`, exact.
    pub antisymmetry_defect: i64,
    /// `max |(AᵀA − I)_ij|` of the operator under test.
    pub orthogonality_defect: f64,
    /// `max |(S²/(d−1) + I)_ij|`.
    pub square_defect: f64,
    /// Worst `max |A(φ₁)A(φ₂) − A(φ₁+φ₂)|` over the sampled pairs.
    pub group_defect: f64,
    pub sampled_pairs: usize,
}

impl OperatorDiagnostics {
    pub fn within(&self, tolerance: f64) -> bool {
        self.gram_defect == 0
            && self.antisymmetry_defect == 0
            && self.orthogonality_defect < tolerance
            && self.square_defect < tolerance
            && self.group_defect < tolerance
    }
}

/// Checks `op` and the family generated by `sign` on 64 seeded angle pairs.
pub fn validate_operator(op: &RotationOperator, sign: &SignMatrix) -> OperatorDiagnostics {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_a77e);
    let pairs: Vec<(f64, f64)> = (0..64)
        .map(|_| {
            let total = rng.gen_range(0.0..=PI);
            let split = rng.gen_range(0.0..=1.0);
            (total * split, total * (1.0 - split))
        })
        .collect();
    validate_operator_with(op, sign, &pairs)
}

/// Like [`validate_operator`] with caller-chosen angle pairs (each with `φ₁ + φ₂ ≤ π`).
pub fn validate_operator_with(
    op: &RotationOperator,
    sign: &SignMatrix,
    pairs: &[(f64, f64)],
) -> OperatorDiagnostics {
    let d = sign.dim();
    let s = sign.to_matrix();
    let square = &s * &s / (d - 1) as f64;
    let square_defect = max_abs_diff(&square, &(-DMatrix::<f64>::identity(d, d)));
    let mut group_defect: f64 = 0.0;
    let mut sampled = 0;
    for &(p1, p2) in pairs {
        let (Ok(a1), Ok(a2), Ok(a12)) = (
            RotationOperator::new(sign, p1),
            RotationOperator::new(sign, p2),
            RotationOperator::new(sign, (p1 + p2).min(PI)),
        ) else {
            continue;
        };
        let prod = a1.matrix() * a2.matrix();
        group_defect = group_defect.max(max_abs_diff(&prod, a12.matrix()));
        sampled += 1;
    }
    OperatorDiagnostics {
        gram_defect: sign.gram_defect(),
        antisymmetry_defect: sign.antisymmetry_defect(),
        orthogonality_defect: op.orthogonality_defect(),
        square_defect,
        group_defect,
        sampled_pairs: sampled,
    }
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_4_rows() {
        let s = SignMatrix::build(2, SignVariant::Reference4).unwrap();
        assert_eq!(
            s.rows(),
            vec![
                vec![0, -1, -1, -1],
                vec![1, 0, -1, 1],
                vec![1, 1, 0, -1],
                vec![1, -1, 1, 0]
            ]
        );
    }

    #[test]
    fn doubling_seed_is_order_two_skew() {
        let s = SignMatrix::build(1, SignVariant::Doubling).unwrap();
        assert_eq!(s.rows(), vec![vec![0, 1], vec![-1, 0]]);
    }

    #[test]
    fn doubling_holds_invariants_up_to_m6() {
        for m in 1..=6 {
            let s = SignMatrix::build(m, SignVariant::Doubling).unwrap();
            assert_eq!(s.dim(), 1 << m);
            assert_eq!(s.gram_defect(), 0);
            assert_eq!(s.antisymmetry_defect(), 0);
        }
    }

    #[test]
    fn unsupported_variant_pairs_are_rejected() {
        assert!(matches!(
            SignMatrix::build(3, SignVariant::Reference4),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SignMatrix::build(2, SignVariant::Reference8),
            Err(Error::Config(_))
        ));
        assert!(SignMatrix::build(0, SignVariant::Doubling).is_err());
        assert!(SignMatrix::build(7, SignVariant::Doubling).is_err());
    }

    #[test]
    fn zero_angle_is_identity() {
        for m in 1..=4 {
            let s = SignMatrix::build(m, SignVariant::Doubling).unwrap();
            let a = RotationOperator::new(&s, 0.0).unwrap();
            assert_eq!(a.matrix(), &DMatrix::identity(s.dim(), s.dim()));
        }
    }

    #[test]
    fn fifteen_sixteenths_pi_entries() {
        let s = SignMatrix::build(2, SignVariant::Reference4).unwrap();
        let a = RotationOperator::new(&s, 15.0 * PI / 16.0).unwrap();
        // cos(15π/32) and sin(15π/32)/√3
        let diag = 0.098_017_140_329_560_77;
        let off = 0.574_570_169_837_597;
        for i in 0..4 {
            for j in 0..4 {
                let v = a.matrix()[(i, j)];
                if i == j {
                    assert!((v - diag).abs() < 1e-12);
                } else {
                    assert!((v.abs() - off).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn angle_above_pi_is_a_domain_error() {
        let s = SignMatrix::build(2, SignVariant::Doubling).unwrap();
        assert!(matches!(
            RotationOperator::new(&s, PI + 1e-9),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            RotationOperator::new(&s, -0.1),
            Err(Error::Domain(_))
        ));
        assert!(RotationOperator::new(&s, PI).is_ok());
    }

    #[test]
    fn total_angle_examples() {
        let sched = AngleSchedule::default_for(4);
        assert_eq!(sched.total_angle(15, 0).unwrap(), PiMultiple(15.0 / 16.0));
        assert_eq!(sched.total_angle(14, 0).unwrap(), PiMultiple(14.0 / 16.0));
        assert_eq!(sched.total_angle(6, 0).unwrap(), PiMultiple(6.0 / 16.0));
        assert_eq!(sched.total_angle(9, 9).unwrap(), PiMultiple::ZERO);
        assert!(sched.total_angle(16, 0).is_err());
    }

    #[test]
    fn schedules_summing_past_pi_are_rejected() {
        let bad = AngleSchedule::per_bit("bad", vec![PiMultiple(0.75), PiMultiple(0.5)]);
        assert!(matches!(bad, Err(Error::Domain(_))));
        let neg = AngleSchedule::per_bit("neg", vec![PiMultiple(-0.1)]);
        assert!(matches!(neg, Err(Error::Domain(_))));
        assert!(AngleSchedule::per_bit("ok", vec![PiMultiple(0.5), PiMultiple(0.5)]).is_ok());
    }

    #[test]
    fn perturbed_sign_matrix_is_reported() {
        let s = SignMatrix::build(2, SignVariant::Reference4).unwrap();
        let bad = s.with_entry(1, 3, -1);
        let op = RotationOperator::new(&bad, 1.0).unwrap();
        let diag = validate_operator(&op, &bad);
        assert!(diag.gram_defect > 0);
        assert!(diag.antisymmetry_defect > 0);
        assert!(!diag.within(1e-12));
        assert!(bad.check().is_err());
    }

    #[test]
    fn columns_split_into_kept_and_spread_parts() {
        let s = SignMatrix::build(3, SignVariant::Doubling).unwrap();
        let phi = 1.234;
        let a = RotationOperator::new(&s, phi).unwrap();
        let keep = (phi / 2.0).cos();
        let spread = (phi / 2.0).sin() / 7f64.sqrt();
        for k in 0..8 {
            for j in 0..8 {
                let v = a.matrix()[(j, k)];
                if j == k {
                    assert!((v - keep).abs() < 1e-15);
                } else {
                    assert!((v.abs() - spread).abs() < 1e-15);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn group_property_holds(m in 1u32..=5, p1 in 0.0..PI, frac in 0.0f64..=1.0) {
            let p2 = (PI - p1) * frac;
            let s = SignMatrix::build(m, SignVariant::Doubling).unwrap();
            let a1 = RotationOperator::new(&s, p1).unwrap();
            let a2 = RotationOperator::new(&s, p2).unwrap();
            let a12 = RotationOperator::new(&s, (p1 + p2).min(PI)).unwrap();
            let prod = a1.matrix() * a2.matrix();
            prop_assert!(max_abs_diff(&prod, a12.matrix()) < 1e-12);
            prop_assert!(a1.orthogonality_defect() < 1e-12);
        }
    }
}
