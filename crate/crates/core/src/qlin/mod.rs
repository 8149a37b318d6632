//! Complex linear algebra for one to three qubits.
//!
//! Conventions: `|↑⟩ = (1, 0)`, `σ_z|↑⟩ = +|↑⟩`, and multi-qubit states are
//! ordered Alice ⊗ Bob (⊗ Jim) with qubit 0 as the most significant bit of
//! the amplitude index, so `|↑↓⟩` is index 1 and `|↓↑⟩` is index 2.

mod eigen;
mod optimize;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::boxmodel::{flat_index, BehaviorTable, Outcome, Setting};
use crate::{Error, Result, LINALG_TOL};

pub use eigen::hermitian_eigenvalues;
pub use optimize::{correlation_tensor, maximize_chsh, ChshOptimum};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 | 8 => Ok(()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

fn qubits_of(dim: usize) -> usize {
    dim.trailing_zeros() as usize
}

/// Normalised state vector of one, two or three qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct QState {
    amps: Vec<C64>,
}

impl TryFrom<Vec<[f64; 2]>> for QState {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        QState::new(v.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

impl From<QState> for Vec<[f64; 2]> {
    fn from(s: QState) -> Self {
        s.amps.iter().map(|z| [z.re, z.im]).collect()
    }
}

impl QState {
    /// Checked constructor; the squared norm must be 1 within `1e-12`.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        let norm_sqr: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > LINALG_TOL || !norm_sqr.is_finite() {
            return Err(Error::NotNormalizedState { norm_sqr });
        }
        Ok(QState { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > LINALG_TOL) || !norm.is_finite() {
            return Err(Error::NotNormalizedState {
                norm_sqr: norm * norm,
            });
        }
        Ok(QState {
            amps: amps.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Ok(QState { amps })
    }

    pub fn up() -> Self {
        QState {
            amps: vec![ONE, ZERO],
        }
    }

    pub fn down() -> Self {
        QState {
            amps: vec![ZERO, ONE],
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn num_qubits(&self) -> usize {
        qubits_of(self.dim())
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(inner_raw(&self.amps, &other.amps))
    }

    pub fn tensor(&self, other: &QState) -> Result<QState> {
        let dim = self.dim() * other.dim();
        check_dim(dim)?;
        let mut amps = Vec::with_capacity(dim);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(QState { amps })
    }

    /// Same ray, multiplied by `e^{iφ}`.
    pub fn with_phase(&self, phase: f64) -> QState {
        let f = C64::from_polar(1.0, phase);
        QState {
            amps: self.amps.iter().map(|z| z * f).collect(),
        }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> QOperator {
        let n = self.dim();
        let mut m = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                m[r * n + c] = self.amps[r] * self.amps[c].conj();
            }
        }
        QOperator {
            dim: n,
            m,
            kind: OperatorKind::Density,
        }
    }
}

fn inner_raw(bra: &[C64], ket: &[C64]) -> C64 {
    bra.iter().zip(ket).map(|(b, k)| b.conj() * k).sum()
}

/// What has been verified about a [`QOperator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    General,
    Hermitian,
    Unitary,
    Density,
}

/// Square complex matrix on 2, 4 or 8 dimensions, stored row-major.
///
/// Serialises as rows of `[re, im]` pairs; the kind is not serialised and
/// is re-established by whichever constructor reads the matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QOperator {
    dim: usize,
    m: Vec<C64>,
    kind: OperatorKind,
}

impl Serialize for QOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl QOperator {
    /// Builds an operator of the requested kind, checking the kind's
    /// defining property.
    pub fn new(dim: usize, entries: Vec<C64>, kind: OperatorKind) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::WrongLength {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let op = QOperator {
            dim,
            m: entries,
            kind: OperatorKind::General,
        };
        match kind {
            OperatorKind::General => {}
            OperatorKind::Hermitian => op.require_hermitian()?,
            OperatorKind::Unitary => {
                let deviation = op.unitarity_deviation();
                if deviation > LINALG_TOL {
                    return Err(Error::NotUnitary { deviation });
                }
            }
            OperatorKind::Density => op.require_density()?,
        }
        Ok(QOperator { kind, ..op })
    }

    /// From rows of `[re, im]` pairs.
    pub fn from_rows(rows: &[Vec<[f64; 2]>], kind: OperatorKind) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::WrongLength {
                    expected: dim,
                    got: row.len(),
                });
            }
            entries.extend(row.iter().map(|[re, im]| C64::new(*re, *im)));
        }
        QOperator::new(dim, entries, kind)
    }

    pub fn to_rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.dim)
            .map(|r| {
                (0..self.dim)
                    .map(|c| {
                        let z = self.get(r, c);
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect()
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let mut m = vec![ZERO; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = ONE;
        }
        Ok(QOperator {
            dim,
            m,
            kind: OperatorKind::Unitary,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.m
    }

    /// Conjugate transpose. Hermitian, unitary and density kinds survive.
    pub fn adjoint(&self) -> QOperator {
        let n = self.dim;
        let mut m = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                m[c * n + r] = self.m[r * n + c].conj();
            }
        }
        QOperator {
            dim: n,
            m,
            kind: self.kind,
        }
    }

    /// Raw product `self · other`.
    pub fn matmul(&self, other: &QOperator) -> Result<QOperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let n = self.dim;
        let mut m = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.m[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    m[r * n + c] += a * other.m[k * n + c];
                }
            }
        }
        let kind = if self.kind == OperatorKind::Unitary && other.kind == OperatorKind::Unitary {
            OperatorKind::Unitary
        } else {
            OperatorKind::General
        };
        Ok(QOperator { dim: n, m, kind })
    }

    /// `self ⊗ other`.
    pub fn kron(&self, other: &QOperator) -> Result<QOperator> {
        let n = self.dim * other.dim;
        check_dim(n)?;
        let (p, q) = (self.dim, other.dim);
        let mut m = vec![ZERO; n * n];
        for r1 in 0..p {
            for c1 in 0..p {
                let a = self.m[r1 * p + c1];
                for r2 in 0..q {
                    for c2 in 0..q {
                        m[(r1 * q + r2) * n + c1 * q + c2] = a * other.m[r2 * q + c2];
                    }
                }
            }
        }
        let kind = match (self.kind, other.kind) {
            (a, b) if a == b => a,
            _ => OperatorKind::General,
        };
        Ok(QOperator { dim: n, m, kind })
    }

    /// `self |ψ⟩` as a raw amplitude vector.
    pub fn apply_raw(&self, state: &QState) -> Result<Vec<C64>> {
        if self.dim != state.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: state.dim(),
            });
        }
        Ok(self.apply_slice(state.amplitudes()))
    }

    fn apply_slice(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|r| (0..n).map(|c| self.m[r * n + c] * v[c]).sum())
            .collect()
    }

    /// `U|ψ⟩` for a unitary `U`; the image is renormalised to absorb
    /// rounding.
    pub fn evolve(&self, state: &QState) -> Result<QState> {
        if self.kind != OperatorKind::Unitary {
            let deviation = self.unitarity_deviation();
            if deviation > LINALG_TOL {
                return Err(Error::NotUnitary { deviation });
            }
        }
        QState::normalized(self.apply_raw(state)?)
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, state: &QState) -> Result<C64> {
        Ok(inner_raw(state.amplitudes(), &self.apply_raw(state)?))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.m[i * self.dim + i]).sum()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        let n = self.dim;
        let mut s = ZERO;
        for r in 0..n {
            for c in 0..n {
                s += self.m[r * n + c] * self.m[c * n + r];
            }
        }
        s.re
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &QOperator) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(self
            .m
            .iter()
            .zip(&other.m)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.m[r * n + c] - self.m[c * n + r].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry of `|U U† - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let mut s = ZERO;
                for k in 0..n {
                    s += self.m[r * n + k] * self.m[c * n + k].conj();
                }
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }

    fn require_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > LINALG_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    fn require_density(&self) -> Result<()> {
        self.require_hermitian()?;
        let tr = self.trace();
        if (tr.re - 1.0).abs() > LINALG_TOL || tr.im.abs() > LINALG_TOL {
            return Err(Error::NotDensity {
                reason: format!("trace is {tr}"),
            });
        }
        let min = hermitian_eigenvalues(self)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -LINALG_TOL {
            return Err(Error::NotDensity {
                reason: format!("eigenvalue {min:e} is negative"),
            });
        }
        Ok(())
    }
}

/// Spin component along the direction at `angle` in the xy-plane,
/// `cos(angle)·σ_x + sin(angle)·σ_y`.
pub fn pauli_xy(angle: f64) -> QOperator {
    let (s, c) = angle.sin_cos();
    QOperator {
        dim: 2,
        m: vec![ZERO, C64::new(c, -s), C64::new(c, s), ZERO],
        kind: OperatorKind::Hermitian,
    }
}

pub fn pauli_x() -> QOperator {
    QOperator {
        dim: 2,
        m: vec![ZERO, ONE, ONE, ZERO],
        kind: OperatorKind::Hermitian,
    }
}

pub fn pauli_y() -> QOperator {
    QOperator {
        dim: 2,
        m: vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
        kind: OperatorKind::Hermitian,
    }
}

pub fn pauli_z() -> QOperator {
    QOperator {
        dim: 2,
        m: vec![ONE, ZERO, ZERO, -ONE],
        kind: OperatorKind::Hermitian,
    }
}

/// Eigenvector of [`pauli_xy`]`(angle)` with eigenvalue `outcome`:
/// `(|↑⟩ + outcome·e^{i·angle}|↓⟩)/√2`.
pub fn xy_eigenstate(angle: f64, outcome: Outcome) -> QState {
    let phase = C64::from_polar(FRAC_1_SQRT_2 * outcome.as_f64(), angle);
    QState {
        amps: vec![C64::new(FRAC_1_SQRT_2, 0.0), phase],
    }
}

/// Index of the Bell states returned by [`bell_states`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PhiMinus,
        BellState::PsiPlus,
        BellState::PsiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn state(self) -> QState {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let amps = match self {
            BellState::PhiPlus => vec![h, ZERO, ZERO, h],
            BellState::PhiMinus => vec![h, ZERO, ZERO, -h],
            BellState::PsiPlus => vec![ZERO, h, h, ZERO],
            BellState::PsiMinus => vec![ZERO, h, -h, ZERO],
        };
        QState { amps }
    }

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }
}

/// `(Φ+, Φ−, Ψ+, Ψ−)`; `Ψ−` is the singlet.
pub fn bell_states() -> [QState; 4] {
    BellState::ALL.map(BellState::state)
}

pub fn singlet() -> QState {
    BellState::PsiMinus.state()
}

/// `(|↑↑↑⟩ − |↓↓↓⟩)/√2`, qubits ordered (Alice, Bob, Jim).
pub fn ghz_state() -> QState {
    let mut amps = vec![ZERO; 8];
    amps[0] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[7] = C64::new(-FRAC_1_SQRT_2, 0.0);
    QState { amps }
}

/// Orthonormal basis of the whole space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<QState>", into = "Vec<QState>")]
pub struct MeasurementBasis {
    vectors: Vec<QState>,
}

impl TryFrom<Vec<QState>> for MeasurementBasis {
    type Error = Error;
    fn try_from(v: Vec<QState>) -> Result<Self> {
        MeasurementBasis::new(v)
    }
}

impl From<MeasurementBasis> for Vec<QState> {
    fn from(b: MeasurementBasis) -> Self {
        b.vectors
    }
}

impl MeasurementBasis {
    pub fn new(vectors: Vec<QState>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(QState::dim)
            .ok_or(Error::IncompleteBasis { got: 0, dim: 0 })?;
        if vectors.len() != dim {
            return Err(Error::IncompleteBasis {
                got: vectors.len(),
                dim,
            });
        }
        let mut worst: f64 = 0.0;
        for (i, u) in vectors.iter().enumerate() {
            for (j, v) in vectors.iter().enumerate().skip(i) {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((u.inner(v)? - target).norm());
            }
        }
        if worst > LINALG_TOL {
            return Err(Error::BasisNotOrthonormal { deviation: worst });
        }
        Ok(MeasurementBasis { vectors })
    }

    pub fn bell() -> Self {
        MeasurementBasis {
            vectors: bell_states().to_vec(),
        }
    }

    pub fn computational(dim: usize) -> Result<Self> {
        let vectors = (0..dim)
            .map(|i| QState::basis(dim, i))
            .collect::<Result<_>>()?;
        Ok(MeasurementBasis { vectors })
    }

    pub fn vectors(&self) -> &[QState] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }
}

/// `|⟨basis_vector|state⟩|²`.
///
/// The value is the same bit pattern whichever argument is the bra: the
/// two overlaps are complex conjugates and conjugation leaves the modulus
/// computation untouched.
pub fn born_probability(state: &QState, basis_vector: &QState) -> Result<f64> {
    Ok(basis_vector.inner(state)?.norm_sqr())
}

/// Reduced density operator on the qubits listed in `keep` (ascending,
/// qubit 0 = Alice).
pub fn partial_trace(rho: &QOperator, keep: &[usize]) -> Result<QOperator> {
    let n = qubits_of(rho.dim());
    if keep.is_empty() {
        return Err(Error::InvalidMask("must keep at least one qubit".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidMask(
            "qubit list must be strictly ascending".into(),
        ));
    }
    if let Some(&q) = keep.iter().find(|&&q| q >= n) {
        return Err(Error::InvalidMask(format!(
            "qubit {q} does not exist in a {n}-qubit operator"
        )));
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    // bit position of qubit q inside a full index
    let pos = |q: usize| n - 1 - q;
    let spread = |value: usize, qubits: &[usize]| -> usize {
        qubits
            .iter()
            .enumerate()
            .map(|(k, &q)| ((value >> (qubits.len() - 1 - k)) & 1) << pos(q))
            .sum()
    };
    let kd = 1usize << keep.len();
    let td = 1usize << traced.len();
    let mut m = vec![ZERO; kd * kd];
    for r in 0..kd {
        for c in 0..kd {
            let (rf, cf) = (spread(r, keep), spread(c, keep));
            let mut s = ZERO;
            for t in 0..td {
                let tf = spread(t, &traced);
                s += rho.get(rf | tf, cf | tf);
            }
            m[r * kd + c] = s;
        }
    }
    let kind = if rho.kind == OperatorKind::Density {
        OperatorKind::Density
    } else {
        OperatorKind::General
    };
    Ok(QOperator { dim: kd, m, kind })
}

/// Projectors `(P₊, P₋)` onto the eigenspaces of a `±1` observable, in the
/// closed form `(I ± O)/2`.
pub fn binary_projectors(obs: &QOperator) -> Result<[QOperator; 2]> {
    if obs.dim() != 2 || obs.hermiticity_deviation() > LINALG_TOL {
        return Err(Error::NotBinaryObservable);
    }
    // eigenvalues are ±1 iff O is traceless with O² = I
    let sq = obs.matmul(obs)?;
    if obs.trace().norm() > LINALG_TOL || sq.max_abs_diff(&QOperator::identity(2)?)? > LINALG_TOL {
        return Err(Error::NotBinaryObservable);
    }
    let proj = |sign: f64| {
        let m = (0..4)
            .map(|i| {
                let id = if i == 0 || i == 3 { ONE } else { ZERO };
                (id + obs.m[i] * sign) * 0.5
            })
            .collect();
        QOperator {
            dim: 2,
            m,
            kind: OperatorKind::Hermitian,
        }
    };
    Ok([proj(1.0), proj(-1.0)])
}

/// Behaviour of a two-qubit state measured with `±1` observables,
/// `p(a,b|x,y) = ⟨ψ|P_a^x ⊗ P_b^y|ψ⟩`.
pub fn quantum_box(
    state: &QState,
    alice: [&QOperator; 2],
    bob: [&QOperator; 2],
) -> Result<BehaviorTable> {
    if state.dim() != 4 {
        return Err(Error::DimensionMismatch {
            left: state.dim(),
            right: 4,
        });
    }
    let alice_proj = [binary_projectors(alice[0])?, binary_projectors(alice[1])?];
    let bob_proj = [binary_projectors(bob[0])?, binary_projectors(bob[1])?];
    let mut p = [0.0; 16];
    for x in Setting::BOTH {
        for y in Setting::BOTH {
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    let joint =
                        alice_proj[x.index()][a.index()].kron(&bob_proj[y.index()][b.index()])?;
                    // rounding can leave -1e-17 on an exact zero
                    p[flat_index(a, b, x, y)] = joint.expectation(state)?.re.max(0.0);
                }
            }
        }
    }
    BehaviorTable::new(p)
}

/// [`quantum_box`] with xy-plane observables at `angles = [α, α', β, β']`.
pub fn quantum_box_xy(state: &QState, angles: [f64; 4]) -> Result<BehaviorTable> {
    let ops = angles.map(pauli_xy);
    quantum_box(state, [&ops[0], &ops[1]], [&ops[2], &ops[3]])
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<QState> {
    check_dim(dim)?;
    let amps = (0..dim).map(|_| gaussian_c64(rng)).collect();
    QState::normalized(amps)
}

/// Haar-random unitary: Gram–Schmidt on a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<QOperator> {
    check_dim(dim)?;
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
        // two passes of modified Gram–Schmidt keep orthogonality near 1e-16
        for _ in 0..2 {
            for u in &cols {
                let proj = inner_raw(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    let mut m = vec![ZERO; dim * dim];
    for (c, col) in cols.iter().enumerate() {
        for (r, z) in col.iter().enumerate() {
            m[r * dim + c] = *z;
        }
    }
    QOperator::new(dim, m, OperatorKind::Unitary)
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn pauli_xy_special_angles() {
        assert!(pauli_xy(0.0).max_abs_diff(&pauli_x()).unwrap() < 1e-15);
        assert!(pauli_xy(FRAC_PI_2).max_abs_diff(&pauli_y()).unwrap() < 1e-15);
    }

    #[test]
    fn pauli_xy_spectrum() {
        for k in 0..50 {
            let op = pauli_xy(-7.0 + 0.3 * k as f64);
            assert!(op.trace().norm() < 1e-15);
            // characteristic polynomial λ² − tr λ + det with det = -1
            let det = op.get(0, 0) * op.get(1, 1) - op.get(0, 1) * op.get(1, 0);
            assert!(close(det, C64::new(-1.0, 0.0)));
            let mut ev = hermitian_eigenvalues(&op);
            ev.sort_by(f64::total_cmp);
            assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn xy_eigenstates_are_eigenvectors() {
        for angle in [0.0, 0.4, 2.0, -1.3] {
            for o in Outcome::BOTH {
                let v = xy_eigenstate(angle, o);
                let image = pauli_xy(angle).apply_raw(&v).unwrap();
                for (w, z) in image.iter().zip(v.amplitudes()) {
                    assert!(close(*w, z * o.as_f64()));
                }
            }
        }
    }

    #[test]
    fn bell_states_layout() {
        let b = bell_states();
        let h = FRAC_1_SQRT_2;
        let expected = [h, 0.0, 0.0, -h];
        for (z, e) in b[1].amplitudes().iter().zip(expected) {
            assert!(close(*z, C64::new(e, 0.0)));
        }
        for i in 0..4 {
            for j in 0..4 {
                let ip = b[i].inner(&b[j]).unwrap();
                assert!(close(ip, if i == j { ONE } else { ZERO }));
            }
            let reduced = partial_trace(&b[i].density(), &[0]).unwrap();
            assert!((reduced.purity() - 0.5).abs() < 1e-12);
        }
        assert!(MeasurementBasis::new(b.to_vec()).is_ok());
    }

    #[test]
    fn ghz_amplitudes() {
        let g = ghz_state();
        assert!(close(g.amplitude(0), C64::new(FRAC_1_SQRT_2, 0.0)));
        assert!(close(g.amplitude(7), C64::new(-FRAC_1_SQRT_2, 0.0)));
        for i in 1..7 {
            assert_eq!(g.amplitude(i), ZERO);
        }
    }

    #[test]
    fn born_examples() {
        assert_eq!(born_probability(&QState::up(), &QState::up()).unwrap(), 1.0);
        let upup = QState::basis(4, 0).unwrap();
        let p = born_probability(&bell_states()[0], &upup).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(born_probability(&QState::up(), &upup).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let reduced = partial_trace(&ghz_state().density(), &[0, 1]).unwrap();
        let mut expected = vec![ZERO; 16];
        expected[0] = C64::new(0.5, 0.0);
        expected[15] = C64::new(0.5, 0.0);
        let expected = QOperator::new(4, expected, OperatorKind::Density).unwrap();
        assert!(reduced.max_abs_diff(&expected).unwrap() < 1e-12);

        let product = QState::up().tensor(&QState::down()).unwrap();
        let a = partial_trace(&product.density(), &[0]).unwrap();
        assert!(a.max_abs_diff(&QState::up().density()).unwrap() < 1e-15);
        let b = partial_trace(&product.density(), &[1]).unwrap();
        assert!(b.max_abs_diff(&QState::down().density()).unwrap() < 1e-15);

        let phi = partial_trace(&bell_states()[0].density(), &[1]).unwrap();
        let mixed = QOperator::new(
            2,
            vec![C64::new(0.5, 0.0), ZERO, ZERO, C64::new(0.5, 0.0)],
            OperatorKind::Density,
        )
        .unwrap();
        assert!(phi.max_abs_diff(&mixed).unwrap() < 1e-12);
    }

    #[test]
    fn partial_trace_mask_errors() {
        let rho = ghz_state().density();
        assert!(matches!(
            partial_trace(&rho, &[]),
            Err(Error::InvalidMask(_))
        ));
        assert!(matches!(
            partial_trace(&rho, &[1, 0]),
            Err(Error::InvalidMask(_))
        ));
        assert!(matches!(
            partial_trace(&rho, &[3]),
            Err(Error::InvalidMask(_))
        ));
        assert!(
            partial_trace(&rho, &[0, 1, 2])
                .unwrap()
                .max_abs_diff(&rho)
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn partial_trace_of_middle_qubit() {
        // |↑↓↑⟩: keeping A and J gives |↑↑⟩⟨↑↑|
        let s = QState::basis(8, 0b010).unwrap();
        let r = partial_trace(&s.density(), &[0, 2]).unwrap();
        assert!(
            r.max_abs_diff(&QState::basis(4, 0).unwrap().density())
                .unwrap()
                < 1e-15
        );
    }

    #[test]
    fn singlet_same_axis_anticorrelated() {
        let t = quantum_box_xy(&singlet(), [0.0; 4]).unwrap();
        let (p, m) = (Outcome::Plus, Outcome::Minus);
        let s = Setting::Unprimed;
        assert!((t.prob(p, m, s, s) - 0.5).abs() < 1e-12);
        assert!((t.prob(m, p, s, s) - 0.5).abs() < 1e-12);
        assert!(t.prob(p, p, s, s) < 1e-12);
        assert!((t.correlator(s, s) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn phi_plus_correlator_is_cos_sum() {
        let phi = &bell_states()[0];
        for (alpha, beta) in [(0.0, 0.0), (0.3, 1.1), (-2.0, 0.7), (PI, 0.25)] {
            let t = quantum_box_xy(phi, [alpha, 0.0, beta, 0.0]).unwrap();
            let c = t.correlator(Setting::Unprimed, Setting::Unprimed);
            assert!((c - (alpha + beta).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn product_state_has_no_xy_correlations() {
        let upup = QState::basis(4, 0).unwrap();
        let t = quantum_box_xy(&upup, [0.1, 0.9, -0.4, 2.2]).unwrap();
        for row in t.correlators().c {
            for c in row {
                assert!(c.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quantum_box_rejects_bad_observables() {
        let s = &bell_states()[0];
        let x = pauli_x();
        let not_herm =
            QOperator::new(2, vec![ZERO, ONE, ZERO, ZERO], OperatorKind::General).unwrap();
        assert_eq!(
            quantum_box(s, [&not_herm, &x], [&x, &x]),
            Err(Error::NotBinaryObservable)
        );
        let id = QOperator::identity(2).unwrap();
        assert_eq!(
            quantum_box(s, [&x, &x], [&id, &x]),
            Err(Error::NotBinaryObservable)
        );
        let half = QOperator::new(
            2,
            vec![ZERO, C64::new(0.5, 0.0), C64::new(0.5, 0.0), ZERO],
            OperatorKind::Hermitian,
        )
        .unwrap();
        assert_eq!(
            quantum_box(s, [&x, &half], [&x, &x]),
            Err(Error::NotBinaryObservable)
        );
        // σ_z is a valid ±1 observable too
        assert!(quantum_box(s, [&pauli_z(), &x], [&x, &x]).is_ok());
    }

    #[test]
    fn operator_kind_validation() {
        let bad_unitary = vec![ONE, ONE, ZERO, ONE];
        assert!(matches!(
            QOperator::new(2, bad_unitary, OperatorKind::Unitary),
            Err(Error::NotUnitary { .. })
        ));
        let negative = vec![C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0)];
        assert!(matches!(
            QOperator::new(2, negative, OperatorKind::Density),
            Err(Error::NotDensity { .. })
        ));
        assert!(matches!(
            QOperator::new(3, vec![ZERO; 9], OperatorKind::General),
            Err(Error::UnsupportedDimension(3))
        ));
        assert!(matches!(
            QState::new(vec![ONE, ONE]),
            Err(Error::NotNormalizedState { .. })
        ));
    }

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut rng = stream_rng(11, 0);
        for dim in [2, 4, 8] {
            for _ in 0..20 {
                let u = random_unitary(dim, &mut rng).unwrap();
                assert!(u.unitarity_deviation() < 1e-13);
                assert!(u.adjoint().unitarity_deviation() < 1e-13);
            }
        }
    }

    #[test]
    fn state_json_is_pairs() {
        let json = serde_json::to_string(&QState::up()).unwrap();
        assert_eq!(json, "[[1.0,0.0],[0.0,0.0]]");
        let back: QState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, QState::up());
        assert!(serde_json::from_str::<QState>("[[1.0,0.0],[1.0,0.0]]").is_err());
        let op_json = serde_json::to_string(&pauli_y()).unwrap();
        assert_eq!(op_json, "[[[0.0,0.0],[0.0,-1.0]],[[0.0,1.0],[0.0,0.0]]]");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn born_symmetric(seed in any::<u64>(), dim_pow in 1u32..4) {
            let mut rng = stream_rng(seed, 0);
            let dim = 1usize << dim_pow;
            let u = random_state(dim, &mut rng).unwrap();
            let v = random_state(dim, &mut rng).unwrap();
            let p = born_probability(&u, &v).unwrap();
            prop_assert_eq!(p.to_bits(), born_probability(&v, &u).unwrap().to_bits());
            prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        }

        #[test]
        fn partial_trace_keeps_trace_and_positivity(seed in any::<u64>(), mask in 1usize..8) {
            let mut rng = stream_rng(seed, 1);
            let rho = random_state(8, &mut rng).unwrap().density();
            let keep: Vec<usize> = (0..3).filter(|q| mask & (1 << q) != 0).collect();
            let r = partial_trace(&rho, &keep).unwrap();
            prop_assert!((r.trace() - ONE).norm() < 1e-12);
            prop_assert!(r.hermiticity_deviation() < 1e-12);
            let min = hermitian_eigenvalues(&r).into_iter().fold(f64::INFINITY, f64::min);
            prop_assert!(min > -1e-12);
        }

        #[test]
        fn quantum_boxes_never_signal(seed in any::<u64>(), angles in prop::array::uniform4(-7.0f64..7.0)) {
            let mut rng = stream_rng(seed, 2);
            let s = random_state(4, &mut rng).unwrap();
            let t = quantum_box_xy(&s, angles).unwrap();
            prop_assert!(t.check_no_signalling(1e-9).passed);
        }
    }
}
