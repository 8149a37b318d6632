//! Two-input/two-output bipartite boxes.
//!
//! A box is described by its behaviour `p(a,b|x,y)`: the probability that
//! Alice reads `a` and Bob reads `b` when Alice uses setting `x` and Bob
//! uses setting `y`. Outcomes are kept in the `+1/-1` convention that the
//! CHSH expression is written in.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, PROB_TOL};

/// Local CHSH bound.
pub const LOCAL_BOUND: f64 = 2.0;
/// Tsirelson bound, `2√2`.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

/// Which of a party's two measurements is used: `Unprimed` is `a`/`b`,
/// `Primed` is `a'`/`b'`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Setting {
    Unprimed,
    Primed,
}

impl Setting {
    pub const BOTH: [Setting; 2] = [Setting::Unprimed, Setting::Primed];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Setting::Unprimed),
            1 => Some(Setting::Primed),
            _ => None,
        }
    }

    pub fn from_bool(primed: bool) -> Self {
        if primed {
            Setting::Primed
        } else {
            Setting::Unprimed
        }
    }
}

impl From<Setting> for u8 {
    fn from(s: Setting) -> u8 {
        s as u8
    }
}

impl TryFrom<u8> for Setting {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Setting::from_index(v as usize).ok_or_else(|| format!("setting must be 0 or 1, got {v}"))
    }
}

/// A `±1` measurement result.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    /// Table order: `+1` first.
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    /// Position in table order (`+1 → 0`, `-1 → 1`).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Outcome::Plus),
            1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    /// Product of two outcomes.
    pub fn times(self, other: Outcome) -> Outcome {
        Outcome::from_sign(self == other)
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            _ => Err(format!("outcome must be +1 or -1, got {v}")),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// Flat position of `p(a,b|x,y)` in the canonical `(x, y, a, b)` order.
pub fn flat_index(a: Outcome, b: Outcome, x: Setting, y: Setting) -> usize {
    x.index() * 8 + y.index() * 4 + a.index() * 2 + b.index()
}

/// Conditional probability table `p(a,b|x,y)` of a bipartite box.
///
/// Serialises as `{"p": [16 numbers]}` in lexicographic `(x, y, a, b)`
/// order with outcomes ordered `+1, -1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct BehaviorTable {
    p: [f64; 16],
    signalling: bool,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    p: Vec<f64>,
}

impl TryFrom<RawTable> for BehaviorTable {
    type Error = Error;
    fn try_from(raw: RawTable) -> Result<Self> {
        let p: [f64; 16] = raw
            .p
            .as_slice()
            .try_into()
            .map_err(|_| Error::WrongLength {
                expected: 16,
                got: raw.p.len(),
            })?;
        // Tables read from disk may be signalling; keep them, flagged, so
        // that callers can report the violation instead of a parse error.
        BehaviorTable::new(p).or_else(|err| match err {
            Error::Signalling { .. } => BehaviorTable::signalling_counterexample(p),
            other => Err(other),
        })
    }
}

impl From<BehaviorTable> for RawTable {
    fn from(t: BehaviorTable) -> Self {
        RawTable { p: t.p.to_vec() }
    }
}

fn validate_distribution(p: &[f64; 16]) -> Result<()> {
    for (index, &value) in p.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeProbability { index, value });
        }
    }
    for x in 0..2 {
        for y in 0..2 {
            let start = x * 8 + y * 4;
            let sum: f64 = p[start..start + 4].iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::NotNormalized { x, y, sum });
            }
        }
    }
    Ok(())
}

impl BehaviorTable {
    /// Validated no-signalling table from the canonical flat layout.
    pub fn new(p: [f64; 16]) -> Result<Self> {
        validate_distribution(&p)?;
        let table = BehaviorTable {
            p,
            signalling: false,
        };
        let check = table.check_no_signalling(PROB_TOL);
        if !check.passed {
            return Err(Error::Signalling {
                violation: check.max_violation,
            });
        }
        Ok(table)
    }

    /// Table that is allowed to violate no-signalling. It is flagged so
    /// that [`BehaviorTable::classify`] and friends refuse it.
    pub fn signalling_counterexample(p: [f64; 16]) -> Result<Self> {
        validate_distribution(&p)?;
        Ok(BehaviorTable {
            p,
            signalling: true,
        })
    }

    /// Build from a closure `f(a, b, x, y)`.
    pub fn from_fn(f: impl Fn(Outcome, Outcome, Setting, Setting) -> f64) -> Result<Self> {
        let mut p = [0.0; 16];
        for x in Setting::BOTH {
            for y in Setting::BOTH {
                for a in Outcome::BOTH {
                    for b in Outcome::BOTH {
                        p[flat_index(a, b, x, y)] = f(a, b, x, y);
                    }
                }
            }
        }
        BehaviorTable::new(p)
    }

    /// White noise: every outcome pair has probability 1/4.
    pub fn uniform() -> Self {
        BehaviorTable {
            p: [0.25; 16],
            signalling: false,
        }
    }

    pub fn prob(&self, a: Outcome, b: Outcome, x: Setting, y: Setting) -> f64 {
        self.p[flat_index(a, b, x, y)]
    }

    pub fn as_array(&self) -> &[f64; 16] {
        &self.p
    }

    pub fn is_flagged_signalling(&self) -> bool {
        self.signalling
    }

    /// Alice's marginal `Σ_b p(a,b|x,y)`.
    pub fn alice_marginal(&self, a: Outcome, x: Setting, y: Setting) -> f64 {
        Outcome::BOTH.iter().map(|&b| self.prob(a, b, x, y)).sum()
    }

    /// Bob's marginal `Σ_a p(a,b|x,y)`.
    pub fn bob_marginal(&self, b: Outcome, x: Setting, y: Setting) -> f64 {
        Outcome::BOTH.iter().map(|&a| self.prob(a, b, x, y)).sum()
    }

    /// `C(x,y) = Σ a·b·p(a,b|x,y)`.
    pub fn correlator(&self, x: Setting, y: Setting) -> f64 {
        let mut c = 0.0;
        for a in Outcome::BOTH {
            for b in Outcome::BOTH {
                c += a.times(b).as_f64() * self.prob(a, b, x, y);
            }
        }
        c
    }

    pub fn correlators(&self) -> CorrelatorMatrix {
        let mut c = [[0.0; 2]; 2];
        for x in Setting::BOTH {
            for y in Setting::BOTH {
                c[x.index()][y.index()] = self.correlator(x, y);
            }
        }
        CorrelatorMatrix { c }
    }

    /// `C(0,0) + C(0,1) + C(1,0) - C(1,1)` without the absolute value.
    pub fn chsh_signed(&self) -> f64 {
        self.correlators().chsh_signed()
    }

    /// `|C(0,0) + C(0,1) + C(1,0) - C(1,1)|`.
    pub fn chsh_value(&self) -> f64 {
        self.chsh_signed().abs()
    }

    /// Checks that Alice's marginal does not depend on `y` and Bob's does
    /// not depend on `x`, reporting the worst deviation.
    pub fn check_no_signalling(&self, tol: f64) -> NoSignallingCheck {
        let mut worst: f64 = 0.0;
        for x in Setting::BOTH {
            for a in Outcome::BOTH {
                let d = self.alice_marginal(a, x, Setting::Unprimed)
                    - self.alice_marginal(a, x, Setting::Primed);
                worst = worst.max(d.abs());
            }
        }
        for y in Setting::BOTH {
            for b in Outcome::BOTH {
                let d = self.bob_marginal(b, Setting::Unprimed, y)
                    - self.bob_marginal(b, Setting::Primed, y);
                worst = worst.max(d.abs());
            }
        }
        NoSignallingCheck {
            passed: worst <= tol,
            max_violation: worst,
        }
    }

    /// Locate the table's CHSH value relative to the local and Tsirelson
    /// bounds. Values within `1e-9` of a bound fall in the weaker class.
    pub fn classify(&self) -> Result<ChshClass> {
        let check = self.check_no_signalling(PROB_TOL);
        if self.signalling || !check.passed {
            return Err(Error::Signalling {
                violation: check.max_violation,
            });
        }
        Ok(ChshClass::of_value(self.chsh_value()))
    }
}

/// `c[x][y] = C(x,y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorMatrix {
    pub c: [[f64; 2]; 2],
}

impl CorrelatorMatrix {
    pub fn chsh_signed(&self) -> f64 {
        self.c[0][0] + self.c[0][1] + self.c[1][0] - self.c[1][1]
    }

    pub fn chsh_value(&self) -> f64 {
        self.chsh_signed().abs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoSignallingCheck {
    pub passed: bool,
    pub max_violation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChshClass {
    LocalRange,
    QuantumRange,
    Superquantum,
}

impl ChshClass {
    pub fn of_value(s: f64) -> Self {
        if s <= LOCAL_BOUND + PROB_TOL {
            ChshClass::LocalRange
        } else if s <= TSIRELSON_BOUND + PROB_TOL {
            ChshClass::QuantumRange
        } else {
            ChshClass::Superquantum
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ChshClass::LocalRange => "local-range",
            ChshClass::QuantumRange => "quantum-range",
            ChshClass::Superquantum => "superquantum",
        }
    }
}

impl fmt::Display for ChshClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One of the eight PR boxes, `a ⊕ b = x·y ⊕ αx ⊕ βy ⊕ γ` in bit notation
/// (an outcome bit is 1 for `-1`). The default is the standard box with
/// `C(1,1) = -1` and the other three correlators `+1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrConvention {
    pub alice_shift: bool,
    pub bob_shift: bool,
    pub flip: bool,
}

impl PrConvention {
    pub const STANDARD: PrConvention = PrConvention {
        alice_shift: false,
        bob_shift: false,
        flip: false,
    };

    /// All eight conventions, indexed by `4α + 2β + γ`.
    pub fn all() -> [PrConvention; 8] {
        std::array::from_fn(|i| PrConvention::from_index(i).expect("index < 8"))
    }

    pub fn from_index(i: usize) -> Option<Self> {
        (i < 8).then_some(PrConvention {
            alice_shift: i & 4 != 0,
            bob_shift: i & 2 != 0,
            flip: i & 1 != 0,
        })
    }

    pub fn index(self) -> usize {
        (self.alice_shift as usize) * 4 + (self.bob_shift as usize) * 2 + self.flip as usize
    }

    /// Product `a·b` the box produces for settings `(x, y)`.
    pub fn product(self, x: Setting, y: Setting) -> Outcome {
        let (xb, yb) = (x == Setting::Primed, y == Setting::Primed);
        let parity = (xb && yb) ^ (self.alice_shift && xb) ^ (self.bob_shift && yb) ^ self.flip;
        Outcome::from_sign(!parity)
    }
}

/// The standard PR box.
pub fn make_pr_box() -> BehaviorTable {
    make_pr_box_with(PrConvention::STANDARD)
}

pub fn make_pr_box_with(convention: PrConvention) -> BehaviorTable {
    let mut p = [0.0; 16];
    for x in Setting::BOTH {
        for y in Setting::BOTH {
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    if a.times(b) == convention.product(x, y) {
                        p[flat_index(a, b, x, y)] = 0.5;
                    }
                }
            }
        }
    }
    BehaviorTable {
        p,
        signalling: false,
    }
}

/// Outcomes fixed in advance for every setting of both parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicProgram {
    pub alice: [Outcome; 2],
    pub bob: [Outcome; 2],
}

impl DeterministicProgram {
    /// All sixteen programs; bit `3 - k` of the index is set when the `k`-th
    /// of `(a(0), a(1), b(0), b(1))` is `-1`.
    pub fn all() -> [DeterministicProgram; 16] {
        std::array::from_fn(DeterministicProgram::from_index)
    }

    pub fn from_index(i: usize) -> Self {
        let bit = |k: usize| Outcome::from_sign(i & (1 << (3 - k)) == 0);
        DeterministicProgram {
            alice: [bit(0), bit(1)],
            bob: [bit(2), bit(3)],
        }
    }

    pub fn index(&self) -> usize {
        let outs = [self.alice[0], self.alice[1], self.bob[0], self.bob[1]];
        outs.iter()
            .enumerate()
            .map(|(k, o)| (o.index()) << (3 - k))
            .sum()
    }

    pub fn alice_output(&self, x: Setting) -> Outcome {
        self.alice[x.index()]
    }

    pub fn bob_output(&self, y: Setting) -> Outcome {
        self.bob[y.index()]
    }
}

impl std::str::FromStr for DeterministicProgram {
    type Err = Error;

    /// Four signs for `a(0) a(1) b(0) b(1)`, e.g. `"++-+"`.
    fn from_str(s: &str) -> Result<Self> {
        let signs: Vec<Outcome> = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                '+' => Ok(Outcome::Plus),
                '-' => Ok(Outcome::Minus),
                other => Err(Error::InvalidConfig(format!(
                    "program sign must be '+' or '-', got {other:?}"
                ))),
            })
            .collect::<Result<_>>()?;
        if signs.len() != 4 {
            return Err(Error::InvalidConfig(format!(
                "program needs 4 signs (a a' b b'), got {}",
                signs.len()
            )));
        }
        Ok(DeterministicProgram {
            alice: [signs[0], signs[1]],
            bob: [signs[2], signs[3]],
        })
    }
}

impl fmt::Display for DeterministicProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in self.alice.iter().chain(self.bob.iter()) {
            f.write_str(if *o == Outcome::Plus { "+" } else { "-" })?;
        }
        Ok(())
    }
}

pub fn make_local_deterministic(program: &DeterministicProgram) -> BehaviorTable {
    let mut p = [0.0; 16];
    for x in Setting::BOTH {
        for y in Setting::BOTH {
            p[flat_index(program.alice_output(x), program.bob_output(y), x, y)] = 1.0;
        }
    }
    BehaviorTable {
        p,
        signalling: false,
    }
}

/// Convex combination `Σ w_i T_i`.
pub fn make_mixture(tables: &[BehaviorTable], weights: &[f64]) -> Result<BehaviorTable> {
    if tables.is_empty() {
        return Err(Error::EmptyMixture);
    }
    if tables.len() != weights.len() {
        return Err(Error::LengthMismatch {
            tables: tables.len(),
            weights: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidWeights { sum });
    }
    let mut p = [0.0; 16];
    for (t, &w) in tables.iter().zip(weights) {
        for (acc, v) in p.iter_mut().zip(t.p.iter()) {
            *acc += w * v;
        }
    }
    let signalling = tables.iter().any(|t| t.signalling);
    if signalling {
        BehaviorTable::signalling_counterexample(p)
    } else {
        BehaviorTable::new(p)
    }
}

/// `strength·PR + (1 - strength)·uniform`, whose CHSH value is `4·strength`.
pub fn make_noisy_pr(strength: f64) -> Result<BehaviorTable> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::out_of_range("p", strength, "[0, 1]"));
    }
    make_mixture(
        &[make_pr_box(), BehaviorTable::uniform()],
        &[strength, 1.0 - strength],
    )
}
