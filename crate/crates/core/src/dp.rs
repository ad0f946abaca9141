//! Laplace mechanism, accuracy metrics, and exact budget accounting.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::FunctionKind;

/// Privacy budget amount in integer micro-epsilon (1e-6) units.
///
/// Budgets are charged, summed, compared, and persisted in this fixed-point
/// form so that accounting identities hold to the last bit regardless of
/// operation order; conversion to f64 happens only where a noise scale is
/// actually computed.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Eps(i64);

impl Eps {
    pub const ZERO: Eps = Eps(0);
    pub const PER_UNIT: i64 = 1_000_000;

    pub const fn from_micros(micros: i64) -> Eps {
        Eps(micros)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    /// Rounds to the nearest representable amount. The search grids and
    /// config knobs used in practice are exact multiples of 1e-6.
    pub fn from_f64(value: f64) -> Eps {
        assert!(value.is_finite(), "epsilon amount must be finite");
        Eps((value * Self::PER_UNIT as f64).round() as i64)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / Self::PER_UNIT as f64
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl std::ops::Add for Eps {
    type Output = Eps;
    fn add(self, rhs: Eps) -> Eps {
        Eps(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Eps {
    fn add_assign(&mut self, rhs: Eps) {
        self.0 += rhs.0;
    }
}

impl std::ops::Sub for Eps {
    type Output = Eps;
    fn sub(self, rhs: Eps) -> Eps {
        Eps(self.0 - rhs.0)
    }
}

impl std::ops::Mul<u32> for Eps {
    type Output = Eps;
    fn mul(self, rhs: u32) -> Eps {
        Eps(self.0 * rhs as i64)
    }
}

impl std::iter::Sum for Eps {
    fn sum<I: Iterator<Item = Eps>>(iter: I) -> Eps {
        iter.fold(Eps::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let m = self.0.unsigned_abs();
        let whole = m / Eps::PER_UNIT as u64;
        let frac = m % Eps::PER_UNIT as u64;
        if frac == 0 {
            return write!(f, "{sign}{whole}");
        }
        let digits = format!("{frac:06}");
        write!(f, "{sign}{whole}.{}", digits.trim_end_matches('0'))
    }
}

impl fmt::Debug for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Eps({self})")
    }
}

impl Serialize for Eps {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Eps {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Eps, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() {
            return Err(serde::de::Error::custom("epsilon amount must be finite"));
        }
        Ok(Eps::from_f64(v))
    }
}

/// Whether a query touches the whole table (0) or a predicated portion (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum NType {
    Whole,
    Portion,
}

impl NType {
    pub fn as_u8(self) -> u8 {
        match self {
            NType::Whole => 0,
            NType::Portion => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<NType> {
        match v {
            0 => Some(NType::Whole),
            1 => Some(NType::Portion),
            _ => None,
        }
    }

    fn idx(self) -> usize {
        self.as_u8() as usize
    }

    pub const ALL: [NType; 2] = [NType::Whole, NType::Portion];
}

impl From<NType> for u8 {
    fn from(v: NType) -> u8 {
        v.as_u8()
    }
}

impl TryFrom<u8> for NType {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<NType, String> {
        NType::from_u8(v).ok_or_else(|| format!("n_type must be 0 or 1, got {v}"))
    }
}

/// Centered Laplace noise parameters; `lambda` is exactly
/// `sensitivity / epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceParams {
    pub mu: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub sensitivity: f64,
}

impl LaplaceParams {
    pub fn new(epsilon: f64, sensitivity: f64) -> Result<LaplaceParams> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::BadEpsilon(epsilon));
        }
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(Error::BadSensitivity(sensitivity));
        }
        Ok(LaplaceParams { mu: 0.0, lambda: sensitivity / epsilon, epsilon, sensitivity })
    }

    pub fn from_eps(epsilon: Eps, sensitivity: f64) -> Result<LaplaceParams> {
        LaplaceParams::new(epsilon.as_f64(), sensitivity)
    }
}

/// One Laplace draw by inverse-CDF: u uniform on the open (-0.5, 0.5),
/// noise = mu - lambda * sgn(u) * ln(1 - 2|u|). Exactly one uniform is
/// consumed per draw except for the measure-zero resample at 0.
pub fn laplace_sample<R: Rng + ?Sized>(params: &LaplaceParams, rng: &mut R) -> f64 {
    let mut v: f64 = rng.gen();
    while v == 0.0 {
        v = rng.gen();
    }
    let u = v - 0.5;
    params.mu - params.lambda * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

pub fn perturb<R: Rng + ?Sized>(true_val: f64, params: &LaplaceParams, rng: &mut R) -> f64 {
    true_val + laplace_sample(params, rng)
}

/// Relative error clamped to [0, 1]; undefined when the true value is zero.
pub fn relative_error(true_val: f64, noisy_val: f64) -> Result<f64> {
    if true_val == 0.0 {
        return Err(Error::ZeroTrueValue);
    }
    Ok(((noisy_val - true_val).abs() / true_val.abs()).min(1.0))
}

pub fn accuracy(r_err: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&r_err));
    1.0 - r_err
}

/// Monte-Carlo estimate of the expected accuracy of a release at these noise
/// parameters: the mean of `accuracy` over `samples` fresh perturbations.
/// Estimation draws never touch the release stream and cost no budget.
pub fn expected_accuracy<R: Rng + ?Sized>(
    true_val: f64,
    params: &LaplaceParams,
    samples: u32,
    rng: &mut R,
) -> Result<f64> {
    if true_val == 0.0 {
        return Err(Error::ZeroTrueValue);
    }
    let samples = samples.max(1);
    let mut acc = 0.0f64;
    for _ in 0..samples {
        let noisy = perturb(true_val, params, rng);
        acc += accuracy(relative_error(true_val, noisy)?);
    }
    Ok(acc / samples as f64)
}

/// Analytic expected accuracy of a Laplace release: with T = |true value|,
/// E[min(|noise|, T)] = lambda * (1 - exp(-T / lambda)), so the clamped
/// expected accuracy is 1 - lambda * (1 - exp(-T/lambda)) / T. The
/// Monte-Carlo estimator converges to this value.
pub fn closed_form_accuracy(true_val: f64, lambda: f64) -> Result<f64> {
    if true_val == 0.0 {
        return Err(Error::ZeroTrueValue);
    }
    let t = true_val.abs();
    Ok(1.0 - lambda * (1.0 - (-t / lambda).exp()) / t)
}

/// Inclusive band check: |a_act - a_req| <= tau. The slack keeps decimal
/// knobs honest at the boundary: 0.97 - 0.95 exceeds 0.02 by one ulp in
/// binary, yet the band as written includes it.
pub fn tolerance_satisfied(a_act: f64, a_req: f64, tau: f64) -> bool {
    (a_act - a_req).abs() <= tau + 1e-12
}

/// Per-function global sensitivity; defaults to 1 for every kind.
#[derive(Debug, Clone)]
pub struct SensitivityRegistry {
    by_kind: [f64; 4],
}

impl Default for SensitivityRegistry {
    fn default() -> SensitivityRegistry {
        SensitivityRegistry { by_kind: [1.0; 4] }
    }
}

fn kind_slot(kind: FunctionKind) -> usize {
    match kind {
        FunctionKind::Count => 0,
        FunctionKind::Average => 1,
        FunctionKind::Maximum => 2,
        FunctionKind::Minimum => 3,
    }
}

impl SensitivityRegistry {
    pub fn get(&self, kind: FunctionKind) -> f64 {
        self.by_kind[kind_slot(kind)]
    }

    pub fn set(&mut self, kind: FunctionKind, sensitivity: f64) -> Result<()> {
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(Error::BadSensitivity(sensitivity));
        }
        self.by_kind[kind_slot(kind)] = sensitivity;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReleaseEntry {
    pub query_id: String,
    pub epsilon: Eps,
    pub n_type: NType,
}

/// Tracks sequential-composition spend against a fixed total budget.
///
/// Invariant: spent_for(Whole) + spent_for(Portion) == spent_sequential()
/// exactly, and spent_sequential() never exceeds epsilon_total.
#[derive(Debug, Clone)]
pub struct BudgetAccountant {
    epsilon_total: Eps,
    spent_by_type: [Eps; 2],
    releases: Vec<ReleaseEntry>,
}

impl BudgetAccountant {
    pub fn new(epsilon_total: Eps) -> Result<BudgetAccountant> {
        if !epsilon_total.is_positive() {
            return Err(Error::BadEpsilon(epsilon_total.as_f64()));
        }
        Ok(BudgetAccountant {
            epsilon_total,
            spent_by_type: [Eps::ZERO; 2],
            releases: Vec::new(),
        })
    }

    pub fn epsilon_total(&self) -> Eps {
        self.epsilon_total
    }

    pub fn spent_for(&self, n_type: NType) -> Eps {
        self.spent_by_type[n_type.idx()]
    }

    pub fn spent_sequential(&self) -> Eps {
        self.spent_by_type[0] + self.spent_by_type[1]
    }

    pub fn remaining(&self) -> Eps {
        self.epsilon_total - self.spent_sequential()
    }

    pub fn can_afford(&self, eps: Eps) -> bool {
        eps <= self.remaining()
    }

    /// Records a release. Rejects non-positive charges and anything that
    /// would push total spend past the budget; on rejection no state changes.
    pub fn charge(&mut self, query_id: &str, eps: Eps, n_type: NType) -> Result<()> {
        if !eps.is_positive() {
            return Err(Error::ZeroCharge);
        }
        if !self.can_afford(eps) {
            return Err(Error::BudgetExceeded { charge: eps, remaining: self.remaining() });
        }
        self.spent_by_type[n_type.idx()] += eps;
        self.releases.push(ReleaseEntry { query_id: query_id.to_string(), epsilon: eps, n_type });
        Ok(())
    }

    pub fn releases(&self) -> &[ReleaseEntry] {
        &self.releases
    }
}

/// Budget consumed by releases over disjoint portions composes in parallel:
/// the bound is the maximum, not the sum.
pub fn parallel_bound(epsilons: &[Eps]) -> Eps {
    epsilons.iter().copied().max().unwrap_or(Eps::ZERO)
}

/// Seed-addressed randomness. Stream 0 carries release noise; each query's
/// accuracy estimation runs on its own derived stream, so changing how many
/// estimation draws one query makes can never shift another query's noise
/// or any released value.
#[derive(Debug, Clone)]
pub struct RngBundle {
    seed: u64,
    release: ChaCha8Rng,
}

impl RngBundle {
    pub fn new(seed: u64) -> RngBundle {
        let mut release = ChaCha8Rng::seed_from_u64(seed);
        release.set_stream(0);
        RngBundle { seed, release }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn release_rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.release
    }

    pub fn estimation_rng(&self, query_seq: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(query_seq.wrapping_add(1));
        rng
    }
}
