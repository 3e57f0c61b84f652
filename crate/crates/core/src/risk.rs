//! The closed-form double-spend risk model.
//!
//! An attacker holding a hashrate share `q < 1/2` secretly mines a fork
//! while honest miners confirm a payment `z` times. Two questions are
//! answered exactly:
//!
//! * time-free — what is the probability the fork ever catches up, with
//!   the honest mining time integrated out? ([`catchup_time_free`],
//!   evaluated as `I_{4pq}(z, 1/2)`)
//! * timed — what is it *given* that the `z` confirmations were observed
//!   to take time `t`? ([`catchup_timed`], a two-term expression in the
//!   regularized upper incomplete gamma function)
//!
//! The observed pace enters through the dimensionless ratio
//! `r = t / (z·τ₀)` (elapsed time over the network-expected time) and the
//! derived deviation `κ = (1−q)·r` of the honest miners' own clock.
//! [`table_probability`] is the `r`-parameterized form that the risk
//! tables print.

use crate::specfun;
use crate::{Error, Result};
use serde::Serialize;

/// Default expected block period of the network, in seconds (10 minutes).
pub const DEFAULT_TAU0_SECS: f64 = 600.0;

/// Largest confirmation count the engine evaluates.
pub const MAX_CONFIRMATIONS: u32 = 100;

/// Probability overshoot beyond `[0, 1]` tolerated as rounding before it
/// is treated as a bug.
const CLAMP_TOL: f64 = 1e-12;

/// Attacker's share `q` of the total hashrate, constrained to `(0, 1/2)`.
///
/// The honest share is always derived as `p = 1 − q`, never stored
/// separately, so `p + q == 1` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HashrateShare {
    q: f64,
}

impl HashrateShare {
    pub fn new(q: f64) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 || q >= 0.5 {
            return Err(Error::Domain(format!(
                "hashrate share must satisfy 0 < q < 1/2 (the model's hypothesis), got {q}"
            )));
        }
        Ok(Self { q })
    }

    /// Attacker share `q`.
    pub fn q(self) -> f64 {
        self.q
    }

    /// Honest share `p = 1 − q`.
    pub fn p(self) -> f64 {
        1.0 - self.q
    }
}

/// Number of confirmations `z`, constrained to `1 ..= 100`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Confirmations(u32);

impl Confirmations {
    pub fn new(z: u32) -> Result<Self> {
        if z == 0 || z > MAX_CONFIRMATIONS {
            return Err(Error::Domain(format!(
                "confirmations must be in 1..={MAX_CONFIRMATIONS}, got {z}"
            )));
        }
        Ok(Self(z))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl std::fmt::Display for Confirmations {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Observed timing of a confirmation window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Timing {
    /// Elapsed time in seconds.
    pub t: f64,
    /// Expected network block period in seconds.
    pub tau0: f64,
    /// Pace ratio `t / (z·τ₀)`.
    pub r: f64,
    /// Deviation `(1−q)·r` of honest mining time from its expectation.
    pub kappa: f64,
}

/// Derives `r` and `κ` from an observed elapsed time.
///
/// `r = t/(z·τ₀)` measures the observed pace against the network-expected
/// time for `z` blocks; `κ = (1−q)·r` rescales it to the honest miners'
/// expected time `z·τ₀/(1−q)`.
pub fn timing_from(
    t: f64,
    z: Confirmations,
    share: HashrateShare,
    tau0: f64,
) -> Result<Timing> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!(
            "elapsed time must be finite and >= 0 seconds, got {t}"
        )));
    }
    if !tau0.is_finite() || tau0 <= 0.0 {
        return Err(Error::Domain(format!(
            "block period tau0 must be finite and > 0 seconds, got {tau0}"
        )));
    }
    let r = t / (z.get() as f64 * tau0);
    let kappa = share.p() * r;
    Ok(Timing { t, tau0, r, kappa })
}

/// Probability the attacker ever catches up `z` confirmations, with the
/// elapsed time unknown: `I_{4pq}(z, 1/2)`.
///
/// Strictly increasing in `q` for fixed `z`, strictly decreasing in `z`
/// for fixed `q`, and approaching 1 as `q → 1/2`.
pub fn catchup_time_free(z: Confirmations, share: HashrateShare) -> Result<f64> {
    let (p, q) = (share.p(), share.q());
    // 4pq = 1 − (p−q)²; may round infinitesimally above 1 near q = 1/2,
    // which reg_inc_beta clamps.
    let x = 4.0 * p * q;
    specfun::reg_inc_beta(x, z.get() as f64, 0.5)
}

/// Probability the attacker catches up `z` confirmations that took a
/// relative honest-time deviation `κ`:
///
/// `P = 1 − Q(z, κzq/p) + (q/p)^z · exp(κz(p−q)/p) · Q(z, κz)`
///
/// The first term is the chance the attacker already mined `z` or more
/// blocks during the observed window; the second folds the gambler's-ruin
/// catch-up factor `(q/p)^{z−n}` over the remaining deficit. The
/// `(q/p)^z` and exponential factors are combined in log space so large
/// `z·κ` neither overflows nor collapses to `∞ · 0`.
pub fn catchup_timed(z: Confirmations, share: HashrateShare, kappa: f64) -> Result<f64> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::Domain(format!(
            "kappa must be finite and >= 0, got {kappa}"
        )));
    }
    let (p, q) = (share.p(), share.q());
    let zf = z.get() as f64;

    // P(z, κzq/p) = 1 − Q(z, κzq/p), evaluated on its dominant branch.
    let caught_during_window = specfun::reg_gamma_lower(zf, kappa * zf * q / p)?;

    let ln_ruin_factor = zf * (q / p).ln() + kappa * zf * (p - q) / p;
    let deficit_term = (ln_ruin_factor + specfun::ln_reg_gamma_upper(zf, kappa * zf)?).exp();

    let raw = caught_during_window + deficit_term;
    assert!(
        (-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&raw),
        "catch-up probability {raw} overshoots [0,1] beyond rounding tolerance"
    );
    Ok(raw.clamp(0.0, 1.0))
}

/// The tabulated probability `P̃(z, q, r) = P(z, q, (1−q)·r)`.
pub fn table_probability(z: Confirmations, share: HashrateShare, r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!(
            "pace ratio r must be finite and >= 0, got {r}"
        )));
    }
    catchup_timed(z, share, share.p() * r)
}

/// Result of the minimum-confirmation search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinConfirmations {
    /// Smallest `z` whose tabulated risk is at or below the target.
    Reached(Confirmations),
    /// No `z` up to the cap satisfies the target.
    NotReachedWithinCap { cap: u32 },
}

/// Smallest `z ∈ 1..=100` with `table_probability(z, share, r) <= risk_target`.
///
/// `r` is held fixed as `z` grows, matching how successive tables are
/// consulted at the same observed pace ratio; real elapsed time would
/// re-measure `t` for each `z`.
pub fn min_confirmations(
    share: HashrateShare,
    r: f64,
    risk_target: f64,
) -> Result<MinConfirmations> {
    if !risk_target.is_finite() || risk_target <= 0.0 || risk_target >= 1.0 {
        return Err(Error::Domain(format!(
            "risk target must lie strictly between 0 and 1, got {risk_target}"
        )));
    }
    for z in 1..=MAX_CONFIRMATIONS {
        let z = Confirmations::new(z)?;
        if table_probability(z, share, r)? <= risk_target {
            return Ok(MinConfirmations::Reached(z));
        }
    }
    Ok(MinConfirmations::NotReachedWithinCap {
        cap: MAX_CONFIRMATIONS,
    })
}
