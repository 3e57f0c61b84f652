//! Independent verification of the closed forms.
//!
//! The risk model's two theorems are checked from three directions that
//! share no code with the implementation they referee:
//!
//! * [`nb_exact`] — the time-free probability as a finite
//!   negative-binomial sum over the attacker's block count, plus the
//!   gambler's-ruin factor for each deficit.
//! * [`poisson_exact`] — the timed probability as the same sum with the
//!   attacker's count Poisson-distributed given the observed window.
//! * [`simulate_race`] — a forward Monte Carlo simulation of the race
//!   itself, deterministic for a fixed seed under any thread count.
//!
//! [`quad`] holds the quadrature referees for the special functions.

pub mod quad;

use crate::risk::{Confirmations, HashrateShare};
use crate::specfun;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Default failure cutoff for the deficit walk, in blocks.
pub const DEFAULT_MAX_DEFICIT: u32 = 200;

/// λ above which Poisson pmf terms are assembled in log space instead of
/// by plain recurrence from `e^{-λ}`.
const LOG_SPACE_LAMBDA: f64 = 700.0;

/// Exact time-free catch-up probability as a finite combinatorial sum.
///
/// Let `K` be the number of attacker blocks mined while the honest miners
/// mine `z` (negative binomial). Then
///
/// `P = Σ_{k<z} C(z+k−1, k) p^z q^k (q/p)^{z−k}  +  P(K ≥ z)`
///
/// No truncation is involved; binomial coefficients go through log-gamma
/// so nothing overflows up to `z = 100`.
pub fn nb_exact(z: Confirmations, share: HashrateShare) -> f64 {
    let zf = z.get() as f64;
    let (p, q) = (share.p(), share.q());
    let (ln_p, ln_q) = (p.ln(), q.ln());
    let ln_gamma_z = specfun::ln_gamma(zf).expect("z >= 1");

    let mut mass = 0.0; // Σ P(K = k), k < z
    let mut catch = 0.0; // Σ P(K = k) · (q/p)^{z−k}
    for k in 0..z.get() {
        let kf = k as f64;
        let ln_binomial = specfun::ln_gamma(zf + kf).expect("z + k > 0")
            - specfun::ln_gamma(kf + 1.0).expect("k + 1 > 0")
            - ln_gamma_z;
        let ln_pmf = ln_binomial + zf * ln_p + kf * ln_q;
        mass += ln_pmf.exp();
        catch += (ln_pmf + (zf - kf) * (ln_q - ln_p)).exp();
    }
    catch + (1.0 - mass)
}

/// Exact timed catch-up probability as a Poisson mixture.
///
/// Given the observed window, the attacker's block count `N` is Poisson
/// with mean `λ = κzq/p`:
///
/// `P = Σ_{k<z} e^{−λ} λ^k/k! · (q/p)^{z−k}  +  P(N ≥ z)`
///
/// Algebraically identical to [`crate::risk::catchup_timed`], factored
/// through the pmf instead of the incomplete gamma function.
pub fn poisson_exact(z: Confirmations, share: HashrateShare, kappa: f64) -> f64 {
    assert!(
        kappa.is_finite() && kappa >= 0.0,
        "kappa must be finite and >= 0, got {kappa}"
    );
    let zf = z.get() as f64;
    let (p, q) = (share.p(), share.q());
    let lambda = kappa * zf * q / p;
    let ln_ratio = q.ln() - p.ln();

    let mut mass = 0.0; // Σ P(N = k), k < z
    let mut catch = 0.0; // Σ P(N = k) · (q/p)^{z−k}
    if lambda <= LOG_SPACE_LAMBDA {
        let mut pmf = (-lambda).exp();
        let mut ruin = (zf * ln_ratio).exp(); // (q/p)^{z−k}, starting at k = 0
        for k in 0..z.get() {
            mass += pmf;
            catch += pmf * ruin;
            pmf *= lambda / (k + 1) as f64;
            ruin *= p / q;
        }
    } else {
        let ln_lambda = lambda.ln();
        for k in 0..z.get() {
            let kf = k as f64;
            let ln_pmf = kf * ln_lambda - lambda - specfun::ln_gamma(kf + 1.0).expect("k + 1 > 0");
            mass += ln_pmf.exp();
            catch += (ln_pmf + (zf - kf) * ln_ratio).exp();
        }
    }
    catch + (1.0 - mass)
}

/// Which race the simulator runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RaceMode {
    /// The attacker's head start is Poisson-distributed for the given κ.
    Timed { kappa: f64 },
    /// The honest mining time is simulated too (negative-binomial head
    /// start).
    TimeFree,
}

/// Monte Carlo configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    /// Deficit at which a walk is abandoned as a failure. The induced
    /// bias is bounded analytically and reported in the outcome.
    pub max_deficit: u32,
    pub mode: RaceMode,
}

impl TrialConfig {
    pub fn timed(trials: u64, seed: u64, kappa: f64) -> Self {
        Self {
            trials,
            seed,
            max_deficit: DEFAULT_MAX_DEFICIT,
            mode: RaceMode::Timed { kappa },
        }
    }

    pub fn time_free(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            max_deficit: DEFAULT_MAX_DEFICIT,
            mode: RaceMode::TimeFree,
        }
    }
}

/// Empirical estimate of a race probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RaceOutcome {
    /// Fraction of trials in which the attacker caught up.
    pub estimate: f64,
    /// Binomial standard error `√(p̂(1−p̂)/n)`.
    pub std_error: f64,
    /// Number of trials run.
    pub trials: u64,
    /// Upper bound `(q/p)^{max_deficit − z + 1}` on the probability mass
    /// lost to the deficit cutoff.
    pub truncation_bias_bound: f64,
}

/// Runs the double-spend race `config.trials` times.
///
/// Each trial draws the attacker's head start (Poisson in timed mode,
/// simulated negative binomial in time-free mode); a head start of `z` or
/// more is an immediate catch-up, anything less continues as a
/// `Bernoulli(q)` deficit walk that succeeds on reaching 0 and fails on
/// reaching `max_deficit`.
///
/// Trial `i` draws from the ChaCha8 stream `i` of the seed, so the result
/// is bit-identical for a fixed `(seed, config)` regardless of how the
/// trials are scheduled across threads.
pub fn simulate_race(
    z: Confirmations,
    share: HashrateShare,
    config: &TrialConfig,
) -> Result<RaceOutcome> {
    if config.trials == 0 {
        return Err(Error::Domain("trial count must be >= 1".into()));
    }
    if config.max_deficit < z.get() {
        return Err(Error::Domain(format!(
            "max_deficit {} must be >= z = {}",
            config.max_deficit,
            z.get()
        )));
    }
    let lambda = match config.mode {
        RaceMode::Timed { kappa } => {
            if !kappa.is_finite() || kappa < 0.0 {
                return Err(Error::Domain(format!(
                    "kappa must be finite and >= 0, got {kappa}"
                )));
            }
            Some(kappa * z.get() as f64 * share.q() / share.p())
        }
        RaceMode::TimeFree => None,
    };

    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let q = share.q();
    let zi = z.get();
    let max_deficit = config.max_deficit;

    let successes: u64 = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = base.clone();
            rng.set_stream(trial);
            let head_start = match lambda {
                Some(lambda) => sample_poisson(&mut rng, lambda),
                None => attacker_blocks_while_honest_mine(&mut rng, zi, q),
            };
            u64::from(race_from_head_start(&mut rng, head_start, zi, q, max_deficit))
        })
        .sum();

    let estimate = successes as f64 / config.trials as f64;
    let std_error = (estimate * (1.0 - estimate) / config.trials as f64).sqrt();
    let tail_exponent = (config.max_deficit - z.get() + 1) as f64;
    let truncation_bias_bound = (tail_exponent * (share.q().ln() - share.p().ln())).exp();

    Ok(RaceOutcome {
        estimate,
        std_error,
        trials: config.trials,
        truncation_bias_bound,
    })
}

/// Attacker blocks mined while the honest side mines `z`, simulated block
/// by block with `Bernoulli(q)` attribution.
fn attacker_blocks_while_honest_mine<R: Rng>(rng: &mut R, z: u32, q: f64) -> u64 {
    let mut honest = 0u32;
    let mut attacker = 0u64;
    while honest < z {
        if rng.random_bool(q) {
            attacker += 1;
        } else {
            honest += 1;
        }
    }
    attacker
}

/// Finishes a trial from the attacker's head start. A head start of `z`
/// counts as caught up (the race is to *catch up*, ties included).
fn race_from_head_start<R: Rng>(
    rng: &mut R,
    head_start: u64,
    z: u32,
    q: f64,
    max_deficit: u32,
) -> bool {
    if head_start >= u64::from(z) {
        return true;
    }
    let mut deficit = z - head_start as u32;
    if deficit >= max_deficit {
        return false;
    }
    loop {
        if rng.random_bool(q) {
            deficit -= 1;
            if deficit == 0 {
                return true;
            }
        } else {
            deficit += 1;
            if deficit >= max_deficit {
                return false;
            }
        }
    }
}

/// Poisson draw: CDF inversion by sequential search for small λ, the
/// transformed-rejection sampler for large λ (no normal approximation).
fn sample_poisson<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    if lambda == 0.0 {
        0
    } else if lambda < 30.0 {
        poisson_inversion(rng, lambda)
    } else {
        poisson_transformed_rejection(rng, lambda)
    }
}

fn poisson_inversion<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    // The cap is unreachable for λ < 30; it guards against the CDF
    // sticking below a u drawn within rounding of 1.
    while u > cdf && k < 2_000 {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k
}

/// Hörmann's PTRS transformed-rejection Poisson sampler, valid for λ ≥ 10.
fn poisson_transformed_rejection<R: Rng>(rng: &mut R, lambda: f64) -> u64 {
    let ln_lambda = lambda.ln();
    let b = 0.931 + 2.53 * lambda.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if (v * inv_alpha / (a / (us * us) + b)).ln()
            <= k * ln_lambda - lambda - specfun::ln_gamma(k + 1.0).expect("k + 1 > 0")
        {
            return k as u64;
        }
    }
}
