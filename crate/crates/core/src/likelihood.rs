//! Closed-form per-unit log-likelihoods with the discrete latent states
//! (alive/dead, occupied) marginalized out.
//!
//! The capture-recapture likelihood conditions on first capture: the first
//! entry of the history contributes no factor, and later occasions are folded
//! in by a forward recursion over the alive/dead pair. All accumulation is in
//! log space; `-inf` is a legal return (an impossible observation under the
//! given parameters) and samplers treat it as automatic rejection.

use crate::data::ModelFamily;
use thiserror::Error;

/// Largest history length the enumeration oracle will accept.
pub const ORACLE_MAX_LEN: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum LikelihoodError {
    #[error("{name} = {value} is outside [0,1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("capture-recapture history must start with a detection")]
    HistoryNotConditioned,
    #[error("history must contain at least one occasion")]
    EmptyHistory,
    #[error("enumeration refused: history length {len} exceeds {max}")]
    EnumerationTooLong { len: usize, max: usize },
}

fn check_prob(name: &'static str, value: f64) -> Result<(), LikelihoodError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(LikelihoodError::ProbabilityOutOfRange { name, value })
    }
}

/// ln with ln(0) = -inf instead of NaN-adjacent surprises at the boundary.
#[inline]
fn ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Numerically stable log(exp(a) + exp(b)).
#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Log-probability of a capture-recapture history conditional on first
/// capture, with alive/dead status marginalized by forward recursion.
///
/// `history` runs from the first capture onward and must start with 1.
/// A length-1 history has no post-capture information and returns 0.
pub fn cjs_loglik(history: &[u8], phi: f64, p: f64) -> Result<f64, LikelihoodError> {
    check_prob("phi", phi)?;
    check_prob("p", p)?;
    if history.is_empty() {
        return Err(LikelihoodError::EmptyHistory);
    }
    if history[0] != 1 {
        return Err(LikelihoodError::HistoryNotConditioned);
    }

    let ln_phi = ln(phi);
    let ln_dead = ln(1.0 - phi);
    let ln_p = ln(p);
    let ln_miss = ln(1.0 - p);

    // Log-mass of (observations so far, alive now) and (observations so
    // far, dead now). The first occasion is conditioned on and contributes
    // no factor.
    let mut alive = 0.0f64;
    let mut dead = f64::NEG_INFINITY;
    for &y in &history[1..] {
        if y == 1 {
            alive += ln_phi + ln_p;
            dead = f64::NEG_INFINITY;
        } else {
            dead = log_add_exp(alive + ln_dead, dead);
            alive += ln_phi + ln_miss;
        }
    }
    Ok(log_add_exp(alive, dead))
}

/// Log-probability of an occupancy survey history:
/// log[ psi * prod_t p^y (1-p)^(1-y) + (1-psi) * 1{all zero} ].
pub fn occ_loglik(history: &[u8], psi: f64, p: f64) -> Result<f64, LikelihoodError> {
    check_prob("psi", psi)?;
    check_prob("p", p)?;
    if history.is_empty() {
        return Err(LikelihoodError::EmptyHistory);
    }
    let occupied = ln(psi) + occ_detection_loglik(history, p)?;
    let unoccupied = if history.iter().all(|&y| y == 0) {
        ln(1.0 - psi)
    } else {
        f64::NEG_INFINITY
    };
    Ok(log_add_exp(occupied, unoccupied))
}

/// Detection log-likelihood of the occupied branch only:
/// log prod_t p^y (1-p)^(1-y). Used by label updates.
pub fn occ_detection_loglik(history: &[u8], p: f64) -> Result<f64, LikelihoodError> {
    check_prob("p", p)?;
    if history.is_empty() {
        return Err(LikelihoodError::EmptyHistory);
    }
    let detections = history.iter().filter(|&&y| y == 1).count();
    let misses = history.len() - detections;
    // Zero counts must not touch a potentially -inf log term.
    let mut ll = 0.0;
    if detections > 0 {
        ll += detections as f64 * ln(p);
    }
    if misses > 0 {
        ll += misses as f64 * ln(1.0 - p);
    }
    Ok(ll)
}

/// Brute-force enumeration over every latent configuration; the independent
/// oracle the closed forms are tested against. Refuses long histories.
pub fn oracle_loglik(
    history: &[u8],
    structural: f64,
    p: f64,
    family: ModelFamily,
) -> Result<f64, LikelihoodError> {
    if history.len() > ORACLE_MAX_LEN {
        return Err(LikelihoodError::EnumerationTooLong {
            len: history.len(),
            max: ORACLE_MAX_LEN,
        });
    }
    match family {
        ModelFamily::CaptureRecapture => oracle_cjs(history, structural, p),
        ModelFamily::Occupancy => oracle_occ(history, structural, p),
    }
}

fn bernoulli(y: u8, q: f64) -> f64 {
    if y == 1 {
        q
    } else {
        1.0 - q
    }
}

/// Sum P(x, y | alive at first capture) over all 2^(L-1) latent alive/dead
/// sequences. Inadmissible sequences (revival after death) carry exact
/// probability zero through the Bernoulli(phi * x_prev) transition.
fn oracle_cjs(history: &[u8], phi: f64, p: f64) -> Result<f64, LikelihoodError> {
    check_prob("phi", phi)?;
    check_prob("p", p)?;
    if history.is_empty() {
        return Err(LikelihoodError::EmptyHistory);
    }
    if history[0] != 1 {
        return Err(LikelihoodError::HistoryNotConditioned);
    }
    let tail = history.len() - 1;
    let mut total = 0.0f64;
    for bits in 0u32..(1u32 << tail) {
        let mut prob = 1.0f64;
        let mut x_prev = 1u8;
        for (t, &y) in history[1..].iter().enumerate() {
            let x = ((bits >> t) & 1) as u8;
            prob *= bernoulli(x, phi * x_prev as f64);
            prob *= bernoulli(y, p * x as f64);
            x_prev = x;
        }
        total += prob;
    }
    Ok(ln(total))
}

/// Sum P(z, y) over the two occupancy states.
fn oracle_occ(history: &[u8], psi: f64, p: f64) -> Result<f64, LikelihoodError> {
    check_prob("psi", psi)?;
    check_prob("p", p)?;
    if history.is_empty() {
        return Err(LikelihoodError::EmptyHistory);
    }
    let mut total = 0.0f64;
    for z in 0u8..=1 {
        let mut prob = bernoulli(z, psi);
        for &y in history {
            prob *= bernoulli(y, p * z as f64);
        }
        total += prob;
    }
    Ok(ln(total))
}
