//! Individual sampler updates: reflected random walks on probabilities,
//! finite-mixture label Gibbs, the non-conjugate auxiliary-variable label
//! update for the restaurant-process mixture, and the two-stage Gamma-mixture
//! update for the concentration parameter.

use crate::data::{ChainState, DetectionHistoryTable, GammaPrior, ModelFamily, ModelSpec};
use crate::likelihood::{cjs_loglik, occ_loglik};
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};

/// Marginalized log-likelihood of one unit's history.
///
/// Parameters are validated probabilities by construction, so errors here
/// are programming bugs and panic.
#[inline]
pub fn unit_loglik(family: ModelFamily, history: &[u8], structural: f64, p: f64) -> f64 {
    let ll = match family {
        ModelFamily::CaptureRecapture => cjs_loglik(history, structural, p),
        ModelFamily::Occupancy => occ_loglik(history, structural, p),
    };
    ll.expect("chain state parameters must be valid probabilities")
}

/// Sum of unit log-likelihoods over `units` at the given parameters.
fn members_loglik(
    family: ModelFamily,
    table: &DetectionHistoryTable,
    units: &[usize],
    structural: f64,
    p: f64,
) -> f64 {
    units
        .iter()
        .map(|&i| unit_loglik(family, table.unit_history(i), structural, p))
        .sum()
}

/// Fold a real number into `[0,1]` by reflecting at both ends.
#[inline]
pub fn reflect_unit(x: f64) -> f64 {
    let folded = x.rem_euclid(2.0);
    if folded > 1.0 {
        2.0 - folded
    } else {
        folded
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwOutcome {
    pub value: f64,
    pub accepted: bool,
}

/// One Metropolis step for a probability under a Uniform(0,1) prior.
///
/// The candidate is a Gaussian step reflected into `[0,1]`; reflection keeps
/// the proposal symmetric, so the acceptance ratio is the likelihood ratio.
/// A `-inf` candidate log-likelihood rejects automatically; a NaN at the
/// current value is a contract violation.
pub fn rw_update_probability<F, R>(current: f64, mut loglik: F, scale: f64, rng: &mut R) -> RwOutcome
where
    F: FnMut(f64) -> f64,
    R: Rng + ?Sized,
{
    let step: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
    let ln_u = rng.random::<f64>().ln();
    let candidate = reflect_unit(current + step);

    let ll_current = loglik(current);
    assert!(!ll_current.is_nan(), "log-likelihood at the current state is NaN");
    let ll_candidate = loglik(candidate);

    let accepted = if ll_candidate.is_nan() || ll_candidate == f64::NEG_INFINITY {
        false
    } else if ll_current == f64::NEG_INFINITY {
        true
    } else {
        ll_candidate - ll_current > ln_u
    };
    RwOutcome { value: if accepted { candidate } else { current }, accepted }
}

/// Sample an index proportional to `exp(log_weights)`.
///
/// Panics when every weight is zero; callers guarantee at least one
/// evaluable option.
pub(crate) fn sample_categorical_log<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> usize {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        max > f64::NEG_INFINITY,
        "all conditional weights are zero; no admissible assignment"
    );
    let weights: Vec<f64> = log_weights.iter().map(|&w| (w - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last_positive = 0;
    for (idx, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = idx;
            if u < w {
                return idx;
            }
            u -= w;
        }
    }
    last_positive
}

/// Gibbs draw of a finite-mixture label: the 1/K membership weights are
/// uniform, so the full conditional is proportional to the unit likelihood
/// under each group's detection probability.
pub fn fm_label_gibbs<R: Rng + ?Sized>(
    i: usize,
    state: &ChainState,
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    rng: &mut R,
) -> usize {
    let history = table.unit_history(i);
    let log_weights: Vec<f64> = state
        .p
        .iter()
        .map(|&pk| unit_loglik(spec.family, history, state.structural, pk))
        .collect();
    sample_categorical_log(&log_weights, rng)
}

/// Membership lists per detection slot.
pub(crate) fn members_by_slot(labels: &[usize], n_slots: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); n_slots];
    for (i, &g) in labels.iter().enumerate() {
        members[g].push(i);
    }
    members
}

/// Update each ordered detection probability by a reflected random walk,
/// rejecting any proposal that breaks the non-decreasing constraint before
/// its likelihood is evaluated.
pub fn fm_ordered_p_update<R: Rng + ?Sized>(
    state: &mut ChainState,
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    scales: &mut [super::adapt::AdaptiveScale],
    rng: &mut R,
) {
    let k = state.p.len();
    let members = members_by_slot(&state.labels, k);
    for slot in 0..k {
        let lower = if slot == 0 { 0.0 } else { state.p[slot - 1] };
        let upper = if slot + 1 == k { 1.0 } else { state.p[slot + 1] };
        let outcome = constrained_p_step(
            state,
            spec,
            table,
            &members[slot],
            slot,
            lower,
            upper,
            scales[slot].scale(),
            rng,
        );
        scales[slot].record(outcome.accepted);
        state.p[slot] = outcome.value;
    }
}

/// Reflected random-walk step for `p[slot]` restricted to [lower, upper].
#[allow(clippy::too_many_arguments)]
fn constrained_p_step<R: Rng + ?Sized>(
    state: &ChainState,
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    members: &[usize],
    slot: usize,
    lower: f64,
    upper: f64,
    scale: f64,
    rng: &mut R,
) -> RwOutcome {
    let current = state.p[slot];
    let step: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
    let ln_u = rng.random::<f64>().ln();
    let candidate = reflect_unit(current + step);

    // Ordering violations have prior density zero; reject without touching
    // the likelihood.
    if candidate < lower || candidate > upper {
        return RwOutcome { value: current, accepted: false };
    }
    let ll_current = members_loglik(spec.family, table, members, state.structural, current);
    assert!(!ll_current.is_nan(), "log-likelihood at the current state is NaN");
    let ll_candidate = members_loglik(spec.family, table, members, state.structural, candidate);
    let accepted = if ll_candidate.is_nan() || ll_candidate == f64::NEG_INFINITY {
        false
    } else if ll_current == f64::NEG_INFINITY {
        true
    } else {
        ll_candidate - ll_current > ln_u
    };
    RwOutcome { value: if accepted { candidate } else { current }, accepted }
}

/// Number of auxiliary components used by the label update; at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxiliaryCount(usize);

impl AuxiliaryCount {
    pub fn new(m: usize) -> Option<Self> {
        (m >= 1).then_some(AuxiliaryCount(m))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Per-slot membership counts for the nonparametric partition, maintained
/// incrementally across label updates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterCounts {
    counts: Vec<usize>,
    n_active: usize,
}

impl ClusterCounts {
    pub fn from_labels(labels: &[usize], n_slots: usize) -> Self {
        let mut counts = vec![0usize; n_slots];
        for &g in labels {
            counts[g] += 1;
        }
        let n_active = counts.iter().filter(|&&c| c > 0).count();
        ClusterCounts { counts, n_active }
    }

    pub fn count(&self, slot: usize) -> usize {
        self.counts[slot]
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn n_slots(&self) -> usize {
        self.counts.len()
    }

    fn remove(&mut self, slot: usize) {
        self.counts[slot] -= 1;
        if self.counts[slot] == 0 {
            self.n_active -= 1;
        }
    }

    fn add(&mut self, slot: usize) {
        if self.counts[slot] == 0 {
            self.n_active += 1;
        }
        self.counts[slot] += 1;
    }

    pub fn active_slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(s, _)| s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neal8Outcome {
    pub new_label: usize,
    pub opened_new_cluster: bool,
    /// True when every parameter slot was occupied so the new-cluster option
    /// had to be suppressed for this update.
    pub truncation_suppressed: bool,
}

/// Auxiliary-variable label update for unit `i` (Neal's non-conjugate
/// algorithm with `m` auxiliaries).
///
/// The unit is removed from its cluster; if it was a singleton its parameter
/// value is retained as the first auxiliary, and the remaining auxiliaries
/// are drawn fresh from the Uniform(0,1) base distribution into free slots.
/// The label is drawn with weight `n_c * L_i(p_c)` for each occupied cluster
/// and `(alpha/m) * L_i(p_aux)` for each auxiliary. A chosen auxiliary's
/// value is written into its slot, activating a new cluster; emptied slots
/// simply become inactive and their stale values are never read.
pub fn crp_label_update_neal8<R: Rng + ?Sized>(
    i: usize,
    state: &mut ChainState,
    counts: &mut ClusterCounts,
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    aux: AuxiliaryCount,
    rng: &mut R,
) -> Neal8Outcome {
    let alpha = state.alpha.expect("nonparametric state carries alpha");
    let m = aux.get();
    let old = state.labels[i];
    counts.remove(old);
    let was_singleton = counts.count(old) == 0;

    let history = table.unit_history(i);
    let n_slots = state.p.len();

    let mut slots: Vec<usize> = Vec::with_capacity(counts.n_active() + m);
    let mut log_weights: Vec<f64> = Vec::with_capacity(counts.n_active() + m);
    for slot in 0..n_slots {
        let c = counts.count(slot);
        if c > 0 {
            slots.push(slot);
            log_weights.push(
                (c as f64).ln()
                    + unit_loglik(spec.family, history, state.structural, state.p[slot]),
            );
        }
    }
    let n_occupied = slots.len();

    // Auxiliaries: (slot, value) pairs. Values are only written into the
    // state if the auxiliary is chosen, so unused slots stay bit-identical.
    let mut auxiliaries: Vec<(usize, f64)> = Vec::with_capacity(m);
    if was_singleton {
        auxiliaries.push((old, state.p[old]));
    }
    for slot in 0..n_slots {
        if auxiliaries.len() == m {
            break;
        }
        if counts.count(slot) == 0 && !(was_singleton && slot == old) {
            auxiliaries.push((slot, rng.random::<f64>()));
        }
    }
    let truncation_suppressed = auxiliaries.is_empty();

    let ln_alpha_over_m = (alpha / m as f64).ln();
    for &(_, value) in &auxiliaries {
        log_weights
            .push(ln_alpha_over_m + unit_loglik(spec.family, history, state.structural, value));
    }

    let choice = sample_categorical_log(&log_weights, rng);
    let (new_label, opened) = if choice < n_occupied {
        (slots[choice], false)
    } else {
        let (slot, value) = auxiliaries[choice - n_occupied];
        state.p[slot] = value;
        (slot, true)
    };
    state.labels[i] = new_label;
    counts.add(new_label);
    Neal8Outcome { new_label, opened_new_cluster: opened, truncation_suppressed }
}

/// Random-walk update of each active cluster's detection probability against
/// the likelihood of its member units. Inactive slots are untouched.
pub fn crp_active_p_update<R: Rng + ?Sized>(
    state: &mut ChainState,
    counts: &ClusterCounts,
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    scale: &mut super::adapt::AdaptiveScale,
    rng: &mut R,
) {
    let members = members_by_slot(&state.labels, state.p.len());
    for slot in 0..state.p.len() {
        if counts.count(slot) == 0 {
            continue;
        }
        let structural = state.structural;
        let family = spec.family;
        let outcome = rw_update_probability(
            state.p[slot],
            |p| members_loglik(family, table, &members[slot], structural, p),
            scale.scale(),
            rng,
        );
        scale.record(outcome.accepted);
        state.p[slot] = outcome.value;
    }
}

/// Mixture weight of the higher-shape Gamma component in the concentration
/// update: odds = (a + k - 1) / (n (b - ln eta)).
pub fn escobar_west_mix_weight(shape: f64, rate: f64, k: usize, n: usize, ln_eta: f64) -> f64 {
    let odds = (shape + k as f64 - 1.0) / (n as f64 * (rate - ln_eta));
    odds / (1.0 + odds)
}

/// Two-stage concentration-parameter draw under a Gamma(shape, rate) prior:
/// eta ~ Beta(alpha+1, n), then alpha from a two-component Gamma mixture
/// with rate b - ln eta.
pub fn alpha_update_escobar_west<R: Rng + ?Sized>(
    alpha: f64,
    k_active: usize,
    n_units: usize,
    prior: GammaPrior,
    rng: &mut R,
) -> f64 {
    assert!(alpha > 0.0 && k_active >= 1 && n_units >= 1);
    assert!(prior.shape > 0.0 && prior.rate > 0.0);

    let beta = Beta::new(alpha + 1.0, n_units as f64).expect("valid Beta parameters");
    let mut eta: f64 = beta.sample(rng);
    while eta <= 0.0 {
        // ln(0) would put infinite mass at alpha = 0; resample.
        eta = beta.sample(rng);
    }
    let ln_eta = eta.ln();
    let pi = escobar_west_mix_weight(prior.shape, prior.rate, k_active, n_units, ln_eta);
    let shape = if rng.random::<f64>() < pi {
        prior.shape + k_active as f64
    } else {
        prior.shape + k_active as f64 - 1.0
    };
    let rate = prior.rate - ln_eta;
    let draw: f64 = Gamma::new(shape, 1.0 / rate).expect("valid Gamma parameters").sample(rng);
    // Shapes below 1 can underflow to zero; alpha must stay positive.
    draw.max(f64::MIN_POSITIVE)
}

/// Random-walk update of the structural parameter (survival or occupancy)
/// against the full-data likelihood at the current labels and p.
pub fn structural_update<R: Rng + ?Sized>(
    state: &mut ChainState,
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    scale: &mut super::adapt::AdaptiveScale,
    rng: &mut R,
) {
    let outcome = {
        let state_ref = &*state;
        rw_update_probability(
            state_ref.structural,
            |s| {
                (0..table.n_units())
                    .map(|i| {
                        unit_loglik(spec.family, table.unit_history(i), s, state_ref.unit_p(i))
                    })
                    .sum()
            },
            scale.scale(),
            rng,
        )
    };
    scale.record(outcome.accepted);
    state.structural = outcome.value;
}
