//! Samplers and chain orchestration for all six model variants
//! (capture-recapture / occupancy × homogeneous / finite mixture /
//! nonparametric).
//!
//! A chain is strictly sequential; multiple chains with distinct derived
//! seeds run concurrently with no shared mutable state and identical seeds
//! give bit-identical draws.

mod adapt;
mod steps;

pub use adapt::AdaptiveScale;
pub use steps::{
    alpha_update_escobar_west, crp_active_p_update, crp_label_update_neal8, escobar_west_mix_weight,
    fm_label_gibbs, fm_ordered_p_update, reflect_unit, rw_update_probability, structural_update,
    unit_loglik, AuxiliaryCount, ClusterCounts, Neal8Outcome, RwOutcome,
};

use crate::data::{
    ChainState, DataError, DetectionHistoryTable, HeterogeneityMode, ModelSpec,
};
use crate::diagnostics::LogLikMatrix;
use crate::seeds::{derive_seed, rng_from_seed};
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McmcError {
    #[error(transparent)]
    Data(#[from] DataError),
}

/// One sampler pass in the per-sweep schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerAssignment {
    /// Full-conditional Gibbs draw of every finite-mixture label.
    LabelGibbsSweep,
    /// Auxiliary-variable label update of every unit (nonparametric).
    LabelNeal8Sweep { aux: usize },
    /// Single shared detection probability (homogeneous).
    HomogeneousDetectionUpdate,
    /// Each ordered detection probability under the non-decreasing constraint.
    OrderedDetectionUpdate,
    /// Detection probabilities of active clusters only.
    ActiveDetectionUpdate,
    /// Concentration parameter via the two-stage Gamma-mixture draw.
    ConcentrationUpdate,
    /// Survival or occupancy probability against the full-data likelihood.
    StructuralUpdate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptSettings {
    pub initial_scale: f64,
    pub interval: usize,
    pub target_acceptance: f64,
}

/// Ordered sampler assignments for one sweep, plus shared adaptation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSchedule {
    pub assignments: Vec<SamplerAssignment>,
    pub adapt: AdaptSettings,
}

impl SamplerSchedule {
    pub fn for_spec(spec: &ModelSpec) -> Self {
        use SamplerAssignment::*;
        let assignments = match spec.mode {
            HeterogeneityMode::Homogeneous => vec![HomogeneousDetectionUpdate, StructuralUpdate],
            HeterogeneityMode::FiniteMixture { .. } => {
                vec![LabelGibbsSweep, OrderedDetectionUpdate, StructuralUpdate]
            }
            HeterogeneityMode::Nonparametric { .. } => vec![
                LabelNeal8Sweep { aux: spec.mcmc.aux_count },
                ActiveDetectionUpdate,
                ConcentrationUpdate,
                StructuralUpdate,
            ],
        };
        SamplerSchedule {
            assignments,
            adapt: AdaptSettings {
                initial_scale: spec.mcmc.initial_scale,
                interval: spec.mcmc.adapt_interval,
                target_acceptance: spec.mcmc.target_acceptance,
            },
        }
    }

    /// Every free parameter block of the given mode has exactly one assigned
    /// sampler.
    pub fn covers_all_blocks(&self, spec: &ModelSpec) -> bool {
        use SamplerAssignment::*;
        let need: Vec<SamplerAssignment> = match spec.mode {
            HeterogeneityMode::Homogeneous => vec![HomogeneousDetectionUpdate, StructuralUpdate],
            HeterogeneityMode::FiniteMixture { .. } => {
                vec![LabelGibbsSweep, OrderedDetectionUpdate, StructuralUpdate]
            }
            HeterogeneityMode::Nonparametric { .. } => vec![
                LabelNeal8Sweep { aux: spec.mcmc.aux_count },
                ActiveDetectionUpdate,
                ConcentrationUpdate,
                StructuralUpdate,
            ],
        };
        need.iter().all(|a| self.assignments.iter().filter(|b| *b == a).count() == 1)
            && self.assignments.len() == need.len()
    }
}

/// Per-iteration records of retained scalars, label vectors, active-cluster
/// counts, and the per-unit log-likelihood matrix WAIC consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub structural: Vec<f64>,
    /// Concentration draws; empty outside the nonparametric mode.
    pub alpha: Vec<f64>,
    /// Active-cluster count per retained sweep; empty outside NP mode.
    pub n_clusters: Vec<usize>,
    /// Label vectors, thinned by `label_thin`; empty unless NP mode with
    /// label storage enabled.
    pub labels: Vec<Vec<u32>>,
    pub loglik: LogLikMatrix,
}

impl PosteriorDraws {
    fn empty(n_units: usize) -> Self {
        PosteriorDraws {
            structural: Vec::new(),
            alpha: Vec::new(),
            n_clusters: Vec::new(),
            labels: Vec::new(),
            loglik: LogLikMatrix::new(n_units),
        }
    }

    pub fn n_retained(&self) -> usize {
        self.structural.len()
    }
}

/// Acceptance bookkeeping for one proposal block.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BlockAcceptance {
    pub block: String,
    pub rate: f64,
    pub attempts: u64,
}

/// Run metadata emitted alongside the draws (JSON-serializable).
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunReport {
    pub seed: u64,
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub acceptance: Vec<BlockAcceptance>,
    /// Sweep indices at which the truncation bound suppressed new clusters.
    pub truncation_warnings: Vec<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ChainRun {
    pub draws: PosteriorDraws,
    pub report: RunReport,
}

/// Initial state: structural and detection probabilities at 0.5, every unit
/// in the first cluster, concentration at 1.
pub fn initial_state(spec: &ModelSpec, table: &DetectionHistoryTable) -> ChainState {
    let n_slots = spec.mode.n_slots();
    ChainState {
        structural: 0.5,
        p: vec![0.5; n_slots],
        labels: if spec.mode.uses_labels() { vec![0; table.n_units()] } else { Vec::new() },
        alpha: matches!(spec.mode, HeterogeneityMode::Nonparametric { .. }).then_some(1.0),
    }
}

/// Run one chain; deterministic given the seed.
pub fn run_chain(
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    rng_seed: u64,
) -> Result<ChainRun, McmcError> {
    run_chain_with_observer(spec, table, rng_seed, |_| {})
}

/// [`run_chain`] with a callback invoked on the state at every retained
/// sweep; used by invariant tests.
pub fn run_chain_with_observer<F>(
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    rng_seed: u64,
    mut observe: F,
) -> Result<ChainRun, McmcError>
where
    F: FnMut(&ChainState),
{
    spec.validate_for(table)?;
    let started = Instant::now();
    let mut rng = rng_from_seed(rng_seed);
    let schedule = SamplerSchedule::for_spec(spec);
    debug_assert!(schedule.covers_all_blocks(spec));

    let mut state = initial_state(spec, table);
    let is_np = matches!(spec.mode, HeterogeneityMode::Nonparametric { .. });
    let mut counts = is_np.then(|| ClusterCounts::from_labels(&state.labels, state.p.len()));
    let aux = AuxiliaryCount::new(spec.mcmc.aux_count).expect("validated aux count");

    let adapt = &schedule.adapt;
    let mut structural_scale =
        AdaptiveScale::new(adapt.initial_scale, adapt.target_acceptance, adapt.interval);
    // One adaptive scale per ordered slot in FM mode; a single shared scale
    // for the homogeneous p and for NP active-cluster updates (slots come
    // and go, so per-slot windows would never fill).
    let n_p_scales = match spec.mode {
        HeterogeneityMode::FiniteMixture { k } => k,
        _ => 1,
    };
    let mut p_scales: Vec<AdaptiveScale> = (0..n_p_scales)
        .map(|_| AdaptiveScale::new(adapt.initial_scale, adapt.target_acceptance, adapt.interval))
        .collect();

    let mut draws = PosteriorDraws::empty(table.n_units());
    let mut truncation_warnings: Vec<usize> = Vec::new();
    let total_sweeps = spec.mcmc.burnin + spec.mcmc.iterations;
    let mut loglik_row = vec![0.0f64; table.n_units()];

    for sweep in 0..total_sweeps {
        if sweep == spec.mcmc.burnin {
            structural_scale.freeze();
            for s in &mut p_scales {
                s.freeze();
            }
        }

        for assignment in &schedule.assignments {
            match *assignment {
                SamplerAssignment::LabelGibbsSweep => {
                    for i in 0..table.n_units() {
                        state.labels[i] = fm_label_gibbs(i, &state, spec, table, &mut rng);
                    }
                }
                SamplerAssignment::LabelNeal8Sweep { .. } => {
                    let counts = counts.as_mut().expect("NP mode maintains counts");
                    let mut suppressed = false;
                    for i in 0..table.n_units() {
                        let outcome = crp_label_update_neal8(
                            i, &mut state, counts, spec, table, aux, &mut rng,
                        );
                        suppressed |= outcome.truncation_suppressed;
                    }
                    if suppressed {
                        truncation_warnings.push(sweep);
                    }
                }
                SamplerAssignment::HomogeneousDetectionUpdate => {
                    let structural = state.structural;
                    let family = spec.family;
                    let outcome = rw_update_probability(
                        state.p[0],
                        |p| {
                            (0..table.n_units())
                                .map(|i| {
                                    unit_loglik(family, table.unit_history(i), structural, p)
                                })
                                .sum()
                        },
                        p_scales[0].scale(),
                        &mut rng,
                    );
                    p_scales[0].record(outcome.accepted);
                    state.p[0] = outcome.value;
                }
                SamplerAssignment::OrderedDetectionUpdate => {
                    fm_ordered_p_update(&mut state, spec, table, &mut p_scales, &mut rng);
                }
                SamplerAssignment::ActiveDetectionUpdate => {
                    let counts = counts.as_ref().expect("NP mode maintains counts");
                    crp_active_p_update(
                        &mut state,
                        counts,
                        spec,
                        table,
                        &mut p_scales[0],
                        &mut rng,
                    );
                }
                SamplerAssignment::ConcentrationUpdate => {
                    let counts = counts.as_ref().expect("NP mode maintains counts");
                    let alpha = state.alpha.expect("NP state carries alpha");
                    state.alpha = Some(alpha_update_escobar_west(
                        alpha,
                        counts.n_active(),
                        table.n_units(),
                        spec.alpha_prior,
                        &mut rng,
                    ));
                }
                SamplerAssignment::StructuralUpdate => {
                    structural_update(&mut state, spec, table, &mut structural_scale, &mut rng);
                }
            }
        }

        if sweep < spec.mcmc.burnin {
            continue;
        }
        let retained_idx = sweep - spec.mcmc.burnin;
        if retained_idx % spec.mcmc.thin == 0 {
            draws.structural.push(state.structural);
            if let Some(alpha) = state.alpha {
                draws.alpha.push(alpha);
            }
            if let Some(counts) = counts.as_ref() {
                draws.n_clusters.push(counts.n_active());
            }
            for (i, slot) in loglik_row.iter_mut().enumerate() {
                *slot = unit_loglik(
                    spec.family,
                    table.unit_history(i),
                    state.structural,
                    state.unit_p(i),
                );
            }
            draws.loglik.push_row(&loglik_row);
            observe(&state);
        }
        if is_np {
            if let Some(label_thin) = spec.mcmc.label_thin {
                if retained_idx % label_thin == 0 {
                    draws.labels.push(state.labels.iter().map(|&g| g as u32).collect());
                }
            }
        }
    }

    let mut acceptance = vec![BlockAcceptance {
        block: spec.family.structural_name().to_string(),
        rate: structural_scale.acceptance_rate(),
        attempts: structural_scale.attempts(),
    }];
    match spec.mode {
        HeterogeneityMode::Homogeneous => acceptance.push(BlockAcceptance {
            block: "p".into(),
            rate: p_scales[0].acceptance_rate(),
            attempts: p_scales[0].attempts(),
        }),
        HeterogeneityMode::FiniteMixture { .. } => {
            for (k, s) in p_scales.iter().enumerate() {
                acceptance.push(BlockAcceptance {
                    block: format!("p[{k}]"),
                    rate: s.acceptance_rate(),
                    attempts: s.attempts(),
                });
            }
        }
        HeterogeneityMode::Nonparametric { .. } => acceptance.push(BlockAcceptance {
            block: "p_active".into(),
            rate: p_scales[0].acceptance_rate(),
            attempts: p_scales[0].attempts(),
        }),
    }

    Ok(ChainRun {
        draws,
        report: RunReport {
            seed: rng_seed,
            iterations: spec.mcmc.iterations,
            burnin: spec.mcmc.burnin,
            thin: spec.mcmc.thin,
            acceptance,
            truncation_warnings,
            seconds: started.elapsed().as_secs_f64(),
        },
    })
}

/// Pooled draws from several chains run concurrently with derived seeds.
#[derive(Debug, Clone)]
pub struct MultiChainRun {
    pub pooled: PosteriorDraws,
    pub chain_reports: Vec<RunReport>,
    pub chain_seeds: Vec<u64>,
}

impl MultiChainRun {
    pub fn total_truncation_warnings(&self) -> usize {
        self.chain_reports.iter().map(|r| r.truncation_warnings.len()).sum()
    }
}

/// Run `n_chains` chains with seeds derived from `spec.seed` and pool their
/// retained draws in chain order.
pub fn run_chains(
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
    n_chains: usize,
) -> Result<MultiChainRun, McmcError> {
    assert!(n_chains >= 1, "at least one chain");
    let chain_seeds: Vec<u64> =
        (0..n_chains).map(|c| derive_seed(spec.seed, &[c as u64])).collect();
    let runs: Result<Vec<ChainRun>, McmcError> = chain_seeds
        .par_iter()
        .map(|&seed| run_chain(spec, table, seed))
        .collect();
    let runs = runs?;

    let mut pooled = PosteriorDraws::empty(table.n_units());
    let mut chain_reports = Vec::with_capacity(n_chains);
    for run in runs {
        pooled.structural.extend_from_slice(&run.draws.structural);
        pooled.alpha.extend_from_slice(&run.draws.alpha);
        pooled.n_clusters.extend_from_slice(&run.draws.n_clusters);
        pooled.labels.extend(run.draws.labels);
        pooled.loglik.extend(&run.draws.loglik);
        chain_reports.push(run.report);
    }
    Ok(MultiChainRun { pooled, chain_reports, chain_seeds })
}
