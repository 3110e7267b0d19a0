//! Bayesian capture-recapture and occupancy models with detection
//! heterogeneity.
//!
//! The library fits binary detection-history data under three treatments of
//! detection probability — a single shared value, a finite mixture of
//! ordered subgroups, and a Dirichlet-process (Chinese restaurant process)
//! mixture with an unknown number of subgroups — using MCMC with latent
//! alive/dead and occupancy states marginalized out of the likelihood.
//! Model comparison uses WAIC, and a simulation harness regenerates the
//! two-subgroup bias experiments on a desk-scale budget.
//!
//! Entry points:
//! - [`data::load_history_csv`] — ingest detection histories.
//! - [`mcmc::run_chain`] / [`mcmc::run_chains`] — posterior sampling.
//! - [`fit::fit_models`] — fit a batch of model variants to one table.
//! - [`diagnostics`] — summaries, WAIC, cluster-count posteriors.
//! - [`sim::run_grid`] — the simulation experiment grid.

pub mod data;
pub mod diagnostics;
pub mod fit;
pub mod likelihood;
pub mod mcmc;
pub mod seeds;
pub mod sim;
