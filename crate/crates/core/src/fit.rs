//! Fit one or several model variants to a detection-history table and
//! summarize the structural parameter and WAIC for each.

use crate::data::{
    DetectionHistoryTable, GammaPrior, HeterogeneityMode, McmcSettings, ModelFamily, ModelSpec,
};
use crate::diagnostics::{summarize, waic, PosteriorSummary, WaicReport};
use crate::mcmc::{run_chains, McmcError, MultiChainRun};
use crate::seeds::derive_seed;
use std::fmt;

/// A model variant to fit, independent of the data family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Homogeneous,
    FiniteMixture(usize),
    Nonparametric,
}

impl ModelKind {
    /// Heterogeneity mode for this kind; `truncation` applies to NP only.
    pub fn to_mode(self, truncation: usize) -> HeterogeneityMode {
        match self {
            ModelKind::Homogeneous => HeterogeneityMode::Homogeneous,
            ModelKind::FiniteMixture(k) => HeterogeneityMode::FiniteMixture { k },
            ModelKind::Nonparametric => HeterogeneityMode::Nonparametric { truncation },
        }
    }

    /// Parse labels like `hom`, `fm2`, `fm(3)`, `np`.
    pub fn parse(s: &str) -> Option<ModelKind> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "hom" | "homogeneous" => Some(ModelKind::Homogeneous),
            "np" | "nonparametric" | "bnp" => Some(ModelKind::Nonparametric),
            _ => {
                let digits: String = s
                    .strip_prefix("fm")?
                    .chars()
                    .filter(|c| c.is_ascii_digit())
                    .collect();
                digits.parse::<usize>().ok().map(ModelKind::FiniteMixture)
            }
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Homogeneous => write!(f, "HOM"),
            ModelKind::FiniteMixture(k) => write!(f, "FM{k}"),
            ModelKind::Nonparametric => write!(f, "NP"),
        }
    }
}

/// Shared settings for a batch of fits on one table.
#[derive(Debug, Clone)]
pub struct FitSettings {
    pub n_chains: usize,
    pub mcmc: McmcSettings,
    pub alpha_prior: GammaPrior,
    /// Parameter slots allocated for NP fits.
    pub truncation: usize,
    pub seed: u64,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            n_chains: 3,
            mcmc: McmcSettings::default(),
            alpha_prior: GammaPrior::default(),
            truncation: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModelFitResult {
    pub model: ModelKind,
    pub summary: PosteriorSummary,
    pub waic: WaicReport,
    pub run: MultiChainRun,
}

/// Fit one model variant; chain seeds derive from `settings.seed` and the
/// model's index in the batch.
pub fn fit_one(
    table: &DetectionHistoryTable,
    family: ModelFamily,
    kind: ModelKind,
    settings: &FitSettings,
    model_index: u64,
) -> Result<ModelFitResult, McmcError> {
    let truncation = settings.truncation.min(table.n_units());
    let mut spec = ModelSpec::new(family, kind.to_mode(truncation));
    spec.alpha_prior = settings.alpha_prior;
    spec.mcmc = settings.mcmc.clone();
    spec.seed = derive_seed(settings.seed, &[model_index]);
    let run = run_chains(&spec, table, settings.n_chains)?;
    let summary = summarize(family.structural_name(), &run.pooled.structural, 0.95)
        .expect("retained draws are nonempty for a positive iteration budget");
    let waic = waic(&run.pooled.loglik).expect("pooled draws satisfy WAIC preconditions");
    Ok(ModelFitResult { model: kind, summary, waic, run })
}

/// Fit several model variants in order on the same table.
pub fn fit_models(
    table: &DetectionHistoryTable,
    family: ModelFamily,
    models: &[ModelKind],
    settings: &FitSettings,
) -> Result<Vec<ModelFitResult>, McmcError> {
    models
        .iter()
        .enumerate()
        .map(|(idx, &kind)| fit_one(table, family, kind, settings, idx as u64))
        .collect()
}
