//! Domain types for binary detection-history data and model configuration.
//!
//! A [`DetectionHistoryTable`] holds an N×T binary observation matrix, either
//! capture-recapture encounter histories (with a per-individual first-capture
//! occasion) or occupancy survey histories. [`ModelSpec`] bundles the model
//! family, heterogeneity mode, priors, and MCMC budget. All types here are
//! immutable after construction and safe to share across threads.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Which ecological model the data and likelihood refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelFamily {
    /// Cormack-Jolly-Seber survival model; conditions on first capture.
    CaptureRecapture,
    /// Static single-season occupancy model.
    Occupancy,
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelFamily::CaptureRecapture => write!(f, "CR"),
            ModelFamily::Occupancy => write!(f, "OCC"),
        }
    }
}

impl ModelFamily {
    /// Name of the structural parameter: survival `phi` or occupancy `psi`.
    pub fn structural_name(&self) -> &'static str {
        match self {
            ModelFamily::CaptureRecapture => "phi",
            ModelFamily::Occupancy => "psi",
        }
    }

    pub fn parse(s: &str) -> Option<ModelFamily> {
        match s.to_ascii_uppercase().as_str() {
            "CR" | "CAPTURE_RECAPTURE" | "CAPTURE-RECAPTURE" => Some(ModelFamily::CaptureRecapture),
            "OCC" | "OCCUPANCY" => Some(ModelFamily::Occupancy),
            _ => None,
        }
    }
}

/// How detection probability varies across individuals or sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeterogeneityMode {
    /// A single detection probability shared by every unit.
    Homogeneous,
    /// `k` subgroups with ordered detection probabilities and equal 1/k
    /// membership weights.
    FiniteMixture { k: usize },
    /// Dirichlet-process (CRP) mixture truncated to at most `truncation`
    /// parameter slots.
    Nonparametric { truncation: usize },
}

impl HeterogeneityMode {
    /// Number of detection-probability slots the state carries.
    pub fn n_slots(&self) -> usize {
        match self {
            HeterogeneityMode::Homogeneous => 1,
            HeterogeneityMode::FiniteMixture { k } => *k,
            HeterogeneityMode::Nonparametric { truncation } => *truncation,
        }
    }

    pub fn uses_labels(&self) -> bool {
        !matches!(self, HeterogeneityMode::Homogeneous)
    }
}

impl fmt::Display for HeterogeneityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeterogeneityMode::Homogeneous => write!(f, "HOM"),
            HeterogeneityMode::FiniteMixture { k } => write!(f, "FM{k}"),
            HeterogeneityMode::Nonparametric { .. } => write!(f, "NP"),
        }
    }
}

/// Gamma prior expressed as shape and rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for GammaPrior {
    fn default() -> Self {
        GammaPrior { shape: 1.0, rate: 1.0 }
    }
}

/// Iteration budget and proposal tuning for one chain.
///
/// `iterations` counts retained sweeps after `burnin`; the chain runs
/// `burnin + iterations` sweeps in total. Scalars are recorded every `thin`
/// retained sweeps; label vectors every `label_thin` retained sweeps when
/// `label_thin` is set, and never otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct McmcSettings {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub label_thin: Option<usize>,
    /// Initial standard deviation of reflected random-walk proposals.
    pub initial_scale: f64,
    /// Sweeps between proposal-scale adaptations during burn-in.
    pub adapt_interval: usize,
    /// Acceptance rate the adaptation steers toward.
    pub target_acceptance: f64,
    /// Auxiliary parameter draws per CRP label update.
    pub aux_count: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings {
            iterations: 5000,
            burnin: 2000,
            thin: 1,
            label_thin: None,
            initial_scale: 0.1,
            adapt_interval: 50,
            target_acceptance: 0.44,
            aux_count: 1,
        }
    }
}

/// Full model configuration: family, heterogeneity mode, priors, seed, budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub mode: HeterogeneityMode,
    pub alpha_prior: GammaPrior,
    pub seed: u64,
    pub mcmc: McmcSettings,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, mode: HeterogeneityMode) -> Self {
        ModelSpec {
            family,
            mode,
            alpha_prior: GammaPrior::default(),
            seed: 0,
            mcmc: McmcSettings::default(),
        }
    }

    /// Check the spec against a concrete table: mixture sizes must not exceed
    /// the number of units, and the MCMC settings must be usable.
    pub fn validate_for(&self, table: &DetectionHistoryTable) -> Result<(), DataError> {
        match self.mode {
            HeterogeneityMode::FiniteMixture { k } => {
                if k < 2 || k > table.n_units() {
                    return Err(DataError::InvalidSpec(format!(
                        "finite mixture needs 2 <= K <= {} units, got K={k}",
                        table.n_units()
                    )));
                }
            }
            HeterogeneityMode::Nonparametric { truncation } => {
                if truncation < 1 || truncation > table.n_units() {
                    return Err(DataError::InvalidSpec(format!(
                        "truncation needs 1 <= M <= {} units, got M={truncation}",
                        table.n_units()
                    )));
                }
            }
            HeterogeneityMode::Homogeneous => {}
        }
        if self.mcmc.thin == 0 || self.mcmc.label_thin == Some(0) {
            return Err(DataError::InvalidSpec("thinning interval must be >= 1".into()));
        }
        if self.mcmc.aux_count == 0 {
            return Err(DataError::InvalidSpec("auxiliary count must be >= 1".into()));
        }
        if self.mcmc.initial_scale.is_nan() || self.mcmc.initial_scale <= 0.0 {
            return Err(DataError::InvalidSpec("proposal scale must be positive".into()));
        }
        if self.alpha_prior.shape <= 0.0 || self.alpha_prior.rate <= 0.0 {
            return Err(DataError::InvalidSpec(
                "alpha prior shape and rate must be positive".into(),
            ));
        }
        let family_matches =
            table.first().is_some() == matches!(self.family, ModelFamily::CaptureRecapture);
        if !family_matches {
            return Err(DataError::InvalidSpec(format!(
                "table was built for a different family than {}",
                self.family
            )));
        }
        Ok(())
    }

    /// Serialize to the flat JSON document used by config files.
    pub fn to_json(&self) -> String {
        let wire = ModelSpecWire::from(self);
        serde_json::to_string_pretty(&wire).expect("spec serialization cannot fail")
    }

    /// Parse the flat JSON document. Missing tuning fields take defaults.
    pub fn from_json(text: &str) -> Result<ModelSpec, DataError> {
        let wire: ModelSpecWire = serde_json::from_str(text)?;
        wire.try_into()
    }
}

/// Flat wire format: keys family, mode, K, M, alpha_prior, seed,
/// iterations, burnin, thin.
#[derive(Serialize, Deserialize)]
struct ModelSpecWire {
    family: String,
    mode: String,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none", default)]
    k: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none", default)]
    m: Option<usize>,
    alpha_prior: [f64; 2],
    seed: u64,
    iterations: usize,
    burnin: usize,
    thin: usize,
}

impl From<&ModelSpec> for ModelSpecWire {
    fn from(spec: &ModelSpec) -> Self {
        let (k, m) = match spec.mode {
            HeterogeneityMode::Homogeneous => (None, None),
            HeterogeneityMode::FiniteMixture { k } => (Some(k), None),
            HeterogeneityMode::Nonparametric { truncation } => (None, Some(truncation)),
        };
        ModelSpecWire {
            family: spec.family.to_string(),
            mode: match spec.mode {
                HeterogeneityMode::Homogeneous => "HOM".into(),
                HeterogeneityMode::FiniteMixture { .. } => "FM".into(),
                HeterogeneityMode::Nonparametric { .. } => "NP".into(),
            },
            k,
            m,
            alpha_prior: [spec.alpha_prior.shape, spec.alpha_prior.rate],
            seed: spec.seed,
            iterations: spec.mcmc.iterations,
            burnin: spec.mcmc.burnin,
            thin: spec.mcmc.thin,
        }
    }
}

impl TryFrom<ModelSpecWire> for ModelSpec {
    type Error = DataError;

    fn try_from(wire: ModelSpecWire) -> Result<Self, DataError> {
        let family = ModelFamily::parse(&wire.family)
            .ok_or_else(|| DataError::InvalidSpec(format!("unknown family {:?}", wire.family)))?;
        let mode = match wire.mode.to_ascii_uppercase().as_str() {
            "HOM" => HeterogeneityMode::Homogeneous,
            "FM" => HeterogeneityMode::FiniteMixture {
                k: wire.k.ok_or_else(|| DataError::InvalidSpec("mode FM requires K".into()))?,
            },
            "NP" => HeterogeneityMode::Nonparametric {
                truncation: wire
                    .m
                    .ok_or_else(|| DataError::InvalidSpec("mode NP requires M".into()))?,
            },
            other => return Err(DataError::InvalidSpec(format!("unknown mode {other:?}"))),
        };
        Ok(ModelSpec {
            family,
            mode,
            alpha_prior: GammaPrior { shape: wire.alpha_prior[0], rate: wire.alpha_prior[1] },
            seed: wire.seed,
            mcmc: McmcSettings {
                iterations: wire.iterations,
                burnin: wire.burnin,
                thin: wire.thin,
                ..McmcSettings::default()
            },
        })
    }
}

/// N×T binary observation matrix, row-major, immutable after construction.
///
/// Capture-recapture tables also carry the 0-based occasion index of each
/// individual's first detection; occupancy tables do not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionHistoryTable {
    n_units: usize,
    n_occasions: usize,
    y: Vec<u8>,
    first: Option<Vec<usize>>,
}

impl DetectionHistoryTable {
    /// Build an occupancy table. Rows of all zeros are retained; they inform
    /// the unoccupied branch of the likelihood.
    pub fn occupancy(rows: Vec<Vec<u8>>) -> Result<Self, DataError> {
        Self::build(rows, false)
    }

    /// Build a capture-recapture table, computing each row's first-detection
    /// occasion. A row with no detection has no first capture and is an error.
    pub fn capture_recapture(rows: Vec<Vec<u8>>) -> Result<Self, DataError> {
        Self::build(rows, true)
    }

    fn build(rows: Vec<Vec<u8>>, capture_recapture: bool) -> Result<Self, DataError> {
        let n_units = rows.len();
        if n_units == 0 {
            return Err(DataError::Empty);
        }
        let n_occasions = rows[0].len();
        if n_occasions == 0 {
            return Err(DataError::Empty);
        }
        let mut y = Vec::with_capacity(n_units * n_occasions);
        let mut first = capture_recapture.then(|| Vec::with_capacity(n_units));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_occasions {
                return Err(DataError::RaggedRow {
                    row: i + 1,
                    expected: n_occasions,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(DataError::NonBinaryCell {
                        row: i + 1,
                        column: j + 1,
                        value: v.to_string(),
                    });
                }
                y.push(v);
            }
            if let Some(first) = first.as_mut() {
                let idx = row
                    .iter()
                    .position(|&v| v == 1)
                    .ok_or(DataError::AllZeroRow { row: i + 1 })?;
                first.push(idx);
            }
        }
        Ok(DetectionHistoryTable { n_units, n_occasions, y, first })
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_occasions(&self) -> usize {
        self.n_occasions
    }

    /// Full observation row for unit `i`.
    pub fn row(&self, i: usize) -> &[u8] {
        &self.y[i * self.n_occasions..(i + 1) * self.n_occasions]
    }

    /// 0-based first-detection occasions; `None` for occupancy tables.
    pub fn first(&self) -> Option<&[usize]> {
        self.first.as_deref()
    }

    /// Encounter history of unit `i` from its first capture onward.
    ///
    /// Panics when called on an occupancy table.
    pub fn cr_history(&self, i: usize) -> &[u8] {
        let first = self.first.as_ref().expect("cr_history requires a capture-recapture table");
        &self.row(i)[first[i]..]
    }

    /// The per-unit history the likelihood consumes: the first-capture suffix
    /// for capture-recapture tables, the full row for occupancy tables.
    pub fn unit_history(&self, i: usize) -> &[u8] {
        match &self.first {
            Some(first) => &self.row(i)[first[i]..],
            None => self.row(i),
        }
    }

    /// Render as header-less CSV of 0/1 cells, one row per unit.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.n_units * (2 * self.n_occasions + 1));
        for i in 0..self.n_units {
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push(if *v == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<(), DataError> {
        std::fs::write(path.as_ref(), self.to_csv_string()).map_err(|source| DataError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })
    }
}

/// Outcome of CSV ingestion: the validated table plus what was skipped.
#[derive(Debug)]
pub struct LoadedHistory {
    pub table: DetectionHistoryTable,
    /// Capture-recapture rows whose first detection fell on the final
    /// occasion; they carry no post-capture information and are dropped.
    pub dropped_final_occasion: usize,
    pub header_skipped: bool,
}

/// Load a detection-history CSV: comma-separated 0/1 cells, no header
/// required. A first row containing a non-numeric token is treated as a
/// header and skipped.
pub fn load_history_csv<P: AsRef<Path>>(
    path: P,
    family: ModelFamily,
) -> Result<LoadedHistory, DataError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|source| DataError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    parse_history_csv(&text, family)
}

/// Parse CSV text per [`load_history_csv`]. Row/column positions in errors
/// are 1-based line numbers in the input.
pub fn parse_history_csv(text: &str, family: ModelFamily) -> Result<LoadedHistory, DataError> {
    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut header_skipped = false;
    let mut dropped = 0usize;

    let mut first_content_row = true;
    for (line_idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        if first_content_row {
            first_content_row = false;
            let non_numeric = tokens.iter().any(|t| t.parse::<f64>().is_err());
            if non_numeric {
                header_skipped = true;
                continue;
            }
        }
        let mut row = Vec::with_capacity(tokens.len());
        for (col_idx, token) in tokens.iter().enumerate() {
            match *token {
                "0" => row.push(0u8),
                "1" => row.push(1u8),
                other => {
                    return Err(DataError::NonBinaryCell {
                        row: line_idx + 1,
                        column: col_idx + 1,
                        value: other.to_string(),
                    })
                }
            }
        }
        if let Some(w) = width {
            if row.len() != w {
                return Err(DataError::RaggedRow {
                    row: line_idx + 1,
                    expected: w,
                    found: row.len(),
                });
            }
        } else {
            width = Some(row.len());
        }
        match family {
            ModelFamily::CaptureRecapture => {
                let first = row
                    .iter()
                    .position(|&v| v == 1)
                    .ok_or(DataError::AllZeroRow { row: line_idx + 1 })?;
                if first == row.len() - 1 {
                    dropped += 1;
                } else {
                    rows.push(row);
                }
            }
            ModelFamily::Occupancy => rows.push(row),
        }
    }

    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    let table = match family {
        ModelFamily::CaptureRecapture => DetectionHistoryTable::capture_recapture(rows)?,
        ModelFamily::Occupancy => DetectionHistoryTable::occupancy(rows)?,
    };
    Ok(LoadedHistory { table, dropped_final_occasion: dropped, header_skipped })
}

/// Current values of all sampled parameters.
///
/// `labels` is empty in homogeneous mode; `alpha` is present only for the
/// nonparametric mode. Labels are 0-based indices into `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub structural: f64,
    pub p: Vec<f64>,
    pub labels: Vec<usize>,
    pub alpha: Option<f64>,
}

impl ChainState {
    /// Number of distinct labels in use (1 for homogeneous mode).
    pub fn n_active_clusters(&self) -> usize {
        if self.labels.is_empty() {
            1
        } else {
            self.labels.iter().collect::<HashSet<_>>().len()
        }
    }

    /// Detection probability for unit `i` under the current labels.
    pub fn unit_p(&self, i: usize) -> f64 {
        if self.labels.is_empty() {
            self.p[0]
        } else {
            self.p[self.labels[i]]
        }
    }
}

/// A single invariant violation found by [`validate_state`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateViolation {
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    ProbabilityRange,
    Ordering,
    LabelRange,
    TruncationExceeded,
    Concentration,
    Shape,
}

fn violation(kind: ViolationKind, message: String) -> StateViolation {
    StateViolation { kind, message }
}

/// Check every state invariant against the spec and table. Violations are
/// returned as data; an empty list means the state is valid.
pub fn validate_state(
    state: &ChainState,
    spec: &ModelSpec,
    table: &DetectionHistoryTable,
) -> Vec<StateViolation> {
    use ViolationKind::*;
    let mut out = Vec::new();

    if !(0.0..=1.0).contains(&state.structural) {
        out.push(violation(
            ProbabilityRange,
            format!("structural parameter {} outside [0,1]", state.structural),
        ));
    }
    for (k, &pk) in state.p.iter().enumerate() {
        if !(0.0..=1.0).contains(&pk) {
            out.push(violation(ProbabilityRange, format!("p[{k}] = {pk} outside [0,1]")));
        }
    }

    let expected_slots = spec.mode.n_slots();
    if state.p.len() != expected_slots {
        out.push(violation(
            Shape,
            format!("expected {expected_slots} detection slots, found {}", state.p.len()),
        ));
    }

    if spec.mode.uses_labels() {
        if state.labels.len() != table.n_units() {
            out.push(violation(
                Shape,
                format!("expected {} labels, found {}", table.n_units(), state.labels.len()),
            ));
        }
        for (i, &g) in state.labels.iter().enumerate() {
            if g >= state.p.len() {
                out.push(violation(
                    LabelRange,
                    format!("label g[{i}] = {g} does not index a detection slot"),
                ));
            }
        }
    } else if !state.labels.is_empty() {
        out.push(violation(Shape, "labels present in homogeneous mode".into()));
    }

    match spec.mode {
        HeterogeneityMode::FiniteMixture { .. } => {
            if state.p.windows(2).any(|w| w[0] > w[1]) {
                out.push(violation(
                    Ordering,
                    format!("detection probabilities violate ordering: {:?}", state.p),
                ));
            }
        }
        HeterogeneityMode::Nonparametric { truncation } => {
            let distinct = state.labels.iter().collect::<HashSet<_>>().len();
            if distinct > truncation {
                out.push(violation(
                    TruncationExceeded,
                    format!("{distinct} distinct labels exceed truncation M={truncation}"),
                ));
            }
            match state.alpha {
                Some(a) if a > 0.0 => {}
                Some(a) => {
                    out.push(violation(Concentration, format!("alpha = {a} must be positive")))
                }
                None => out.push(violation(Concentration, "alpha missing in NP mode".into())),
            }
        }
        HeterogeneityMode::Homogeneous => {}
    }

    out
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("empty input: no data rows")]
    Empty,
    #[error("row {row}, column {column}: value {value:?} is not 0 or 1")]
    NonBinaryCell { row: usize, column: usize, value: String },
    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}: capture-recapture history has no detection")]
    AllZeroRow { row: usize },
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid spec JSON: {0}")]
    Json(#[from] serde_json::Error),
}
