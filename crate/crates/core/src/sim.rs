//! Data generation and experiment grids for the two simulation studies:
//! two subgroups with detection probabilities `p0` (fixed) and `p` (varied)
//! and a fixed structural parameter, fit by each requested model.

use crate::data::{DataError, DetectionHistoryTable, McmcSettings, ModelFamily};
use crate::fit::{fit_one, FitSettings, ModelKind};
use crate::mcmc::McmcError;
use crate::seeds::{derive_seed, rng_from_seed};
use rand::Rng;
use rayon::prelude::*;
use std::time::Instant;

/// Simulate capture-recapture encounter histories for two subgroups of
/// `n0` and `n1` individuals over `t` occasions.
///
/// Every individual is first captured on occasion 1; survival is an
/// absorbing Bernoulli(phi) chain and detection is Bernoulli(p_group) while
/// alive. Reproducible by seed.
pub fn simulate_cr(
    n0: usize,
    n1: usize,
    t: usize,
    phi: f64,
    p0: f64,
    p1: f64,
    seed: u64,
) -> DetectionHistoryTable {
    assert_probability("phi", phi);
    assert_probability("p0", p0);
    assert_probability("p1", p1);
    assert!(n0 + n1 >= 1 && t >= 1);
    let mut rng = rng_from_seed(seed);
    let n = n0 + n1;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let p = if i < n0 { p0 } else { p1 };
        let mut row = Vec::with_capacity(t);
        row.push(1u8);
        let mut alive = 1.0f64;
        for _ in 1..t {
            alive = if rng.random::<f64>() < phi * alive { 1.0 } else { 0.0 };
            let seen = rng.random::<f64>() < p * alive;
            row.push(u8::from(seen));
        }
        rows.push(row);
    }
    DetectionHistoryTable::capture_recapture(rows)
        .expect("simulated histories start with a detection")
}

/// Simulate occupancy survey histories for two subgroups of `n0` and `n1`
/// sites over `t` occasions: occupancy is Bernoulli(psi) per site and
/// detection Bernoulli(p_group) at occupied sites. Reproducible by seed.
pub fn simulate_occ(
    n0: usize,
    n1: usize,
    t: usize,
    psi: f64,
    p0: f64,
    p1: f64,
    seed: u64,
) -> DetectionHistoryTable {
    assert_probability("psi", psi);
    assert_probability("p0", p0);
    assert_probability("p1", p1);
    assert!(n0 + n1 >= 1 && t >= 1);
    let mut rng = rng_from_seed(seed);
    let n = n0 + n1;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let p = if i < n0 { p0 } else { p1 };
        let occupied = if rng.random::<f64>() < psi { 1.0 } else { 0.0 };
        let row: Vec<u8> =
            (0..t).map(|_| u8::from(rng.random::<f64>() < p * occupied)).collect();
        rows.push(row);
    }
    DetectionHistoryTable::occupancy(rows).expect("simulated matrix is rectangular binary")
}

fn assert_probability(name: &str, value: f64) {
    assert!((0.0..=1.0).contains(&value), "{name} = {value} is not a probability");
}

/// Scenario definition: subgroup sizes, occasions, true parameters, the grid
/// of varied detection probabilities, models to fit, seeds, and MCMC budget.
#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub family: ModelFamily,
    pub n0: usize,
    pub n1: usize,
    pub n_occasions: usize,
    /// True survival (CR) or occupancy (OCC) used for simulation.
    pub structural_true: f64,
    /// Detection probability of the fixed subgroup.
    pub p_fixed: f64,
    /// Grid of detection probabilities for the varied subgroup.
    pub p_values: Vec<f64>,
    pub models: Vec<ModelKind>,
    pub seed: u64,
    pub n_chains: usize,
    pub mcmc: McmcSettings,
    /// Independent datasets per (p, model) cell.
    pub replicates: usize,
    /// Parameter slots for NP fits.
    pub truncation: usize,
}

impl ExperimentGrid {
    fn default_models() -> Vec<ModelKind> {
        vec![
            ModelKind::Homogeneous,
            ModelKind::FiniteMixture(2),
            ModelKind::FiniteMixture(3),
            ModelKind::Nonparametric,
        ]
    }

    fn desk_mcmc() -> McmcSettings {
        McmcSettings { iterations: 5000, burnin: 2000, ..McmcSettings::default() }
    }

    /// Capture-recapture desk-scale scenario: 200 individuals per subgroup,
    /// 8 occasions, survival 0.7, fixed detection 0.8, varied detection
    /// 0.1..=0.8 in steps of 0.1.
    pub fn desk_scale_cr(seed: u64) -> Self {
        ExperimentGrid {
            family: ModelFamily::CaptureRecapture,
            n0: 200,
            n1: 200,
            n_occasions: 8,
            structural_true: 0.7,
            p_fixed: 0.8,
            p_values: (1..=8).map(|i| i as f64 / 10.0).collect(),
            models: Self::default_models(),
            seed,
            n_chains: 3,
            mcmc: Self::desk_mcmc(),
            replicates: 1,
            truncation: 50,
        }
    }

    /// Occupancy desk-scale scenario: 500 sites per subgroup, 6 occasions,
    /// occupancy 0.7, fixed detection 0.8, varied detection 0.1..=0.8 with a
    /// finer resolution (step 1/30) on [0.1, 0.4].
    pub fn desk_scale_occ(seed: u64) -> Self {
        ExperimentGrid {
            family: ModelFamily::Occupancy,
            n0: 500,
            n1: 500,
            n_occasions: 6,
            structural_true: 0.7,
            p_fixed: 0.8,
            p_values: occ_p_grid(),
            models: Self::default_models(),
            seed,
            n_chains: 3,
            mcmc: Self::desk_mcmc(),
            replicates: 1,
            truncation: 50,
        }
    }

    /// Scale subgroup sizes and iteration budget up from the desk-scale
    /// defaults to the full experiment (4x units, 10,000 iterations).
    pub fn at_full_scale(mut self) -> Self {
        self.n0 *= 4;
        self.n1 *= 4;
        self.mcmc.iterations = 10_000;
        self.mcmc.burnin = 2000;
        self
    }

    pub fn validate(&self) -> Result<(), DataError> {
        for &p in self.p_values.iter().chain([&self.structural_true, &self.p_fixed]) {
            if !(0.0..=1.0).contains(&p) {
                return Err(DataError::InvalidSpec(format!("{p} is not a probability")));
            }
        }
        if self.p_values.is_empty() || self.models.is_empty() {
            return Err(DataError::InvalidSpec("grid needs p values and models".into()));
        }
        if self.replicates == 0 || self.n_chains == 0 {
            return Err(DataError::InvalidSpec("replicates and chains must be >= 1".into()));
        }
        if self.n0 + self.n1 == 0 || self.n_occasions == 0 {
            return Err(DataError::InvalidSpec("grid needs units and occasions".into()));
        }
        Ok(())
    }
}

/// Detection grid 0.1..=0.8 step 0.1 with the finer 1/30 sub-grid on
/// [0.1, 0.4] straddling the 3-group over-estimation regime.
pub fn occ_p_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=8).map(|i| i as f64 / 10.0).collect();
    for i in 3..=12 {
        grid.push(i as f64 / 30.0);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    grid
}

/// One row of the results table; `error` marks a failed fit and leaves the
/// numeric fields NaN.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub family: ModelFamily,
    pub p: f64,
    pub model: ModelKind,
    pub replicate: usize,
    pub median: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub waic: f64,
    pub n_warnings: usize,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct GridResults {
    pub rows: Vec<GridRow>,
}

impl GridResults {
    /// CSV with the columns family,p,model,median,lo95,hi95,waic,n_warnings,
    /// seconds. Failed cells render NA numeric fields.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("family,p,model,median,lo95,hi95,waic,n_warnings,seconds\n");
        for row in &self.rows {
            out.push_str(&self.row_csv(row, true));
        }
        out
    }

    /// CSV identical to [`Self::to_csv_string`] minus the wall-clock column;
    /// byte-stable across re-runs with the same seeds.
    pub fn to_csv_string_without_timing(&self) -> String {
        let mut out = String::from("family,p,model,median,lo95,hi95,waic,n_warnings\n");
        for row in &self.rows {
            out.push_str(&self.row_csv(row, false));
        }
        out
    }

    fn row_csv(&self, row: &GridRow, timing: bool) -> String {
        let num = |v: f64| if v.is_nan() { "NA".to_string() } else { format!("{v:.6}") };
        let mut line = format!(
            "{},{},{},{},{},{},{},{}",
            row.family,
            row.p,
            row.model,
            num(row.median),
            num(row.lo95),
            num(row.hi95),
            num(row.waic),
            row.n_warnings,
        );
        if timing {
            line.push_str(&format!(",{:.3}", row.seconds));
        }
        line.push('\n');
        line
    }

    pub fn find(&self, p: f64, model: ModelKind) -> Option<&GridRow> {
        self.rows
            .iter()
            .find(|r| (r.p - p).abs() < 1e-9 && r.model == model)
    }
}

/// Run every (p, model, replicate) cell of the grid.
///
/// Cells are independent jobs executed on the rayon pool; each simulates its
/// own dataset from a seed derived from (grid seed, p index, model index,
/// replicate), so results are bit-identical across re-runs regardless of
/// scheduling. Rows come back in deterministic grid order. Individual fit
/// failures are recorded in their row and the grid continues.
pub fn run_grid(grid: &ExperimentGrid) -> Result<GridResults, McmcError> {
    grid.validate()?;
    let mut cells = Vec::new();
    for p_idx in 0..grid.p_values.len() {
        for model_idx in 0..grid.models.len() {
            for rep in 0..grid.replicates {
                cells.push((p_idx, model_idx, rep));
            }
        }
    }
    let rows: Vec<GridRow> = cells
        .par_iter()
        .map(|&(p_idx, model_idx, rep)| run_cell(grid, p_idx, model_idx, rep))
        .collect();
    Ok(GridResults { rows })
}

fn run_cell(grid: &ExperimentGrid, p_idx: usize, model_idx: usize, rep: usize) -> GridRow {
    let started = Instant::now();
    let p = grid.p_values[p_idx];
    let model = grid.models[model_idx];
    let cell_seed = derive_seed(grid.seed, &[p_idx as u64, model_idx as u64, rep as u64]);
    let data_seed = derive_seed(cell_seed, &[0]);

    let table = match grid.family {
        ModelFamily::CaptureRecapture => simulate_cr(
            grid.n0,
            grid.n1,
            grid.n_occasions,
            grid.structural_true,
            grid.p_fixed,
            p,
            data_seed,
        ),
        ModelFamily::Occupancy => simulate_occ(
            grid.n0,
            grid.n1,
            grid.n_occasions,
            grid.structural_true,
            grid.p_fixed,
            p,
            data_seed,
        ),
    };

    let settings = FitSettings {
        n_chains: grid.n_chains,
        mcmc: grid.mcmc.clone(),
        alpha_prior: Default::default(),
        truncation: grid.truncation,
        seed: derive_seed(cell_seed, &[1]),
    };

    match fit_one(&table, grid.family, model, &settings, 0) {
        Ok(fit) => GridRow {
            family: grid.family,
            p,
            model,
            replicate: rep,
            median: fit.summary.median,
            lo95: fit.summary.lower,
            hi95: fit.summary.upper,
            waic: fit.waic.waic,
            n_warnings: fit.run.total_truncation_warnings(),
            seconds: started.elapsed().as_secs_f64(),
            error: None,
        },
        Err(err) => GridRow {
            family: grid.family,
            p,
            model,
            replicate: rep,
            median: f64::NAN,
            lo95: f64::NAN,
            hi95: f64::NAN,
            waic: f64::NAN,
            n_warnings: 0,
            seconds: started.elapsed().as_secs_f64(),
            error: Some(err.to_string()),
        },
    }
}
