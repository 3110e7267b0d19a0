//! `hetmix` command line: simulate detection histories, fit heterogeneity
//! models, run simulation grids, regenerate the cluster-count prior, and
//! recompute WAIC from a saved log-likelihood matrix.

mod svg;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};
use hetmix::data::{
    load_history_csv, DataError, HeterogeneityMode, McmcSettings, ModelFamily, ModelSpec,
};
use hetmix::diagnostics::{waic, CountDistribution, LogLikMatrix};
use hetmix::fit::{fit_models, FitSettings, ModelFitResult, ModelKind};
use hetmix::mcmc::McmcError;
use hetmix::sim::{run_grid, simulate_cr, simulate_occ, ExperimentGrid, GridResults};
use serde_json::json;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "hetmix",
    version,
    about = "Capture-recapture and occupancy models with detection heterogeneity"
)]
struct Cli {
    /// Worker threads for concurrent chains and grid cells
    /// (default: HETMIX_WORKERS or all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a two-subgroup detection-history CSV.
    Simulate(SimulateArgs),
    /// Fit one or more models to a detection-history CSV.
    Fit(FitArgs),
    /// Run a simulation experiment grid over varied detection probabilities.
    Grid(GridArgs),
    /// Tabulate the prior on the number of subgroups induced by the
    /// restaurant-process prior.
    CrpPrior(CrpPriorArgs),
    /// Recompute WAIC from a saved draws-by-units log-likelihood CSV.
    Waic(WaicArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model family: cr or occ.
    #[arg(long)]
    family: String,
    /// Units in the fixed-detection subgroup.
    #[arg(long, default_value_t = 200)]
    n0: usize,
    /// Units in the varied-detection subgroup.
    #[arg(long, default_value_t = 200)]
    n1: usize,
    /// Number of observation occasions.
    #[arg(long = "T", alias = "occasions", default_value_t = 8)]
    t: usize,
    /// True survival probability (capture-recapture).
    #[arg(long)]
    phi: Option<f64>,
    /// True occupancy probability (occupancy).
    #[arg(long)]
    psi: Option<f64>,
    /// Detection probability of the fixed subgroup.
    #[arg(long, default_value_t = 0.8)]
    p0: f64,
    /// Detection probability of the varied subgroup.
    #[arg(long, default_value_t = 0.2)]
    p1: f64,
    /// RNG seed; chosen at random and recorded when omitted.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Detection-history CSV.
    #[arg(long)]
    input: PathBuf,
    /// Model family: cr or occ (overrides --config).
    #[arg(long)]
    family: Option<String>,
    /// Models to fit, e.g. hom,fm2,fm3,np (default hom,fm2,fm3,np).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// JSON model-spec config; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter slots allocated for NP fits (truncation M).
    #[arg(long = "m", alias = "truncation")]
    truncation: Option<usize>,
    /// Retained iterations per chain after burn-in.
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Store NP label vectors and write them to labels_np.csv.
    #[arg(long)]
    labels: bool,
    /// Retained-sweep interval between stored label vectors.
    #[arg(long, default_value_t = 1)]
    label_thin: usize,
    /// Write each model's log-likelihood matrix to `loglik_<model>.csv`.
    #[arg(long)]
    save_loglik: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    /// Model family: cr or occ.
    #[arg(long)]
    family: String,
    /// Use the full experiment sizes (4x units, 10,000 iterations).
    #[arg(long)]
    full_scale: bool,
    /// Varied detection probabilities (default: the family's standard grid).
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Models to fit per grid point (default hom,fm2,fm3,np).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long = "T", alias = "occasions")]
    t: Option<usize>,
    /// True structural parameter used for simulation.
    #[arg(long)]
    truth: Option<f64>,
    /// Fixed-subgroup detection probability.
    #[arg(long)]
    p0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    /// Independent datasets per (p, model) cell.
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long = "m", alias = "truncation")]
    truncation: Option<usize>,
    /// Skip the SVG plot.
    #[arg(long)]
    no_plot: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CrpPriorArgs {
    /// Concentration values, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1")]
    alpha: Vec<f64>,
    /// Number of units.
    #[arg(long, default_value_t = 60)]
    n: usize,
    /// Simulation replications per alpha.
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    no_plot: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct WaicArgs {
    /// Draws-by-units log-likelihood CSV (one draw per line).
    #[arg(long)]
    loglik: PathBuf,
    /// Also write waic.csv under this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Error carrying the process exit code: 1 usage, 2 data/validation,
/// 3 runtime failure.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<DataError> for CliError {
    fn from(err: DataError) -> Self {
        CliError::Data(err.to_string())
    }
}

impl From<McmcError> for CliError {
    fn from(err: McmcError) -> Self {
        match err {
            McmcError::Data(inner) => CliError::Data(inner.to_string()),
        }
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let kind = err.kind();
            let _ = err.print();
            return if matches!(kind, ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion) {
                0
            } else {
                1
            };
        }
    };
    configure_workers(cli.workers);
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Grid(args) => cmd_grid(args),
        Command::CrpPrior(args) => cmd_crp_prior(args),
        Command::Waic(args) => cmd_waic(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.code()
        }
    }
}

fn configure_workers(flag: Option<usize>) {
    let n = flag
        .or_else(|| std::env::var("HETMIX_WORKERS").ok().and_then(|v| v.parse::<usize>().ok()));
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn parse_family(s: &str) -> Result<ModelFamily, CliError> {
    ModelFamily::parse(s)
        .ok_or_else(|| CliError::Usage(format!("unknown family {s:?}; use cr or occ")))
}

fn parse_models(names: &[String]) -> Result<Vec<ModelKind>, CliError> {
    names
        .iter()
        .map(|name| {
            ModelKind::parse(name)
                .ok_or_else(|| CliError::Usage(format!("unknown model {name:?}")))
        })
        .collect()
}

fn default_models() -> Vec<ModelKind> {
    vec![
        ModelKind::Homogeneous,
        ModelKind::FiniteMixture(2),
        ModelKind::FiniteMixture(3),
        ModelKind::Nonparametric,
    ]
}

fn check_probability(name: &str, value: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} {value} is not a probability in [0,1]")))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let family = parse_family(&args.family)?;
    let structural = match family {
        ModelFamily::CaptureRecapture => args
            .phi
            .ok_or_else(|| CliError::Usage("--phi is required for --family cr".into()))?,
        ModelFamily::Occupancy => args
            .psi
            .ok_or_else(|| CliError::Usage("--psi is required for --family occ".into()))?,
    };
    check_probability(family.structural_name(), structural)?;
    check_probability("p0", args.p0)?;
    check_probability("p1", args.p1)?;
    if args.n0 + args.n1 == 0 || args.t == 0 {
        return Err(CliError::Usage("need at least one unit and one occasion".into()));
    }
    let seed = args.seed.unwrap_or_else(rand::random::<u64>);

    let table = match family {
        ModelFamily::CaptureRecapture => {
            simulate_cr(args.n0, args.n1, args.t, structural, args.p0, args.p1, seed)
        }
        ModelFamily::Occupancy => {
            simulate_occ(args.n0, args.n1, args.t, structural, args.p0, args.p1, seed)
        }
    };

    ensure_out_dir(&args.out)?;
    let data_path = args.out.join("data.csv");
    table.write_csv(&data_path).map_err(CliError::from)?;
    let provenance = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": "simulate",
        "family": family.to_string(),
        "n0": args.n0,
        "n1": args.n1,
        "T": args.t,
        family.structural_name(): structural,
        "p0": args.p0,
        "p1": args.p1,
        "seed": seed,
    });
    write_file(
        &args.out.join("provenance.json"),
        &serde_json::to_string_pretty(&provenance).expect("provenance serializes"),
    )?;
    println!(
        "wrote {} ({} units x {} occasions, seed {seed})",
        data_path.display(),
        table.n_units(),
        table.n_occasions()
    );
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    // Config file first; command-line flags override its values.
    let config: Option<ModelSpec> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
            Some(ModelSpec::from_json(&text)?)
        }
        None => None,
    };

    let family = match (&args.family, &config) {
        (Some(name), _) => parse_family(name)?,
        (None, Some(spec)) => spec.family,
        (None, None) => return Err(CliError::Usage("--family (or --config) is required".into())),
    };

    let models: Vec<ModelKind> = match (&args.models, &config) {
        (Some(names), _) => parse_models(names)?,
        (None, Some(spec)) => vec![match spec.mode {
            HeterogeneityMode::Homogeneous => ModelKind::Homogeneous,
            HeterogeneityMode::FiniteMixture { k } => ModelKind::FiniteMixture(k),
            HeterogeneityMode::Nonparametric { .. } => ModelKind::Nonparametric,
        }],
        (None, None) => default_models(),
    };
    if models.is_empty() {
        return Err(CliError::Usage("no models requested".into()));
    }
    if args.labels && args.label_thin == 0 {
        return Err(CliError::Usage("--label-thin must be at least 1".into()));
    }

    let base_mcmc = config.as_ref().map(|c| c.mcmc.clone()).unwrap_or_default();
    let config_truncation = config.as_ref().and_then(|c| match c.mode {
        HeterogeneityMode::Nonparametric { truncation } => Some(truncation),
        _ => None,
    });
    let settings = FitSettings {
        n_chains: args.chains.unwrap_or(3),
        mcmc: McmcSettings {
            iterations: args.iterations.unwrap_or(base_mcmc.iterations),
            burnin: args.burnin.unwrap_or(base_mcmc.burnin),
            thin: args.thin.unwrap_or(base_mcmc.thin),
            label_thin: args.labels.then_some(args.label_thin),
            ..base_mcmc
        },
        alpha_prior: config.as_ref().map(|c| c.alpha_prior).unwrap_or_default(),
        truncation: args.truncation.or(config_truncation).unwrap_or(50),
        seed: args.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0),
    };

    let loaded = load_history_csv(&args.input, family)?;
    if loaded.dropped_final_occasion > 0 {
        eprintln!(
            "note: dropped {} row(s) first detected on the final occasion",
            loaded.dropped_final_occasion
        );
    }
    let table = loaded.table;

    let fits = fit_models(&table, family, &models, &settings)?;

    ensure_out_dir(&args.out)?;
    let mut summary_csv = String::from("model,parameter,median,lo,hi,waic\n");
    for fit in &fits {
        summary_csv.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6}\n",
            fit.model,
            fit.summary.name,
            fit.summary.median,
            fit.summary.lower,
            fit.summary.upper,
            fit.waic.waic,
        ));
    }
    write_file(&args.out.join("summary.csv"), &summary_csv)?;
    print!("{summary_csv}");

    write_reports(&args.out, &fits)?;
    write_np_outputs(&args.out, &fits, args.labels)?;
    if args.save_loglik {
        for fit in &fits {
            let path = args
                .out
                .join(format!("loglik_{}.csv", fit.model.to_string().to_ascii_lowercase()));
            write_file(&path, &fit.run.pooled.loglik.to_csv_string())?;
        }
    }

    let provenance = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": "fit",
        "input": args.input.display().to_string(),
        "family": family.to_string(),
        "models": models.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "chains": settings.n_chains,
        "iterations": settings.mcmc.iterations,
        "burnin": settings.mcmc.burnin,
        "thin": settings.mcmc.thin,
        "label_thin": settings.mcmc.label_thin,
        "truncation": settings.truncation,
        "alpha_prior": [settings.alpha_prior.shape, settings.alpha_prior.rate],
        "seed": settings.seed,
        "dropped_final_occasion": loaded.dropped_final_occasion,
    });
    write_file(
        &args.out.join("provenance.json"),
        &serde_json::to_string_pretty(&provenance).expect("provenance serializes"),
    )?;
    Ok(())
}

fn write_reports(out: &Path, fits: &[ModelFitResult]) -> Result<(), CliError> {
    let reports: Vec<serde_json::Value> = fits
        .iter()
        .map(|fit| {
            json!({
                "model": fit.model.to_string(),
                "chain_seeds": fit.run.chain_seeds,
                "chains": fit.run.chain_reports,
                "waic": {
                    "lppd": fit.waic.lppd,
                    "p_waic": fit.waic.p_waic,
                    "waic": fit.waic.waic,
                    "degenerate_units": fit.waic.degenerate_units,
                },
            })
        })
        .collect();
    write_file(
        &out.join("report.json"),
        &serde_json::to_string_pretty(&reports).expect("report serializes"),
    )
}

fn write_np_outputs(out: &Path, fits: &[ModelFitResult], labels: bool) -> Result<(), CliError> {
    for fit in fits.iter().filter(|f| f.model == ModelKind::Nonparametric) {
        let counts = &fit.run.pooled.n_clusters;
        if !counts.is_empty() {
            let dist =
                CountDistribution::from_counts(counts).expect("NP fit records cluster counts");
            write_file(&out.join("clusters_np.csv"), &dist.to_csv_string())?;
        }
        if labels {
            let mut text = String::new();
            for draw in &fit.run.pooled.labels {
                let line: Vec<String> = draw.iter().map(u32::to_string).collect();
                text.push_str(&line.join(","));
                text.push('\n');
            }
            write_file(&out.join("labels_np.csv"), &text)?;
        }
    }
    Ok(())
}

fn cmd_grid(args: GridArgs) -> Result<(), CliError> {
    let family = parse_family(&args.family)?;
    let mut grid = match family {
        ModelFamily::CaptureRecapture => ExperimentGrid::desk_scale_cr(args.seed),
        ModelFamily::Occupancy => ExperimentGrid::desk_scale_occ(args.seed),
    };
    if args.full_scale {
        grid = grid.at_full_scale();
    }
    if let Some(p) = args.p {
        grid.p_values = p;
    }
    if let Some(names) = &args.models {
        grid.models = parse_models(names)?;
    }
    if let Some(n0) = args.n0 {
        grid.n0 = n0;
    }
    if let Some(n1) = args.n1 {
        grid.n1 = n1;
    }
    if let Some(t) = args.t {
        grid.n_occasions = t;
    }
    if let Some(truth) = args.truth {
        grid.structural_true = truth;
    }
    if let Some(p0) = args.p0 {
        grid.p_fixed = p0;
    }
    if let Some(chains) = args.chains {
        grid.n_chains = chains;
    }
    if let Some(iterations) = args.iterations {
        grid.mcmc.iterations = iterations;
    }
    if let Some(burnin) = args.burnin {
        grid.mcmc.burnin = burnin;
    }
    if let Some(replicates) = args.replicates {
        grid.replicates = replicates;
    }
    if let Some(truncation) = args.truncation {
        grid.truncation = truncation;
    }
    grid.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let results = run_grid(&grid)?;
    ensure_out_dir(&args.out)?;
    write_file(&args.out.join("results.csv"), &results.to_csv_string())?;

    if !args.no_plot {
        write_file(&args.out.join("grid.svg"), &grid_svg(&grid, &results))?;
    }

    let provenance = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": "grid",
        "family": family.to_string(),
        "n0": grid.n0,
        "n1": grid.n1,
        "T": grid.n_occasions,
        "truth": grid.structural_true,
        "p0": grid.p_fixed,
        "p_values": grid.p_values,
        "models": grid.models.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
        "chains": grid.n_chains,
        "iterations": grid.mcmc.iterations,
        "burnin": grid.mcmc.burnin,
        "replicates": grid.replicates,
        "truncation": grid.truncation,
        "seed": grid.seed,
    });
    write_file(
        &args.out.join("provenance.json"),
        &serde_json::to_string_pretty(&provenance).expect("provenance serializes"),
    )?;

    let failures: Vec<&hetmix::sim::GridRow> =
        results.rows.iter().filter(|r| r.error.is_some()).collect();
    for row in &failures {
        eprintln!(
            "cell failure: p={} model={}: {}",
            row.p,
            row.model,
            row.error.as_deref().unwrap_or("unknown")
        );
    }
    if failures.is_empty() {
        println!("grid complete: {} rows -> {}", results.rows.len(), args.out.display());
        Ok(())
    } else {
        Err(CliError::Runtime(format!("{} grid cell(s) failed", failures.len())))
    }
}

fn grid_svg(grid: &ExperimentGrid, results: &GridResults) -> String {
    let mut series = Vec::new();
    for (idx, &model) in grid.models.iter().enumerate() {
        let color = svg::SERIES_COLORS[idx % svg::SERIES_COLORS.len()].to_string();
        let mut median = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for &p in &grid.p_values {
            if let Some(row) = results.find(p, model) {
                if row.error.is_none() {
                    median.push((p, row.median));
                    lo.push((p, row.lo95));
                    hi.push((p, row.hi95));
                }
            }
        }
        series.push(svg::LineSeries { label: model.to_string(), color, median, dashed: vec![lo, hi] });
    }
    let y_label = grid.family.structural_name();
    svg::line_chart(
        &format!("{} simulation: posterior for {y_label} vs detection p", grid.family),
        "p",
        y_label,
        &series,
        Some(grid.structural_true),
    )
}

fn cmd_crp_prior(args: CrpPriorArgs) -> Result<(), CliError> {
    if args.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    if args.alpha.is_empty() || args.alpha.iter().any(|&a| a <= 0.0) {
        return Err(CliError::Usage("--alpha values must be positive".into()));
    }

    let mut csv = String::from("alpha,count,probability\n");
    let mut groups = Vec::new();
    for (idx, &alpha) in args.alpha.iter().enumerate() {
        let mut rng =
            hetmix::seeds::rng_from_seed(hetmix::seeds::derive_seed(args.seed, &[idx as u64]));
        let dist =
            hetmix::diagnostics::crp_prior_cluster_distribution(alpha, args.n, args.reps, &mut rng);
        for (count, prob) in &dist.pmf {
            csv.push_str(&format!("{alpha},{count},{prob}\n"));
        }
        groups.push(svg::BarGroup {
            label: format!("alpha = {alpha}"),
            color: svg::SERIES_COLORS[idx % svg::SERIES_COLORS.len()].to_string(),
            values: dist.pmf.clone(),
        });
    }

    ensure_out_dir(&args.out)?;
    write_file(&args.out.join("crp_prior.csv"), &csv)?;
    if !args.no_plot {
        let chart = svg::bar_chart(
            &format!("Prior number of subgroups (N = {})", args.n),
            "number of subgroups",
            "probability",
            &groups,
        );
        write_file(&args.out.join("crp_prior.svg"), &chart)?;
    }
    let provenance = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": "crp-prior",
        "alpha": args.alpha,
        "n": args.n,
        "reps": args.reps,
        "seed": args.seed,
    });
    write_file(
        &args.out.join("provenance.json"),
        &serde_json::to_string_pretty(&provenance).expect("provenance serializes"),
    )?;
    println!("wrote {}", args.out.join("crp_prior.csv").display());
    Ok(())
}

fn cmd_waic(args: WaicArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.loglik)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.loglik.display())))?;
    let matrix = LogLikMatrix::from_csv_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.loglik.display())))?;
    let report = waic(&matrix).map_err(|e| CliError::Data(e.to_string()))?;
    let csv = format!(
        "lppd,p_waic,waic,degenerate_units\n{},{},{},{}\n",
        report.lppd, report.p_waic, report.waic, report.degenerate_units
    );
    print!("{csv}");
    if let Some(out) = &args.out {
        ensure_out_dir(out)?;
        write_file(&out.join("waic.csv"), &csv)?;
        let provenance = json!({
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "command": "waic",
            "loglik": args.loglik.display().to_string(),
            "draws": matrix.n_draws(),
            "units": matrix.n_units(),
        });
        write_file(
            &out.join("provenance.json"),
            &serde_json::to_string_pretty(&provenance).expect("provenance serializes"),
        )?;
    }
    Ok(())
}
