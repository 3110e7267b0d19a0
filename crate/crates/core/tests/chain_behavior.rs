//! Behavioral tests for the chain runner: invariants preserved at every
//! retained sweep, prior recovery in no-information regimes, determinism,
//! and the restaurant-process prior reproduced by the label sweep.

use hetmix::data::{
    ChainState, DetectionHistoryTable, HeterogeneityMode, ModelFamily, ModelSpec, validate_state,
};
use hetmix::diagnostics::{crp_expected_clusters, crp_prior_cluster_distribution};
use hetmix::mcmc::{
    crp_label_update_neal8, run_chain, run_chain_with_observer, run_chains, AuxiliaryCount,
    ClusterCounts, SamplerSchedule,
};
use hetmix::seeds::rng_from_seed;
use hetmix::sim::{simulate_cr, simulate_occ};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashSet;

fn np_cr_spec(n_units: usize, truncation: usize) -> ModelSpec {
    ModelSpec::new(
        ModelFamily::CaptureRecapture,
        HeterogeneityMode::Nonparametric { truncation: truncation.min(n_units) },
    )
}

#[test]
fn schedules_cover_every_block() {
    let table = simulate_occ(5, 5, 3, 0.7, 0.8, 0.3, 0);
    for mode in [
        HeterogeneityMode::Homogeneous,
        HeterogeneityMode::FiniteMixture { k: 2 },
        HeterogeneityMode::Nonparametric { truncation: 5 },
    ] {
        let spec = ModelSpec::new(ModelFamily::Occupancy, mode);
        let schedule = SamplerSchedule::for_spec(&spec);
        assert!(schedule.covers_all_blocks(&spec), "{mode:?}");
        let _ = table.n_units();
    }
}

#[test]
fn identical_seeds_give_bit_identical_draws() {
    let table = simulate_cr(30, 30, 5, 0.7, 0.8, 0.3, 17);
    for mode in [
        HeterogeneityMode::Homogeneous,
        HeterogeneityMode::FiniteMixture { k: 2 },
        HeterogeneityMode::Nonparametric { truncation: 20 },
    ] {
        let mut spec = ModelSpec::new(ModelFamily::CaptureRecapture, mode);
        spec.mcmc.iterations = 300;
        spec.mcmc.burnin = 100;
        spec.mcmc.label_thin = Some(1);
        let a = run_chain(&spec, &table, 4242).unwrap();
        let b = run_chain(&spec, &table, 4242).unwrap();
        assert_eq!(a.draws, b.draws, "{mode:?}");
        let c = run_chain(&spec, &table, 4243).unwrap();
        assert_ne!(a.draws.structural, c.draws.structural, "{mode:?}");
    }
}

#[test]
fn multi_chain_pooling_is_deterministic() {
    let table = simulate_occ(20, 20, 4, 0.6, 0.8, 0.3, 3);
    let mut spec = ModelSpec::new(
        ModelFamily::Occupancy,
        HeterogeneityMode::Nonparametric { truncation: 15 },
    );
    spec.seed = 7;
    spec.mcmc.iterations = 200;
    spec.mcmc.burnin = 50;
    let a = run_chains(&spec, &table, 3).unwrap();
    let b = run_chains(&spec, &table, 3).unwrap();
    assert_eq!(a.pooled, b.pooled);
    assert_eq!(a.chain_seeds, b.chain_seeds);
    assert_eq!(a.pooled.structural.len(), 600);
}

#[test]
fn zero_retained_iterations_give_empty_draws() {
    let table = simulate_cr(10, 10, 4, 0.7, 0.8, 0.3, 5);
    let mut spec = ModelSpec::new(ModelFamily::CaptureRecapture, HeterogeneityMode::Homogeneous);
    spec.mcmc.iterations = 0;
    spec.mcmc.burnin = 25;
    let run = run_chain(&spec, &table, 1).unwrap();
    assert_eq!(run.draws.n_retained(), 0);
    assert_eq!(run.draws.loglik.n_draws(), 0);
}

#[test]
fn every_retained_state_passes_validation() {
    let table = simulate_occ(25, 25, 4, 0.7, 0.8, 0.3, 11);
    for mode in [
        HeterogeneityMode::Homogeneous,
        HeterogeneityMode::FiniteMixture { k: 3 },
        HeterogeneityMode::Nonparametric { truncation: 12 },
    ] {
        let mut spec = ModelSpec::new(ModelFamily::Occupancy, mode);
        spec.mcmc.iterations = 400;
        spec.mcmc.burnin = 100;
        let mut checked = 0usize;
        run_chain_with_observer(&spec, &table, 9, |state| {
            let violations = validate_state(state, &spec, &table);
            assert!(violations.is_empty(), "{mode:?}: {violations:?}");
            checked += 1;
        })
        .unwrap();
        assert_eq!(checked, 400);
    }
}

#[test]
fn fm_detection_probabilities_stay_ordered() {
    let table = simulate_cr(40, 40, 6, 0.7, 0.9, 0.2, 13);
    let mut spec = ModelSpec::new(
        ModelFamily::CaptureRecapture,
        HeterogeneityMode::FiniteMixture { k: 3 },
    );
    spec.mcmc.iterations = 600;
    spec.mcmc.burnin = 200;
    run_chain_with_observer(&spec, &table, 21, |state| {
        assert!(state.p.windows(2).all(|w| w[0] <= w[1]), "unordered: {:?}", state.p);
    })
    .unwrap();
}

#[test]
fn np_active_slots_match_distinct_labels() {
    let table = simulate_occ(30, 30, 4, 0.7, 0.9, 0.2, 19);
    let mut spec = ModelSpec::new(
        ModelFamily::Occupancy,
        HeterogeneityMode::Nonparametric { truncation: 20 },
    );
    spec.mcmc.iterations = 500;
    spec.mcmc.burnin = 100;
    let mut distinct_per_sweep = Vec::new();
    let run = run_chain_with_observer(&spec, &table, 23, |state| {
        distinct_per_sweep.push(state.labels.iter().collect::<HashSet<_>>().len());
    })
    .unwrap();
    assert_eq!(run.draws.n_clusters, distinct_per_sweep);
    assert!(run.draws.n_clusters.iter().all(|&k| (1..=20).contains(&k)));
}

#[test]
fn truncation_pressure_is_reported_with_sweep_indices() {
    // M=2 slots for 12 units under strong heterogeneity: the label sweep
    // regularly wants a third cluster and must warn instead of creating it.
    let table = simulate_cr(6, 6, 6, 0.9, 0.95, 0.1, 29);
    let mut spec = np_cr_spec(12, 2);
    spec.alpha_prior.shape = 4.0; // push toward new clusters
    spec.mcmc.iterations = 300;
    spec.mcmc.burnin = 100;
    let run = run_chain(&spec, &table, 31).unwrap();
    assert!(
        !run.report.truncation_warnings.is_empty(),
        "expected truncation warnings at M=2"
    );
    assert!(run.report.truncation_warnings.iter().all(|&s| s < 400));
}

/// With single-occasion histories the likelihood is constant in the
/// structural parameter, so the chain must sample its Uniform(0,1) prior.
#[test]
fn structural_prior_recovered_without_information() {
    let table = DetectionHistoryTable::capture_recapture(vec![vec![1]; 8]).unwrap();
    let mut spec = ModelSpec::new(ModelFamily::CaptureRecapture, HeterogeneityMode::Homogeneous);
    spec.mcmc.iterations = 40_000;
    spec.mcmc.burnin = 2000;
    let run = run_chain(&spec, &table, 37).unwrap();
    let draws = &run.draws.structural;
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    assert!((mean - 0.5).abs() < 0.02, "prior mean {mean}");
    for q in [0.25, 0.75] {
        let below = draws.iter().filter(|&&x| x < q).count() as f64 / draws.len() as f64;
        assert!((below - q).abs() < 0.03, "P(X<{q}) = {below}");
    }
}

#[test]
fn adaptation_steers_acceptance_toward_target() {
    let table = simulate_occ(100, 100, 5, 0.7, 0.8, 0.4, 41);
    let mut spec = ModelSpec::new(ModelFamily::Occupancy, HeterogeneityMode::Homogeneous);
    // Start from a hopeless proposal scale; adaptation has to rescue it.
    spec.mcmc.initial_scale = 5.0;
    spec.mcmc.iterations = 4000;
    spec.mcmc.burnin = 4000;
    let run = run_chain(&spec, &table, 43).unwrap();
    for block in &run.report.acceptance {
        assert!(
            (block.rate - 0.44).abs() < 0.15,
            "block {} acceptance {} far from target",
            block.block,
            block.rate
        );
    }
}

/// When every site has at least one detection the unoccupied branch is dead
/// and the occupancy posterior keeps away from zero.
#[test]
fn psi_posterior_excludes_zero_when_all_sites_detected() {
    let rows: Vec<Vec<u8>> = (0..30).map(|i| vec![1, (i % 2) as u8, 1]).collect();
    let table = DetectionHistoryTable::occupancy(rows).unwrap();
    let mut spec = ModelSpec::new(ModelFamily::Occupancy, HeterogeneityMode::Homogeneous);
    spec.mcmc.iterations = 3000;
    spec.mcmc.burnin = 1000;
    let run = run_chain(&spec, &table, 59).unwrap();
    let min = run.draws.structural.iter().copied().fold(f64::INFINITY, f64::min);
    let median = hetmix::diagnostics::summarize("psi", &run.draws.structural, 0.95)
        .unwrap()
        .median;
    assert!(min > 0.1, "psi visited {min} despite detections at every site");
    assert!(median > 0.5, "psi median {median} too low for fully detected data");
}

/// Homogeneous data simulated at phi=0.7 must be recovered: the 95% interval
/// covers the truth.
#[test]
fn hom_interval_covers_truth_on_homogeneous_data() {
    let table = simulate_cr(800, 800, 8, 0.7, 0.8, 0.8, 47);
    let mut spec = ModelSpec::new(ModelFamily::CaptureRecapture, HeterogeneityMode::Homogeneous);
    spec.mcmc.iterations = 2000;
    spec.mcmc.burnin = 1000;
    let run = run_chain(&spec, &table, 53).unwrap();
    let summary = hetmix::diagnostics::summarize("phi", &run.draws.structural, 0.95).unwrap();
    assert!(
        summary.lower <= 0.7 && 0.7 <= summary.upper,
        "interval ({}, {}) misses 0.7",
        summary.lower,
        summary.upper
    );
    assert!((summary.median - 0.7).abs() < 0.05, "median {}", summary.median);
}

/// Cluster counts from prior-only label sweeps (constant likelihood via
/// single-occasion histories, alpha held fixed) must match direct sequential
/// simulation of the arrival process.
fn prior_only_sweep_counts(alpha: f64, n: usize, kept: usize, thin: usize, seed: u64) -> Vec<usize> {
    let table = DetectionHistoryTable::capture_recapture(vec![vec![1]; n]).unwrap();
    let spec = np_cr_spec(n, n);
    let mut rng = rng_from_seed(seed);
    let mut state = ChainState {
        structural: 0.5,
        p: vec![0.5; n],
        labels: vec![0; n],
        alpha: Some(alpha),
    };
    let mut counts = ClusterCounts::from_labels(&state.labels, n);
    let aux = AuxiliaryCount::new(1).unwrap();
    let burnin = 500;
    let mut out = Vec::with_capacity(kept);
    let mut sweep = 0usize;
    while out.len() < kept {
        for i in 0..n {
            crp_label_update_neal8(i, &mut state, &mut counts, &spec, &table, aux, &mut rng);
        }
        if sweep >= burnin && (sweep - burnin) % thin == 0 {
            out.push(counts.n_active());
        }
        sweep += 1;
    }
    out
}

fn two_sample_chi_square_pvalue(a: &[usize], b: &[usize]) -> f64 {
    use std::collections::BTreeMap;
    let mut tally: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for &x in a {
        tally.entry(x).or_insert((0.0, 0.0)).0 += 1.0;
    }
    for &x in b {
        tally.entry(x).or_insert((0.0, 0.0)).1 += 1.0;
    }
    // Merge adjacent count bins until each holds at least 10 observations.
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (_, (o1, o2)) in tally {
        acc.0 += o1;
        acc.1 += o2;
        if acc.0 + acc.1 >= 10.0 {
            bins.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 + acc.1 > 0.0 {
        if let Some(last) = bins.last_mut() {
            last.0 += acc.0;
            last.1 += acc.1;
        } else {
            bins.push(acc);
        }
    }
    assert!(bins.len() >= 2, "need at least two bins");
    let n1: f64 = bins.iter().map(|b| b.0).sum();
    let n2: f64 = bins.iter().map(|b| b.1).sum();
    let mut chi2 = 0.0;
    for (o1, o2) in &bins {
        let total = o1 + o2;
        let e1 = total * n1 / (n1 + n2);
        let e2 = total * n2 / (n1 + n2);
        chi2 += (o1 - e1) * (o1 - e1) / e1 + (o2 - e2) * (o2 - e2) / e2;
    }
    let df = (bins.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(chi2)
}

#[test]
fn prior_only_label_sweep_reproduces_sequential_crp() {
    for (idx, alpha) in [0.1, 0.5, 1.0].into_iter().enumerate() {
        let sweep_counts = prior_only_sweep_counts(alpha, 60, 6000, 5, 61 + idx as u64);
        let mut rng = rng_from_seed(97 + idx as u64);
        let direct = crp_prior_cluster_distribution(alpha, 60, 6000, &mut rng);
        let direct_counts: Vec<usize> = {
            // expand the pmf back into draws for the two-sample test
            let mut v = Vec::with_capacity(6000);
            for (count, prob) in &direct.pmf {
                let k = (prob * direct.n_samples as f64).round() as usize;
                v.extend(std::iter::repeat(*count).take(k));
            }
            v
        };
        let p = two_sample_chi_square_pvalue(&sweep_counts, &direct_counts);
        assert!(p > 0.01, "alpha={alpha}: chi-square p-value {p}");
    }
}

#[test]
fn prior_only_mean_cluster_count_matches_analytic_sum() {
    let counts = prior_only_sweep_counts(1.0, 60, 8000, 5, 71);
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let expected = crp_expected_clusters(1.0, 60);
    let sd = {
        let var = counts
            .iter()
            .map(|&c| (c as f64 - mean) * (c as f64 - mean))
            .sum::<f64>()
            / (counts.len() - 1) as f64;
        var.sqrt()
    };
    let se = sd / (counts.len() as f64).sqrt();
    assert!(
        (mean - expected).abs() < 3.0 * se.max(0.02),
        "mean {mean} vs analytic {expected} (se {se})"
    );
}
