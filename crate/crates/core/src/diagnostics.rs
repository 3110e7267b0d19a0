//! Posterior summaries, WAIC, and cluster-structure reporting.
//!
//! All computations here are pure functions over immutable draw collections.

use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("no draws to summarize")]
    EmptyDraws,
    #[error("WAIC needs at least 2 draws and 1 unit, got {draws} x {units}")]
    TooFewDraws { draws: usize, units: usize },
    #[error("label draws absent; cluster counts require a nonparametric fit")]
    LabelsAbsent,
    #[error("quantile level {0} outside (0,1)")]
    BadLevel(f64),
    #[error("log-likelihood CSV row {row}: bad cell {value:?}")]
    BadCell { row: usize, value: String },
}

/// Draws × units matrix of per-unit log-likelihoods, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikMatrix {
    n_units: usize,
    values: Vec<f64>,
}

impl LogLikMatrix {
    pub fn new(n_units: usize) -> Self {
        LogLikMatrix { n_units, values: Vec::new() }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_units = rows.first().map_or(0, Vec::len);
        let mut m = LogLikMatrix::new(n_units);
        for row in rows {
            m.push_row(&row);
        }
        m
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.n_units, "log-likelihood row width mismatch");
        self.values.extend_from_slice(row);
    }

    /// Append every row of `other` (same width) to this matrix.
    pub fn extend(&mut self, other: &LogLikMatrix) {
        assert_eq!(other.n_units, self.n_units, "log-likelihood width mismatch");
        self.values.extend_from_slice(&other.values);
    }

    pub fn n_draws(&self) -> usize {
        if self.n_units == 0 {
            0
        } else {
            self.values.len() / self.n_units
        }
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_units..(s + 1) * self.n_units]
    }

    pub fn column(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(i).step_by(self.n_units).copied()
    }

    /// One CSV line per draw, cells in unit order.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for s in 0..self.n_draws() {
            let row = self.row(s);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str) -> Result<Self, DiagnosticsError> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|t| {
                    let t = t.trim();
                    // -inf round-trips through the writer as "-inf".
                    t.parse::<f64>()
                        .map_err(|_| DiagnosticsError::BadCell { row: idx + 1, value: t.into() })
                })
                .collect::<Result<_, _>>()?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(DiagnosticsError::BadCell {
                        row: idx + 1,
                        value: format!("{} cells, expected {}", row.len(), first.len()),
                    });
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(DiagnosticsError::EmptyDraws);
        }
        Ok(LogLikMatrix::from_rows(rows))
    }
}

/// Median and equal-tailed credible interval for one scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub name: String,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub n_draws: usize,
}

/// Linear-interpolation quantile (the type-7 definition: h = (n-1)q) on a
/// sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Posterior median and equal-tailed interval at the given level.
pub fn summarize(name: &str, draws: &[f64], level: f64) -> Result<PosteriorSummary, DiagnosticsError> {
    if draws.is_empty() {
        return Err(DiagnosticsError::EmptyDraws);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(DiagnosticsError::BadLevel(level));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("draws must not contain NaN"));
    let tail = (1.0 - level) / 2.0;
    Ok(PosteriorSummary {
        name: name.to_string(),
        median: quantile_sorted(&sorted, 0.5),
        lower: quantile_sorted(&sorted, tail),
        upper: quantile_sorted(&sorted, 1.0 - tail),
        level,
        n_draws: draws.len(),
    })
}

/// WAIC on the deviance scale: waic = -2 (lppd - p_waic). Lower is better.
#[derive(Debug, Clone, PartialEq)]
pub struct WaicReport {
    pub lppd: f64,
    pub p_waic: f64,
    pub waic: f64,
    /// Units whose likelihood was zero in every draw; they force lppd to
    /// -inf and are reported rather than raised.
    pub degenerate_units: usize,
}

/// Compute WAIC from a draws × units log-likelihood matrix.
///
/// lppd sums log mean likelihood per unit (log-sum-exp stabilized); p_waic
/// sums the per-unit sample variance (n-1 denominator) of log-likelihoods.
pub fn waic(loglik: &LogLikMatrix) -> Result<WaicReport, DiagnosticsError> {
    let s = loglik.n_draws();
    let n = loglik.n_units();
    if s < 2 || n < 1 {
        return Err(DiagnosticsError::TooFewDraws { draws: s, units: n });
    }

    let mut lppd = 0.0f64;
    let mut p_waic = 0.0f64;
    let mut degenerate = 0usize;

    for i in 0..n {
        let col: Vec<f64> = loglik.column(i).collect();
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            degenerate += 1;
            lppd = f64::NEG_INFINITY;
            continue;
        }
        let sum_exp: f64 = col.iter().map(|&v| (v - max).exp()).sum();
        lppd += max + (sum_exp / s as f64).ln();

        let mean = col.iter().sum::<f64>() / s as f64;
        let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (s - 1) as f64;
        p_waic += var;
    }

    Ok(WaicReport { lppd, p_waic, waic: -2.0 * (lppd - p_waic), degenerate_units: degenerate })
}

/// Empirical distribution over a number-of-subgroups count.
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    /// (count, probability), ascending in count, probabilities sum to 1.
    pub pmf: Vec<(usize, f64)>,
    pub n_samples: usize,
}

impl CountDistribution {
    pub fn from_counts(counts: &[usize]) -> Result<Self, DiagnosticsError> {
        if counts.is_empty() {
            return Err(DiagnosticsError::EmptyDraws);
        }
        let mut tally: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in counts {
            *tally.entry(c).or_insert(0) += 1;
        }
        let n = counts.len();
        Ok(CountDistribution {
            pmf: tally.into_iter().map(|(c, k)| (c, k as f64 / n as f64)).collect(),
            n_samples: n,
        })
    }

    pub fn probability(&self, count: usize) -> f64 {
        self.pmf.iter().find(|(c, _)| *c == count).map_or(0.0, |(_, p)| *p)
    }

    pub fn probability_between(&self, lo: usize, hi: usize) -> f64 {
        self.pmf.iter().filter(|(c, _)| (lo..=hi).contains(c)).map(|(_, p)| p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().map(|(c, p)| *c as f64 * p).sum()
    }

    pub fn mode(&self) -> usize {
        self.pmf
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map(|(c, _)| *c)
            .expect("pmf is nonempty")
    }

    /// Quantile of the underlying integer draws (linear interpolation).
    pub fn quantile(&self, q: f64) -> f64 {
        let mut expanded: Vec<f64> = Vec::with_capacity(self.n_samples);
        for (c, p) in &self.pmf {
            let k = (p * self.n_samples as f64).round() as usize;
            expanded.extend(std::iter::repeat(*c as f64).take(k));
        }
        quantile_sorted(&expanded, q)
    }

    /// CSV rows `count,probability` in ascending count order.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("count,probability\n");
        for (c, p) in &self.pmf {
            out.push_str(&format!("{c},{p}\n"));
        }
        out
    }
}

/// Posterior for the number of population subgroups: per-draw distinct-label
/// counts tabulated into a mass function with median and 90% interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCountPosterior {
    pub distribution: CountDistribution,
    pub median: f64,
    pub interval90: (f64, f64),
}

pub fn cluster_count_posterior(
    label_draws: &[Vec<u32>],
) -> Result<ClusterCountPosterior, DiagnosticsError> {
    if label_draws.is_empty() {
        return Err(DiagnosticsError::LabelsAbsent);
    }
    let counts: Vec<usize> = label_draws
        .iter()
        .map(|draw| {
            let mut seen: Vec<u32> = draw.clone();
            seen.sort_unstable();
            seen.dedup();
            seen.len()
        })
        .collect();
    let distribution = CountDistribution::from_counts(&counts)?;
    let median = distribution.quantile(0.5);
    let interval90 = (distribution.quantile(0.05), distribution.quantile(0.95));
    Ok(ClusterCountPosterior { distribution, median, interval90 })
}

/// Simulate the sequential restaurant-process assignment `replications`
/// times and tabulate the final number of clusters.
///
/// Each arriving unit joins an existing cluster with probability
/// proportional to its size, or opens a new one with probability
/// proportional to `alpha`.
pub fn crp_prior_cluster_distribution<R: Rng + ?Sized>(
    alpha: f64,
    n: usize,
    replications: usize,
    rng: &mut R,
) -> CountDistribution {
    assert!(alpha > 0.0, "alpha must be positive");
    assert!(n >= 1 && replications >= 1, "n and replications must be >= 1");
    let mut counts = Vec::with_capacity(replications);
    let mut sizes: Vec<usize> = Vec::new();
    for _ in 0..replications {
        sizes.clear();
        sizes.push(1);
        for i in 1..n {
            let total = i as f64 + alpha;
            let mut u = rng.random::<f64>() * total;
            let mut joined = false;
            for s in sizes.iter_mut() {
                if u < *s as f64 {
                    *s += 1;
                    joined = true;
                    break;
                }
                u -= *s as f64;
            }
            if !joined {
                sizes.push(1);
            }
        }
        counts.push(sizes.len());
    }
    CountDistribution::from_counts(&counts).expect("replications >= 1")
}

/// Expected number of clusters after `n` arrivals: sum_i alpha/(alpha+i-1).
pub fn crp_expected_clusters(alpha: f64, n: usize) -> f64 {
    (0..n).map(|i| alpha / (alpha + i as f64)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn summarize_small_cases() {
        let s = summarize("x", &[0.1, 0.2, 0.3], 0.5).unwrap();
        assert!((s.median - 0.2).abs() < 1e-12);

        let s = summarize("x", &[0.7, 0.7, 0.7, 0.7], 0.95).unwrap();
        assert_eq!((s.lower, s.median, s.upper), (0.7, 0.7, 0.7));

        assert_eq!(summarize("x", &[], 0.95).unwrap_err(), DiagnosticsError::EmptyDraws);
    }

    #[test]
    fn summarize_uniform_draws_hit_tails() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let draws: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>()).collect();
        let s = summarize("u", &draws, 0.95).unwrap();
        assert!((s.lower - 0.025).abs() < 0.01, "lower {}", s.lower);
        assert!((s.upper - 0.975).abs() < 0.01, "upper {}", s.upper);
        assert!((s.median - 0.5).abs() < 0.02);
    }

    #[test]
    fn waic_two_draw_case() {
        // One unit observed with likelihood 0.5 in one draw, 0.25 in the other.
        let m = LogLikMatrix::from_rows(vec![vec![0.5f64.ln()], vec![0.25f64.ln()]]);
        let report = waic(&m).unwrap();
        assert!((report.lppd - (-0.98083)).abs() < 1e-4, "lppd {}", report.lppd);
        assert!((report.p_waic - 0.24023).abs() < 1e-4, "p_waic {}", report.p_waic);
        assert!((report.waic - 2.44212).abs() < 1e-4, "waic {}", report.waic);
        assert!((report.waic - (-2.0 * (report.lppd - report.p_waic))).abs() < 1e-12);
        assert_eq!(report.degenerate_units, 0);
    }

    #[test]
    fn waic_zero_variance() {
        let m = LogLikMatrix::from_rows(vec![vec![-1.0, -2.0], vec![-1.0, -2.0]]);
        let report = waic(&m).unwrap();
        assert_eq!(report.p_waic, 0.0);
        assert!((report.waic - (-2.0 * report.lppd)).abs() < 1e-12);
    }

    #[test]
    fn waic_additive_across_units() {
        let a = LogLikMatrix::from_rows(vec![vec![-1.0], vec![-1.5], vec![-0.7]]);
        let b = LogLikMatrix::from_rows(vec![vec![-2.0], vec![-2.2], vec![-1.9]]);
        let joint = LogLikMatrix::from_rows(vec![
            vec![-1.0, -2.0],
            vec![-1.5, -2.2],
            vec![-0.7, -1.9],
        ]);
        let (ra, rb, rj) = (waic(&a).unwrap(), waic(&b).unwrap(), waic(&joint).unwrap());
        assert!((rj.waic - (ra.waic + rb.waic)).abs() < 1e-10);
        assert!((rj.lppd - (ra.lppd + rb.lppd)).abs() < 1e-10);
        assert!((rj.p_waic - (ra.p_waic + rb.p_waic)).abs() < 1e-10);
    }

    #[test]
    fn waic_invariant_to_draw_and_unit_order() {
        let m = LogLikMatrix::from_rows(vec![
            vec![-1.0, -2.0, -0.5],
            vec![-1.5, -2.2, -0.4],
            vec![-0.7, -1.9, -0.6],
        ]);
        let shuffled_draws = LogLikMatrix::from_rows(vec![
            vec![-0.7, -1.9, -0.6],
            vec![-1.0, -2.0, -0.5],
            vec![-1.5, -2.2, -0.4],
        ]);
        let shuffled_units = LogLikMatrix::from_rows(vec![
            vec![-0.5, -1.0, -2.0],
            vec![-0.4, -1.5, -2.2],
            vec![-0.6, -0.7, -1.9],
        ]);
        let r = waic(&m).unwrap();
        assert!((r.waic - waic(&shuffled_draws).unwrap().waic).abs() < 1e-12);
        assert!((r.waic - waic(&shuffled_units).unwrap().waic).abs() < 1e-12);
    }

    #[test]
    fn waic_duplicate_column_adds_its_contribution() {
        let one = LogLikMatrix::from_rows(vec![vec![-1.0], vec![-1.4]]);
        let dup = LogLikMatrix::from_rows(vec![vec![-1.0, -1.0], vec![-1.4, -1.4]]);
        let r1 = waic(&one).unwrap();
        let r2 = waic(&dup).unwrap();
        assert!((r2.lppd - 2.0 * r1.lppd).abs() < 1e-12);
        assert!((r2.p_waic - 2.0 * r1.p_waic).abs() < 1e-12);
    }

    #[test]
    fn waic_flags_all_zero_likelihood_unit() {
        let m = LogLikMatrix::from_rows(vec![
            vec![f64::NEG_INFINITY, -1.0],
            vec![f64::NEG_INFINITY, -1.2],
        ]);
        let report = waic(&m).unwrap();
        assert_eq!(report.degenerate_units, 1);
        assert_eq!(report.lppd, f64::NEG_INFINITY);
    }

    #[test]
    fn waic_rejects_single_draw() {
        let m = LogLikMatrix::from_rows(vec![vec![-1.0]]);
        assert!(matches!(waic(&m), Err(DiagnosticsError::TooFewDraws { .. })));
    }

    #[test]
    fn cluster_counts_from_label_draws() {
        let draws = vec![vec![1u32, 1, 1], vec![1, 2, 1]];
        let post = cluster_count_posterior(&draws).unwrap();
        assert_eq!(post.distribution.probability(1), 0.5);
        assert_eq!(post.distribution.probability(2), 0.5);

        let constant = vec![vec![3u32, 3, 3]; 10];
        let post = cluster_count_posterior(&constant).unwrap();
        assert_eq!(post.distribution.pmf, vec![(1, 1.0)]);
        assert_eq!(post.median, 1.0);

        assert_eq!(cluster_count_posterior(&[]).unwrap_err(), DiagnosticsError::LabelsAbsent);
    }

    #[test]
    fn crp_prior_single_unit_is_point_mass() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let dist = crp_prior_cluster_distribution(0.5, 1, 1000, &mut rng);
        assert_eq!(dist.pmf, vec![(1, 1.0)]);
    }

    #[test]
    fn crp_prior_small_alpha_concentrates_low() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let dist = crp_prior_cluster_distribution(0.1, 60, 20_000, &mut rng);
        assert_eq!(dist.mode(), 1);
        assert!(dist.probability_between(1, 2) > 0.8);
    }

    #[test]
    fn crp_prior_alpha_one_spreads_two_to_ten() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let dist = crp_prior_cluster_distribution(1.0, 60, 20_000, &mut rng);
        assert!(dist.probability_between(2, 10) > 0.9);
        let expected = crp_expected_clusters(1.0, 60);
        assert!((expected - 4.6799).abs() < 1e-3);
        assert!((dist.mean() - expected).abs() < 0.06, "mean {}", dist.mean());
    }

    #[test]
    fn loglik_matrix_csv_round_trip() {
        let m = LogLikMatrix::from_rows(vec![vec![-1.25, -2.5], vec![-0.125, -3.0]]);
        let text = m.to_csv_string();
        let back = LogLikMatrix::from_csv_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
