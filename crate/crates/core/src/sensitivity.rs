//! Variance-based global sensitivity analysis of the epidemic front
//! position: Sobol A/B/AB designs, the Saltelli first-order estimator,
//! the Jansen total-order estimator, and bootstrap confidence intervals.
//!
//! The quantity of interest is the peak location of the infected field at
//! a fixed day, driven by four factors (ooze-vector diffusivity, visit
//! rate, cluster size, epiphytic growth rate) with the remaining
//! parameters held fixed.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::seeding::stream_rng;
use crate::sobol_seq::SobolSequence;
use crate::solver::{integrate, standard_initial_condition, Grid, Method};
use crate::wave::peak_location;

/// RNG stream tags (shared master seed, disjoint streams).
const DESIGN_STREAM: u64 = 2;
const BOOTSTRAP_STREAM: u64 = 3;

/// Bootstrap replicates for the index confidence intervals.
const BOOTSTRAP_REPLICATES: usize = 1000;

/// How the `[0,1]^2k` design sample is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    /// Digital base-2 low-discrepancy sequence of dimension 2k, split
    /// into the A and B halves. Deterministic; the seed is unused.
    #[default]
    LowDiscrepancy,
    /// Seeded uniform pseudo-random fill.
    PseudoRandom,
}

impl Sampler {
    pub fn name(&self) -> &'static str {
        match self {
            Sampler::LowDiscrepancy => "low_discrepancy",
            Sampler::PseudoRandom => "pseudo_random",
        }
    }
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low_discrepancy" => Ok(Sampler::LowDiscrepancy),
            "pseudo_random" => Ok(Sampler::PseudoRandom),
            other => Err(Error::Config(format!(
                "unknown sampler `{other}` (expected `low_discrepancy` or `pseudo_random`)"
            ))),
        }
    }
}

/// A/B/AB^(i) design on the unit hypercube; `total_runs = n_base*(k+2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolDesign {
    pub n_base: usize,
    pub k: usize,
    pub matrix_a: Vec<Vec<f64>>,
    pub matrix_b: Vec<Vec<f64>>,
    /// `ab_matrices[i]` equals `matrix_a` with column `i` taken from
    /// `matrix_b`.
    pub ab_matrices: Vec<Vec<Vec<f64>>>,
}

impl SobolDesign {
    pub fn total_runs(&self) -> usize {
        self.n_base * (self.k + 2)
    }
}

/// Builds the Saltelli design: `n_base` rows of A and B plus the k
/// column-swapped AB matrices.
pub fn sobol_design(n_base: usize, k: usize, sampler: Sampler, seed: u64) -> Result<SobolDesign> {
    if n_base < 2 {
        return Err(Error::Config(format!("n_base = {n_base} must be at least 2")));
    }
    if k < 1 {
        return Err(Error::Config("factor count k must be at least 1".into()));
    }
    let (matrix_a, matrix_b) = match sampler {
        Sampler::LowDiscrepancy => {
            let mut seq = SobolSequence::new(2 * k)?;
            let mut a = Vec::with_capacity(n_base);
            let mut b = Vec::with_capacity(n_base);
            for _ in 0..n_base {
                let p = seq.next_point();
                a.push(p[..k].to_vec());
                b.push(p[k..].to_vec());
            }
            (a, b)
        }
        Sampler::PseudoRandom => {
            let mut rng = stream_rng(seed, DESIGN_STREAM, 0);
            let mut fill = |rows: usize| -> Vec<Vec<f64>> {
                (0..rows)
                    .map(|_| (0..k).map(|_| rng.random::<f64>()).collect())
                    .collect()
            };
            let a = fill(n_base);
            let b = fill(n_base);
            (a, b)
        }
    };
    let ab_matrices = (0..k)
        .map(|i| {
            matrix_a
                .iter()
                .zip(&matrix_b)
                .map(|(ra, rb)| {
                    let mut row = ra.clone();
                    row[i] = rb[i];
                    row
                })
                .collect()
        })
        .collect();
    Ok(SobolDesign { n_base, k, matrix_a, matrix_b, ab_matrices })
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

fn check_lengths(name: &str, lens: &[usize]) -> Result<()> {
    if lens.windows(2).any(|w| w[0] != w[1]) || lens[0] < 2 {
        return Err(Error::Domain(format!(
            "{name} needs equal-length arrays of at least 2 entries, got {lens:?}"
        )));
    }
    Ok(())
}

/// Saltelli first-order index `S_i = mean(y_b * (y_ab_i - y_a)) / V`,
/// with `V` the population variance of the pooled `(y_a, y_b)` sample.
/// Returns `None` when the pooled sample is constant.
pub fn first_order_saltelli(y_a: &[f64], y_b: &[f64], y_ab_i: &[f64]) -> Result<Option<f64>> {
    check_lengths("first_order_saltelli", &[y_a.len(), y_b.len(), y_ab_i.len()])?;
    let pooled: Vec<f64> = y_a.iter().chain(y_b).copied().collect();
    if all_equal(&pooled) {
        return Ok(None);
    }
    let v = population_variance(&pooled);
    let n = y_a.len() as f64;
    let num = y_a
        .iter()
        .zip(y_b)
        .zip(y_ab_i)
        .map(|((&a, &b), &ab)| b * (ab - a))
        .sum::<f64>()
        / n;
    Ok(Some(num / v))
}

/// Jansen total-order index `T_i = mean((y_a - y_ab_i)^2) / (2V)`, with
/// `V` the population variance of the baseline sample `y_a`. Returns
/// `None` when `y_a` is constant.
pub fn total_order_jansen(y_a: &[f64], y_ab_i: &[f64]) -> Result<Option<f64>> {
    check_lengths("total_order_jansen", &[y_a.len(), y_ab_i.len()])?;
    if all_equal(y_a) {
        return Ok(None);
    }
    let v = population_variance(y_a);
    let n = y_a.len() as f64;
    let num = y_a
        .iter()
        .zip(y_ab_i)
        .map(|(&a, &ab)| (a - ab) * (a - ab))
        .sum::<f64>()
        / n;
    Ok(Some(num / (2.0 * v)))
}

/// Uniform sampling intervals of the four factors, in design-column
/// order: `d2, mu, n, r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorRanges {
    pub d2: (f64, f64),
    pub mu: (f64, f64),
    pub n: (f64, f64),
    pub r: (f64, f64),
}

impl Default for FactorRanges {
    fn default() -> Self {
        Self {
            d2: (0.0, 50.0),
            mu: (0.05, 1.0),
            n: (1.0, 5.0),
            r: (0.05, 1.0),
        }
    }
}

impl FactorRanges {
    pub const NAMES: [&'static str; 4] = ["d2", "mu", "n", "r"];

    fn entries(&self) -> [(f64, f64); 4] {
        [self.d2, self.mu, self.n, self.r]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in Self::NAMES.iter().zip(self.entries()) {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::Config(format!(
                    "factor range {name} must be a finite interval, got [{lo}, {hi}]"
                )));
            }
        }
        if self.d2.0 < 0.0 {
            return Err(Error::Config("factor d2 cannot be negative".into()));
        }
        for (name, lo) in [("mu", self.mu.0), ("n", self.n.0), ("r", self.r.0)] {
            if lo <= 0.0 {
                return Err(Error::Config(format!(
                    "factor {name} must stay strictly positive, range starts at {lo}"
                )));
            }
        }
        Ok(())
    }

    /// Maps a unit-cube design row to parameter values.
    fn scale_row(&self, row: &[f64]) -> [f64; 4] {
        let e = self.entries();
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = e[i].0 + row[i] * (e[i].1 - e[i].0);
        }
        out
    }
}

/// Simulation settings for the sensitivity quantity of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityConfig {
    /// Fixed (non-factor) parameters; the factor slots are overwritten
    /// for every design row.
    pub fixed: ModelParams,
    pub grid_length: f64,
    pub n_cells: usize,
    pub dt: f64,
    /// Day at which the infected-peak location is measured.
    pub t_quantify: f64,
    pub b_seed: f64,
    pub method: Method,
    pub sampler: Sampler,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            fixed: ModelParams::baseline(),
            grid_length: 1000.0,
            n_cells: 10_000,
            dt: 0.1,
            t_quantify: 7.0,
            b_seed: 1e6,
            method: Method::AdamsPc,
            sampler: Sampler::LowDiscrepancy,
        }
    }
}

/// Quantity-of-interest evaluation result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QoiOutcome {
    /// Peak location of the infected field at the quantification day (m).
    pub location: f64,
    /// Set when no infection reached the grid: the peak was flat and the
    /// location defaults to the center of cell 0.
    pub degenerate: bool,
}

/// Integrates from the point-seeded initial condition and returns the
/// infected-peak location at day `t_q`.
pub fn qoi_peak_at_day(
    params: &ModelParams,
    config: &SensitivityConfig,
    t_q: f64,
) -> Result<QoiOutcome> {
    if !t_q.is_finite() || t_q <= 0.0 {
        return Err(Error::Domain(format!("t_q = {t_q} must be finite and positive")));
    }
    let grid = Grid::new(config.grid_length, config.n_cells)?;
    let initial = standard_initial_condition(&grid, params, config.b_seed)?;
    let traj = integrate(&initial, params, &grid, t_q, config.dt, config.method, t_q)?;
    let snap = traj.snapshot_nearest(t_q)?;
    let peak = peak_location(&snap.i, &grid)?;
    Ok(QoiOutcome { location: peak.location, degenerate: peak.degenerate })
}

/// One estimated index with bootstrap uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexEstimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolResult {
    /// Factor names in design-column order.
    pub factor_names: [&'static str; 4],
    /// First-order indices; empty when the QoI was constant.
    pub first_order: Vec<IndexEstimate>,
    /// Total-order indices; empty when the QoI was constant.
    pub total_order: Vec<IndexEstimate>,
    /// Pooled QoI variance.
    pub variance: f64,
    pub n_base: usize,
    pub k: usize,
    pub seed: u64,
    pub total_runs: usize,
    /// Constant QoI: the variance decomposition is undefined.
    pub degenerate: bool,
    /// Runs in which no infection reached the grid (QoI defaulted to the
    /// first cell with a warning rather than failing the experiment).
    pub n_degenerate_qoi: usize,
}

/// Runs the full variance-based sensitivity experiment: builds the
/// design, evaluates the QoI for all `n_base*(k+2)` rows in parallel,
/// and applies both estimators with bootstrap confidence intervals.
/// Any failed model evaluation aborts the run (indices computed on
/// partial data would be biased).
pub fn run_sensitivity(
    factors: &FactorRanges,
    n_base: usize,
    seed: u64,
    config: &SensitivityConfig,
) -> Result<SobolResult> {
    factors.validate()?;
    config.fixed.validate()?;
    let design = sobol_design(n_base, 4, config.sampler, seed)?;

    let apply = |row: &[f64]| -> ModelParams {
        let [d2, mu, n, r] = factors.scale_row(row);
        ModelParams { d2, mu, n, r, ..config.fixed }
    };
    let evaluate = |tag: &'static str, rows: &[Vec<f64>]| -> Result<(Vec<f64>, usize)> {
        let outcomes: Vec<QoiOutcome> = rows
            .par_iter()
            .enumerate()
            .map(|(row, u)| {
                qoi_peak_at_day(&apply(u), config, config.t_quantify).map_err(|e| {
                    Error::FailedEvaluation {
                        matrix: tag.to_string(),
                        row,
                        reason: e.to_string(),
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let degenerate = outcomes.iter().filter(|o| o.degenerate).count();
        Ok((outcomes.into_iter().map(|o| o.location).collect(), degenerate))
    };

    let (y_a, deg_a) = evaluate("A", &design.matrix_a)?;
    let (y_b, deg_b) = evaluate("B", &design.matrix_b)?;
    let mut y_ab = Vec::with_capacity(4);
    let mut n_degenerate_qoi = deg_a + deg_b;
    for (i, rows) in design.ab_matrices.iter().enumerate() {
        let tag: &'static str = FactorRanges::NAMES[i];
        let (y, deg) = evaluate(tag, rows)?;
        y_ab.push(y);
        n_degenerate_qoi += deg;
    }

    let pooled: Vec<f64> = y_a.iter().chain(&y_b).copied().collect();
    let variance = population_variance(&pooled);
    let mut result = SobolResult {
        factor_names: FactorRanges::NAMES,
        first_order: Vec::new(),
        total_order: Vec::new(),
        variance,
        n_base,
        k: 4,
        seed,
        total_runs: design.total_runs(),
        degenerate: false,
        n_degenerate_qoi,
    };

    let mut point_first = Vec::with_capacity(4);
    let mut point_total = Vec::with_capacity(4);
    for y_ab_i in &y_ab {
        match (
            first_order_saltelli(&y_a, &y_b, y_ab_i)?,
            total_order_jansen(&y_a, y_ab_i)?,
        ) {
            (Some(s), Some(t)) => {
                point_first.push(s);
                point_total.push(t);
            }
            _ => {
                result.degenerate = true;
                return Ok(result);
            }
        }
    }

    // Bootstrap over design rows: the same resampled row set is applied
    // to A, B and every AB matrix, preserving the pairing.
    let mut rng = stream_rng(seed, BOOTSTRAP_STREAM, 0);
    let mut reps_first: Vec<Vec<f64>> =
        (0..4).map(|_| Vec::with_capacity(BOOTSTRAP_REPLICATES)).collect();
    let mut reps_total: Vec<Vec<f64>> =
        (0..4).map(|_| Vec::with_capacity(BOOTSTRAP_REPLICATES)).collect();
    let mut ra = vec![0.0; n_base];
    let mut rb = vec![0.0; n_base];
    let mut rab = vec![0.0; n_base];
    for _ in 0..BOOTSTRAP_REPLICATES {
        let rows: Vec<usize> = (0..n_base).map(|_| rng.random_range(0..n_base)).collect();
        for (dst, src) in [(&mut ra, &y_a), (&mut rb, &y_b)] {
            for (d, &row) in dst.iter_mut().zip(&rows) {
                *d = src[row];
            }
        }
        for (i, y_ab_i) in y_ab.iter().enumerate() {
            for (d, &row) in rab.iter_mut().zip(&rows) {
                *d = y_ab_i[row];
            }
            if let Some(s) = first_order_saltelli(&ra, &rb, &rab)? {
                reps_first[i].push(s);
            }
            if let Some(t) = total_order_jansen(&ra, &rab)? {
                reps_total[i].push(t);
            }
        }
    }

    for i in 0..4 {
        result
            .first_order
            .push(estimate_with_uncertainty(point_first[i], &reps_first[i]));
        result
            .total_order
            .push(estimate_with_uncertainty(point_total[i], &reps_total[i]));
    }
    Ok(result)
}

/// Percentile CI and standard error from bootstrap replicates.
fn estimate_with_uncertainty(value: f64, replicates: &[f64]) -> IndexEstimate {
    if replicates.len() < 2 {
        return IndexEstimate { value, ci_low: value, ci_high: value, std_err: 0.0 };
    }
    let mut sorted = replicates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite replicates"));
    let pick = |q: f64| sorted[(q * (sorted.len() - 1) as f64).round() as usize];
    let m = mean(&sorted);
    let var = sorted.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (sorted.len() - 1) as f64;
    IndexEstimate {
        value,
        ci_low: pick(0.025),
        ci_high: pick(0.975),
        std_err: var.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn design_sizes_follow_the_k_plus_two_rule() {
        let d = sobol_design(300, 4, Sampler::LowDiscrepancy, 0).unwrap();
        assert_eq!(d.total_runs(), 1800);
        let tiny = sobol_design(2, 1, Sampler::PseudoRandom, 9).unwrap();
        assert_eq!(tiny.total_runs(), 6);
    }

    #[test]
    fn ab_matrix_swaps_exactly_one_column() {
        let d = sobol_design(16, 4, Sampler::PseudoRandom, 5).unwrap();
        let ab2 = &d.ab_matrices[2];
        for (row, ab_row) in ab2.iter().enumerate() {
            for (col, &v) in ab_row.iter().enumerate() {
                if col == 2 {
                    assert_eq!(v, d.matrix_b[row][col]);
                } else {
                    assert_eq!(v, d.matrix_a[row][col]);
                }
            }
        }
    }

    #[test]
    fn design_entries_in_unit_cube_and_deterministic() {
        for sampler in [Sampler::LowDiscrepancy, Sampler::PseudoRandom] {
            let d1 = sobol_design(64, 3, sampler, 77).unwrap();
            let d2 = sobol_design(64, 3, sampler, 77).unwrap();
            assert_eq!(d1, d2);
            for row in d1.matrix_a.iter().chain(&d1.matrix_b) {
                assert!(row.iter().all(|&v| (0.0..1.0).contains(&v)));
            }
        }
    }

    /// Single-factor function: Y = X1 with a dummy second factor.
    fn single_factor_ys(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let d = sobol_design(n, 2, Sampler::PseudoRandom, seed).unwrap();
        let f = |row: &[f64]| row[0];
        let y_a: Vec<f64> = d.matrix_a.iter().map(|r| f(r)).collect();
        let y_b: Vec<f64> = d.matrix_b.iter().map(|r| f(r)).collect();
        let y_ab = d
            .ab_matrices
            .iter()
            .map(|m| m.iter().map(|r| f(r)).collect())
            .collect();
        (y_a, y_b, y_ab)
    }

    #[test]
    fn single_factor_indices_converge() {
        // Additive (here: single-factor) function: first-order indices sum
        // to one and the total order approaches the first order.
        let (y_a, y_b, y_ab) = single_factor_ys(4096, 11);
        let s1 = first_order_saltelli(&y_a, &y_b, &y_ab[0]).unwrap().unwrap();
        let s2 = first_order_saltelli(&y_a, &y_b, &y_ab[1]).unwrap().unwrap();
        let t1 = total_order_jansen(&y_a, &y_ab[0]).unwrap().unwrap();
        let t2 = total_order_jansen(&y_a, &y_ab[1]).unwrap().unwrap();
        assert_relative_eq!(s1, 1.0, max_relative = 0.05);
        assert!(s2.abs() < 0.05);
        assert!(t2.abs() < 0.05);
        assert!((t1 - s1).abs() < 0.05, "total should approach first order: {t1} vs {s1}");
        assert!((s1 + s2 - 1.0).abs() < 0.05);
    }

    #[test]
    fn constant_output_is_degenerate() {
        let y = vec![3.0; 8];
        assert_eq!(first_order_saltelli(&y, &y, &y).unwrap(), None);
        assert_eq!(total_order_jansen(&y, &y).unwrap(), None);
    }

    #[test]
    fn identical_ab_means_zero_total_order() {
        let y_a: Vec<f64> = (0..32).map(|i| (i as f64 * 0.7).sin()).collect();
        let t = total_order_jansen(&y_a, &y_a).unwrap().unwrap();
        assert_eq!(t, 0.0);
    }

    #[test]
    fn estimators_reject_mismatched_lengths() {
        assert!(first_order_saltelli(&[1.0, 2.0], &[1.0], &[1.0, 2.0]).is_err());
        assert!(total_order_jansen(&[1.0], &[1.0]).is_err());
    }

    fn ishigami(x: &[f64], a: f64, b: f64) -> f64 {
        x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()
    }

    /// Analytic Ishigami indices, computed from the closed-form variance
    /// decomposition.
    fn ishigami_analytic(a: f64, b: f64) -> ([f64; 3], [f64; 3]) {
        let pi4 = PI.powi(4);
        let pi8 = PI.powi(8);
        let v = a * a / 8.0 + b * pi4 / 5.0 + b * b * pi8 / 18.0 + 0.5;
        let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
        let v2 = a * a / 8.0;
        let vt3 = 8.0 * b * b * pi8 / 225.0;
        let vt1 = v1 + vt3;
        (
            [v1 / v, v2 / v, 0.0],
            [vt1 / v, v2 / v, vt3 / v],
        )
    }

    fn ishigami_ys(
        n: usize,
        sampler: Sampler,
        seed: u64,
    ) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let d = sobol_design(n, 3, sampler, seed).unwrap();
        let scale = |row: &[f64]| -> Vec<f64> {
            row.iter().map(|u| -PI + 2.0 * PI * u).collect()
        };
        let f = |row: &[f64]| ishigami(&scale(row), 7.0, 0.1);
        (
            d.matrix_a.iter().map(|r| f(r)).collect(),
            d.matrix_b.iter().map(|r| f(r)).collect(),
            d.ab_matrices
                .iter()
                .map(|m| m.iter().map(|r| f(r)).collect())
                .collect(),
        )
    }

    #[test]
    fn ishigami_reference_values_match_known_constants() {
        let (s, t) = ishigami_analytic(7.0, 0.1);
        assert_relative_eq!(s[0], 0.3139, max_relative = 1e-3);
        assert_relative_eq!(s[1], 0.4424, max_relative = 1e-3);
        assert_eq!(s[2], 0.0);
        assert_relative_eq!(t[2], 0.2437, max_relative = 1e-3);
    }

    #[test]
    fn ishigami_estimates_near_analytic_at_moderate_n() {
        let (y_a, y_b, y_ab) = ishigami_ys(1024, Sampler::LowDiscrepancy, 0);
        let (s_exact, t_exact) = ishigami_analytic(7.0, 0.1);
        for i in 0..3 {
            let s = first_order_saltelli(&y_a, &y_b, &y_ab[i]).unwrap().unwrap();
            let t = total_order_jansen(&y_a, &y_ab[i]).unwrap().unwrap();
            assert!((s - s_exact[i]).abs() < 0.05, "S{i}: {s} vs {}", s_exact[i]);
            assert!((t - t_exact[i]).abs() < 0.05, "T{i}: {t} vs {}", t_exact[i]);
        }
    }

    #[test]
    fn ishigami_error_shrinks_as_n_doubles() {
        // Median absolute error over 5 seeds, pseudo-random sampler.
        // Each size uses a prefix of the same seed's largest design, so
        // the comparison is paired rather than swamped by sampling noise.
        let (s_exact, t_exact) = ishigami_analytic(7.0, 0.1);
        let sizes = [256usize, 1024, 4096];
        let mut errs_s = vec![Vec::new(); sizes.len()];
        let mut errs_t = vec![Vec::new(); sizes.len()];
        for seed in 0..5 {
            let (y_a, y_b, y_ab) = ishigami_ys(4096, Sampler::PseudoRandom, seed);
            for (si, &n) in sizes.iter().enumerate() {
                let s = first_order_saltelli(&y_a[..n], &y_b[..n], &y_ab[0][..n])
                    .unwrap()
                    .unwrap();
                let t = total_order_jansen(&y_a[..n], &y_ab[2][..n]).unwrap().unwrap();
                errs_s[si].push((s - s_exact[0]).abs());
                errs_t[si].push((t - t_exact[2]).abs());
            }
        }
        let median = |v: &mut Vec<f64>| -> f64 {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[2]
        };
        for errs in [&mut errs_s, &mut errs_t] {
            let m: Vec<f64> = errs.iter_mut().map(median).collect();
            assert!(
                m[1] < m[0] && m[2] < m[1],
                "median errors should shrink with n: {m:?}"
            );
        }
    }

    fn fast_config() -> SensitivityConfig {
        SensitivityConfig {
            n_cells: 200,
            t_quantify: 2.0,
            ..SensitivityConfig::default()
        }
    }

    #[test]
    fn qoi_disease_free_run_is_degenerate() {
        let cfg = SensitivityConfig { b_seed: 0.0, ..fast_config() };
        let q = qoi_peak_at_day(&cfg.fixed, &cfg, 2.0).unwrap();
        assert!(q.degenerate);
        assert_relative_eq!(q.location, 2.5, epsilon = 1e-12); // center of cell 0 at dx = 5
    }

    #[test]
    fn qoi_is_finite_and_nonnegative() {
        let cfg = fast_config();
        let q = qoi_peak_at_day(&cfg.fixed, &cfg, 2.0).unwrap();
        assert!(!q.degenerate);
        assert!(q.location >= 0.0 && q.location <= cfg.grid_length);
    }

    #[test]
    fn qoi_propagates_without_the_ooze_channel() {
        // Vanishing visit rate and no ooze transport: infection still
        // spreads through epiphytic diffusion alone.
        let cfg = SensitivityConfig {
            t_quantify: 4.0,
            ..fast_config()
        };
        let params = ModelParams {
            mu: 1e-12,
            d2: 0.0,
            a1: 1e4,
            ..cfg.fixed
        };
        let q = qoi_peak_at_day(&params, &cfg, 4.0).unwrap();
        assert!(!q.degenerate);
        assert!(q.location > 0.0 && q.location.is_finite());
    }

    #[test]
    fn run_sensitivity_deterministic_and_yardsticks() {
        let cfg = fast_config();
        let a = run_sensitivity(&FactorRanges::default(), 8, 42, &cfg).unwrap();
        let b = run_sensitivity(&FactorRanges::default(), 8, 42, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total_runs, 48);
        assert!(!a.degenerate);
        assert!(a.variance >= 0.0);
        for (s, t) in a.first_order.iter().zip(&a.total_order) {
            // Noise tolerance: three bootstrap standard errors.
            assert!(
                t.value - s.value >= -3.0 * (s.std_err + t.std_err),
                "total {} below first-order {} beyond noise",
                t.value,
                s.value
            );
            assert!(s.ci_low <= s.ci_high);
        }
    }

    #[test]
    fn collapsed_factor_ranges_are_degenerate() {
        let cfg = fast_config();
        let point = FactorRanges {
            d2: (10.0, 10.0),
            mu: (0.5, 0.5),
            n: (3.0, 3.0),
            r: (0.5, 0.5),
        };
        let res = run_sensitivity(&point, 4, 1, &cfg).unwrap();
        assert!(res.degenerate);
        assert!(res.first_order.is_empty());
    }
}
