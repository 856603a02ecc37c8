//! Travelling-wave test statistics: peak tracking, the sample Pearson
//! correlation between time and peak location (constant-speed test), a
//! peak-aligned local L2 norm (constant-shape test), and the regression
//! wave speed compared against the analytic minimum speed.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{min_wave_speed, ModelParams};
use crate::seeding::stream_rng;
use crate::solver::{integrate, standard_initial_condition, Grid, Method, Trajectory};

/// Location of the maximum of one spatial field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakLocation {
    /// Cell index of the maximum (ties broken towards the smaller index).
    pub index: usize,
    /// Cell-center coordinate in meters.
    pub location: f64,
    /// Set when the field is flat (every entry equal); `index` is 0 then.
    pub degenerate: bool,
}

/// Index and cell-center location of the field maximum. A flat field is
/// flagged degenerate rather than treated as an error.
pub fn peak_location(field: &[f64], grid: &Grid) -> Result<PeakLocation> {
    if field.len() != grid.n_cells() {
        return Err(Error::Domain(format!(
            "field has {} cells, grid expects {}",
            field.len(),
            grid.n_cells()
        )));
    }
    let mut index = 0;
    let mut max = field[0];
    let mut min = field[0];
    for (j, &v) in field.iter().enumerate() {
        if v > max {
            max = v;
            index = j;
        }
        if v < min {
            min = v;
        }
    }
    let degenerate = max == min;
    Ok(PeakLocation {
        index: if degenerate { 0 } else { index },
        location: grid.cell_center(if degenerate { 0 } else { index }),
        degenerate,
    })
}

/// Sample Pearson correlation coefficient of two equal-length series.
/// Returns `None` when either series has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(Error::Domain(format!(
            "pearson needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Domain("pearson needs at least 2 points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Tracked peak of the infected field at a set of snapshot times.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSeries {
    /// Snapshot times actually used (days), strictly increasing.
    pub times: Vec<f64>,
    /// Peak cell-center locations (m).
    pub locations: Vec<f64>,
    /// Peak cell indices.
    pub indices: Vec<usize>,
    /// How many of the tracked snapshots had a flat (degenerate) peak.
    pub degenerate_count: usize,
}

/// Tracks the infected-field peak at `n_points` equally spaced target
/// times in `[t_start, t_end]`, using the nearest recorded snapshot for
/// each target.
pub fn track_peaks(
    traj: &Trajectory,
    t_start: f64,
    t_end: f64,
    n_points: usize,
) -> Result<PeakSeries> {
    if n_points < 2 {
        return Err(Error::Domain("track_peaks needs at least 2 points".into()));
    }
    if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start {
        return Err(Error::Domain(format!(
            "tracking window [{t_start}, {t_end}] is empty"
        )));
    }
    let (t_lo, t_hi) = (traj.first().t, traj.last().t);
    if t_start < t_lo - 1e-9 || t_end > t_hi + 1e-9 {
        return Err(Error::Domain(format!(
            "tracking window [{t_start}, {t_end}] is outside the trajectory span [{t_lo}, {t_hi}]"
        )));
    }
    let snaps = traj.snapshots();
    let mut times = Vec::with_capacity(n_points);
    let mut locations = Vec::with_capacity(n_points);
    let mut indices = Vec::with_capacity(n_points);
    let mut degenerate_count = 0;
    let step = (t_end - t_start) / (n_points - 1) as f64;
    for k in 0..n_points {
        let target = t_start + k as f64 * step;
        let snap = snaps
            .iter()
            .min_by(|a, b| {
                (a.t - target)
                    .abs()
                    .partial_cmp(&(b.t - target).abs())
                    .expect("finite times")
            })
            .expect("trajectory is non-empty");
        let peak = peak_location(&snap.i, traj.grid())?;
        if peak.degenerate {
            degenerate_count += 1;
        }
        times.push(snap.t);
        locations.push(peak.location);
        indices.push(peak.index);
    }
    Ok(PeakSeries { times, locations, indices, degenerate_count })
}

/// Result of the peak-aligned local L2 shape comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeDiff {
    /// `sqrt(sum over window of (I_ref - I_shifted)^2 * dx)`, Flower*sqrt(m).
    pub l2: f64,
    /// Half-width of the comparison window in cells.
    pub neighborhood_cells: usize,
    /// Set when a domain boundary truncated the window below `max_halfwidth`.
    pub truncated: bool,
}

/// Compares the infected profile at `t_cmp` against the one at `t_ref`
/// after shifting by whole cells so the peaks coincide. The window
/// half-width is the smaller of each peak's distance to its nearer
/// boundary, capped at `max_halfwidth`.
pub fn shape_diff_local_l2(
    traj: &Trajectory,
    t_ref: f64,
    t_cmp: f64,
    max_halfwidth: usize,
) -> Result<ShapeDiff> {
    let snap_ref = traj.snapshot_nearest(t_ref)?;
    let snap_cmp = traj.snapshot_nearest(t_cmp)?;
    let peak_ref = peak_location(&snap_ref.i, traj.grid())?;
    let peak_cmp = peak_location(&snap_cmp.i, traj.grid())?;
    if peak_ref.degenerate || peak_cmp.degenerate {
        return Err(Error::Domain(format!(
            "degenerate peak in shape comparison (t = {} vs {})",
            snap_ref.t, snap_cmp.t
        )));
    }
    let n = traj.grid().n_cells();
    let boundary_dist = |idx: usize| idx.min(n - 1 - idx);
    let halfwidth = boundary_dist(peak_ref.index)
        .min(boundary_dist(peak_cmp.index))
        .min(max_halfwidth);
    let dx = traj.grid().dx();
    let mut sum = 0.0;
    for offset in -(halfwidth as isize)..=(halfwidth as isize) {
        let jr = (peak_ref.index as isize + offset) as usize;
        let jc = (peak_cmp.index as isize + offset) as usize;
        let d = snap_ref.i[jr] - snap_cmp.i[jc];
        sum += d * d;
    }
    Ok(ShapeDiff {
        l2: (sum * dx).sqrt(),
        neighborhood_cells: halfwidth,
        truncated: halfwidth < max_halfwidth,
    })
}

/// Ordinary least-squares slope of location on time, with R^2.
/// The slope is the wave-speed estimate.
pub fn wave_speed_regression(series: &PeakSeries) -> Result<(f64, f64)> {
    let times = &series.times;
    let locs = &series.locations;
    let mut distinct = 1;
    for w in times.windows(2) {
        if w[1] != w[0] {
            distinct += 1;
        }
    }
    if times.len() < 2 || distinct < 2 {
        return Err(Error::Domain(
            "wave speed regression needs at least 2 distinct times".into(),
        ));
    }
    let n = times.len() as f64;
    let mt = times.iter().sum::<f64>() / n;
    let ml = locs.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stl = 0.0;
    for (&t, &x) in times.iter().zip(locs) {
        stt += (t - mt) * (t - mt);
        stl += (t - mt) * (x - ml);
    }
    let slope = stl / stt;
    let intercept = ml - slope * mt;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&t, &x) in times.iter().zip(locs) {
        let fit = intercept + slope * t;
        ss_res += (x - fit) * (x - fit);
        ss_tot += (x - ml) * (x - ml);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((slope, r2))
}

/// The three travelling-wave statistics for one sampled parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveStats {
    pub pearson: f64,
    pub l2_shape_diff: f64,
    pub neighborhood_cells: usize,
    pub neighborhood_truncated: bool,
    /// Regression wave speed (m/day).
    pub speed: f64,
    /// Signed difference between regression speed and the analytic minimum.
    pub speed_minus_cmin: f64,
    pub regression_r2: f64,
}

/// Uniform sampling intervals for the 14 drawn parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveRanges {
    pub d1: (f64, f64),
    pub d2: (f64, f64),
    pub k: (f64, f64),
    pub eps: (f64, f64),
    pub r: (f64, f64),
    pub mu: (f64, f64),
    pub gamma: (f64, f64),
    pub m1: (f64, f64),
    pub m2: (f64, f64),
    pub alpha: (f64, f64),
    pub a1: (f64, f64),
    pub a2: (f64, f64),
    pub n1: (f64, f64),
    pub n2: (f64, f64),
}

impl Default for WaveRanges {
    fn default() -> Self {
        Self {
            d1: (20.0, 50.0),
            d2: (0.0, 20.0),
            k: (1e6, 1e7),
            eps: (5.0, 2000.0),
            r: (0.05, 0.95),
            mu: (0.05, 0.95),
            gamma: (0.001, 0.95),
            m1: (0.1, 1.0),
            m2: (0.1, 1.0),
            alpha: (1e7, 1e8),
            a1: (2e5, 8e5),
            a2: (0.05, 0.5),
            n1: (1.0, 5.0),
            n2: (1.0, 5.0),
        }
    }
}

impl WaveRanges {
    fn entries(&self) -> [(&'static str, (f64, f64)); 14] {
        [
            ("d1", self.d1),
            ("d2", self.d2),
            ("k", self.k),
            ("eps", self.eps),
            ("r", self.r),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("m1", self.m1),
            ("m2", self.m2),
            ("alpha", self.alpha),
            ("a1", self.a1),
            ("a2", self.a2),
            ("n1", self.n1),
            ("n2", self.n2),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in self.entries() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::Config(format!(
                    "range for {name} must be a finite interval, got [{lo}, {hi}]"
                )));
            }
            let min_allowed = match name {
                "d2" => 0.0,
                "n1" | "n2" => 1.0,
                _ => f64::MIN_POSITIVE,
            };
            if lo < min_allowed {
                return Err(Error::Config(format!(
                    "range for {name} starts at {lo}, below the allowed minimum {min_allowed}"
                )));
            }
        }
        Ok(())
    }

    /// Draws one parameter set; the 14 ranges are consumed in a fixed
    /// order so results depend only on the RNG state.
    pub fn sample<R: Rng>(&self, n_cluster: f64, rng: &mut R) -> ModelParams {
        let mut draw = |(lo, hi): (f64, f64)| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        };
        ModelParams {
            n: n_cluster,
            d1: draw(self.d1),
            d2: draw(self.d2),
            k: draw(self.k),
            eps: draw(self.eps),
            r: draw(self.r),
            mu: draw(self.mu),
            gamma: draw(self.gamma),
            m1: draw(self.m1),
            m2: draw(self.m2),
            alpha: draw(self.alpha),
            a1: draw(self.a1),
            a2: draw(self.a2),
            n1: draw(self.n1),
            n2: draw(self.n2),
        }
    }
}

/// Simulation and measurement configuration for the wave experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveConfig {
    pub grid_length: f64,
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: f64,
    pub method: Method,
    /// Flowers per cluster; not part of the sampled ranges.
    pub n_cluster: f64,
    /// Seed mass placed in cell 0 (CFU). The default, 1e9, keeps the
    /// seed above the invasion threshold after it diffuses out of its
    /// 0.1 m cell, so every sampled wave is developed well before the
    /// measurement window opens at t = 10. (A much smaller seed dilutes
    /// below the sampled a1 thresholds within a day; onset then waits on
    /// epiphytic regrowth and slow draws miss the window entirely.)
    pub b_seed: f64,
    pub track_start: f64,
    pub track_end: f64,
    pub track_points: usize,
    pub shape_t_ref: f64,
    /// Comparison times are drawn uniformly from the recorded snapshot
    /// times inside this window.
    pub shape_window: (f64, f64),
    pub max_halfwidth: usize,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            grid_length: 1000.0,
            n_cells: 10_000,
            dt: 0.1,
            t_end: 30.0,
            record_every: 0.1,
            method: Method::AdamsPc,
            n_cluster: 5.0,
            b_seed: 1e9,
            track_start: 10.0,
            track_end: 30.0,
            track_points: 41,
            shape_t_ref: 20.0,
            shape_window: (20.1, 25.0),
            max_halfwidth: 1000,
        }
    }
}

/// Outcome of one sampled run.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutcome {
    Stats(WaveStats),
    /// The statistics were undefined (flat peaks, zero variance).
    Degenerate(String),
    /// The integration itself failed; diagnostics retained.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub index: usize,
    pub params: ModelParams,
    /// Shape-comparison time actually drawn (when the run got that far).
    pub t_cmp: Option<f64>,
    pub outcome: SampleOutcome,
}

/// Min / max / mean / sample standard deviation of one statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std_dev: f64,
}

pub fn summarize(values: &[f64]) -> Option<StatSummary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let std_dev = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(StatSummary { min, max, mean, std_dev })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveExperiment {
    pub samples: Vec<SampleRecord>,
    pub pearson: Option<StatSummary>,
    pub l2_shape_diff: Option<StatSummary>,
    pub speed_minus_cmin: Option<StatSummary>,
    pub n_ok: usize,
    pub n_degenerate: usize,
    pub n_failed: usize,
    pub seed: u64,
}

/// RNG stream tag for per-sample sub-seeds.
const WAVE_STREAM: u64 = 1;

/// Runs the travelling-wave sampling experiment: draws `n_samples`
/// parameter sets, integrates each, computes the three statistics, and
/// summarizes them. Samples are independent and evaluated in parallel;
/// each derives its own RNG from `(seed, index)`, so results do not
/// depend on thread count or execution order. Failed or degenerate
/// samples are recorded with diagnostics and excluded from the summary.
pub fn wave_experiment(
    n_samples: usize,
    ranges: &WaveRanges,
    seed: u64,
    config: &WaveConfig,
) -> Result<WaveExperiment> {
    if n_samples == 0 {
        return Err(Error::Config("wave experiment needs n_samples >= 1".into()));
    }
    ranges.validate()?;
    let grid = Grid::new(config.grid_length, config.n_cells)?;
    let samples: Vec<SampleRecord> = (0..n_samples)
        .into_par_iter()
        .map(|index| run_sample(index, ranges, seed, config, &grid))
        .collect();

    let ok: Vec<&WaveStats> = samples
        .iter()
        .filter_map(|s| match &s.outcome {
            SampleOutcome::Stats(w) => Some(w),
            _ => None,
        })
        .collect();
    let n_ok = ok.len();
    let n_failed = samples
        .iter()
        .filter(|s| matches!(s.outcome, SampleOutcome::Failed(_)))
        .count();
    let n_degenerate = samples.len() - n_ok - n_failed;
    let collect = |f: fn(&WaveStats) -> f64| -> Vec<f64> { ok.iter().map(|w| f(w)).collect() };
    Ok(WaveExperiment {
        pearson: summarize(&collect(|w| w.pearson)),
        l2_shape_diff: summarize(&collect(|w| w.l2_shape_diff)),
        speed_minus_cmin: summarize(&collect(|w| w.speed_minus_cmin)),
        samples,
        n_ok,
        n_degenerate,
        n_failed,
        seed,
    })
}

fn run_sample(
    index: usize,
    ranges: &WaveRanges,
    seed: u64,
    config: &WaveConfig,
    grid: &Grid,
) -> SampleRecord {
    let mut rng = stream_rng(seed, WAVE_STREAM, index as u64);
    let params = ranges.sample(config.n_cluster, &mut rng);
    let record = |t_cmp, outcome| SampleRecord { index, params, t_cmp, outcome };

    let initial = match standard_initial_condition(grid, &params, config.b_seed) {
        Ok(s) => s,
        Err(e) => return record(None, SampleOutcome::Failed(e.to_string())),
    };
    let traj = match integrate(
        &initial,
        &params,
        grid,
        config.t_end,
        config.dt,
        config.method,
        config.record_every,
    ) {
        Ok(t) => t,
        Err(e) => return record(None, SampleOutcome::Failed(e.to_string())),
    };

    let series = match track_peaks(&traj, config.track_start, config.track_end, config.track_points)
    {
        Ok(s) => s,
        Err(e) => return record(None, SampleOutcome::Failed(e.to_string())),
    };
    let pearson_value = match pearson(&series.times, &series.locations) {
        Ok(Some(v)) => v,
        Ok(None) => {
            return record(
                None,
                SampleOutcome::Degenerate("zero variance in peak series".into()),
            )
        }
        Err(e) => return record(None, SampleOutcome::Failed(e.to_string())),
    };
    let (speed, r2) = match wave_speed_regression(&series) {
        Ok(v) => v,
        Err(e) => return record(None, SampleOutcome::Failed(e.to_string())),
    };

    let (win_lo, win_hi) = config.shape_window;
    let candidates: Vec<f64> = traj
        .times()
        .into_iter()
        .filter(|&t| t >= win_lo - 1e-9 && t <= win_hi + 1e-9)
        .collect();
    if candidates.is_empty() {
        return record(
            None,
            SampleOutcome::Failed(format!(
                "no recorded snapshots in the shape window [{win_lo}, {win_hi}]"
            )),
        );
    }
    let t_cmp = candidates[rng.random_range(0..candidates.len())];
    let shape = match shape_diff_local_l2(&traj, config.shape_t_ref, t_cmp, config.max_halfwidth) {
        Ok(s) => s,
        Err(e) => return record(Some(t_cmp), SampleOutcome::Degenerate(e.to_string())),
    };

    record(
        Some(t_cmp),
        SampleOutcome::Stats(WaveStats {
            pearson: pearson_value,
            l2_shape_diff: shape.l2,
            neighborhood_cells: shape.neighborhood_cells,
            neighborhood_truncated: shape.truncated,
            speed,
            speed_minus_cmin: speed - min_wave_speed(&params),
            regression_r2: r2,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::solver::FieldState;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize, length: f64) -> Grid {
        Grid::new(length, n).unwrap()
    }

    /// Trajectory whose infected field at time `t` is produced by `profile`.
    fn synthetic_traj(
        n_cells: usize,
        length: f64,
        times: &[f64],
        profile: impl Fn(f64, usize) -> f64,
    ) -> Trajectory {
        let g = grid(n_cells, length);
        let snaps = times
            .iter()
            .map(|&t| {
                let mut st = FieldState::zeros(n_cells, t);
                for j in 0..n_cells {
                    st.i[j] = profile(t, j);
                }
                st
            })
            .collect();
        let dt_record = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
        Trajectory::from_snapshots(g, ModelParams::baseline(), dt_record, snaps).unwrap()
    }

    #[test]
    fn peak_of_single_spike() {
        let g = grid(16, 16.0);
        let mut f = vec![0.0; 16];
        f[7] = 3.0;
        let p = peak_location(&f, &g).unwrap();
        assert_eq!((p.index, p.degenerate), (7, false));
        assert_relative_eq!(p.location, 7.5, epsilon = 1e-12);
    }

    #[test]
    fn peak_tie_breaks_to_smaller_index() {
        let g = grid(12, 12.0);
        let mut f = vec![0.0; 12];
        f[3] = 2.0;
        f[9] = 2.0;
        assert_eq!(peak_location(&f, &g).unwrap().index, 3);
    }

    #[test]
    fn flat_field_is_degenerate() {
        let g = grid(8, 8.0);
        let p = peak_location(&[0.0; 8], &g).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.index, 0);
        let q = peak_location(&[2.5; 8], &g).unwrap();
        assert!(q.degenerate);
    }

    #[test]
    fn pearson_exact_linear_relations() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_relative_eq!(pearson(&xs, &up).unwrap().unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(pearson(&xs, &down).unwrap().unwrap(), -1.0, max_relative = 1e-12);
    }

    #[test]
    fn pearson_hand_computed_triple() {
        // xs = (1,2,3), ys = (1,2,2): r = sqrt(3)/2.
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap().unwrap();
        assert_relative_eq!(r, 3f64.sqrt() / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn pearson_degenerate_and_errors() {
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert_eq!(pearson(&[1.0, 2.0], &[5.0, 5.0]).unwrap(), None);
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            scale in 0.01..100.0f64,
            shift in -100.0..100.0f64,
        ) {
            let xs: Vec<f64> = (0..12).map(|i| (i as f64).sin() + 0.3 * i as f64).collect();
            let ys: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).cos() + 0.1 * i as f64).collect();
            let base = pearson(&xs, &ys).unwrap().unwrap();
            let xs_t: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            let plus = pearson(&xs_t, &ys).unwrap().unwrap();
            prop_assert!((plus - base).abs() < 1e-9);
            let xs_n: Vec<f64> = xs.iter().map(|x| -scale * x + shift).collect();
            let minus = pearson(&xs_n, &ys).unwrap().unwrap();
            prop_assert!((minus + base).abs() < 1e-9);
        }

        #[test]
        fn regression_slope_shift_invariant(offset in -1e4..1e4f64) {
            let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
            let locs: Vec<f64> = times.iter().map(|t| 7.0 * t + (t * 3.0).sin()).collect();
            let shifted: Vec<f64> = locs.iter().map(|x| x + offset).collect();
            let s0 = wave_speed_regression(&PeakSeries {
                times: times.clone(), locations: locs, indices: vec![0; 20], degenerate_count: 0,
            }).unwrap().0;
            let s1 = wave_speed_regression(&PeakSeries {
                times, locations: shifted, indices: vec![0; 20], degenerate_count: 0,
            }).unwrap().0;
            prop_assert!((s0 - s1).abs() < 1e-9 * (1.0 + s0.abs()));
        }
    }

    #[test]
    fn track_peaks_follows_moving_spike() {
        // Spike advancing one cell per day on a 100-cell grid.
        let times: Vec<f64> = (0..31).map(|k| k as f64).collect();
        let traj = synthetic_traj(100, 100.0, &times, |t, j| {
            if j == (10.0 + t) as usize { 1.0 } else { 0.0 }
        });
        let series = track_peaks(&traj, 10.0, 30.0, 41).unwrap();
        assert_eq!(series.times.len(), 41);
        assert_eq!(series.degenerate_count, 0);
        let r = pearson(&series.times, &series.locations).unwrap().unwrap();
        assert!(r > 0.999);
        let (slope, r2) = wave_speed_regression(&series).unwrap();
        assert_relative_eq!(slope, 1.0, max_relative = 0.05);
        assert!(r2 > 0.99);
    }

    #[test]
    fn track_peaks_stationary_trajectory_is_degenerate_for_pearson() {
        let times: Vec<f64> = (0..11).map(|k| k as f64).collect();
        let traj = synthetic_traj(50, 50.0, &times, |_, j| if j == 20 { 1.0 } else { 0.0 });
        let series = track_peaks(&traj, 0.0, 10.0, 11).unwrap();
        assert!(series.locations.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(pearson(&series.times, &series.locations).unwrap(), None);
    }

    #[test]
    fn track_peaks_two_points_takes_endpoints() {
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let traj = synthetic_traj(50, 50.0, &times, |t, j| if j == t as usize { 1.0 } else { 0.0 });
        let series = track_peaks(&traj, 0.0, 4.0, 2).unwrap();
        assert_eq!(series.times, vec![0.0, 4.0]);
    }

    #[test]
    fn track_peaks_window_must_be_covered() {
        let times: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let traj = synthetic_traj(10, 10.0, &times, |_, _| 0.0);
        assert!(track_peaks(&traj, 2.0, 9.0, 5).is_err());
    }

    #[test]
    fn shape_diff_identical_profile_is_zero() {
        let times = [0.0, 1.0, 2.0];
        let traj = synthetic_traj(200, 200.0, &times, |_, j| (-((j as f64 - 50.0) / 8.0).powi(2)).exp());
        let d = shape_diff_local_l2(&traj, 0.0, 2.0, 1000).unwrap();
        assert_eq!(d.l2, 0.0);
        assert!(d.truncated, "window capped by boundary distance 50");
        assert_eq!(d.neighborhood_cells, 50);
    }

    #[test]
    fn shape_diff_alignment_removes_pure_translation() {
        let times = [0.0, 1.0];
        let traj = synthetic_traj(300, 300.0, &times, |t, j| {
            let center = 80.0 + 40.0 * t; // shift by 40 whole cells
            (-((j as f64 - center) / 10.0).powi(2)).exp()
        });
        let d = shape_diff_local_l2(&traj, 0.0, 1.0, 60).unwrap();
        assert!(d.l2 < 1e-12, "pure integer shift must align away, got {}", d.l2);
        assert!(!d.truncated);
        assert_eq!(d.neighborhood_cells, 60);
    }

    #[test]
    fn shape_diff_hand_computed_window() {
        // 5-cell profiles, dx = 1: window +-2 around both peaks (index 2).
        let times = [0.0, 1.0];
        let ref_i = [0.0, 1.0, 3.0, 1.0, 0.0];
        let cmp_i = [0.0, 2.0, 4.0, 2.0, 1.0];
        let traj = synthetic_traj(5, 5.0, &times, move |t, j| {
            if t == 0.0 { ref_i[j] } else { cmp_i[j] }
        });
        let d = shape_diff_local_l2(&traj, 0.0, 1.0, 1000).unwrap();
        // sum of squared diffs: 0 + 1 + 1 + 1 + 1 = 4, times dx = 1
        assert_relative_eq!(d.l2, 2.0, max_relative = 1e-12);
        assert_eq!(d.neighborhood_cells, 2);
        assert!(d.truncated);
    }

    #[test]
    fn shape_diff_symmetric_when_untruncated() {
        let times = [0.0, 1.0];
        let traj = synthetic_traj(400, 400.0, &times, |t, j| {
            let center = 150.0 + 60.0 * t;
            let w = 12.0 + 2.0 * t;
            (-((j as f64 - center) / w).powi(2)).exp()
        });
        let a = shape_diff_local_l2(&traj, 0.0, 1.0, 80).unwrap();
        let b = shape_diff_local_l2(&traj, 1.0, 0.0, 80).unwrap();
        assert!(!a.truncated && !b.truncated);
        assert_relative_eq!(a.l2, b.l2, max_relative = 1e-12);
    }

    #[test]
    fn shape_diff_rejects_degenerate_peaks() {
        let times = [0.0, 1.0];
        let traj = synthetic_traj(50, 50.0, &times, |t, j| {
            if t > 0.5 && j == 10 { 1.0 } else { 0.0 }
        });
        assert!(shape_diff_local_l2(&traj, 0.0, 1.0, 1000).is_err());
    }

    #[test]
    fn regression_exact_line() {
        let series = PeakSeries {
            times: (0..41).map(|k| 10.0 + 0.5 * k as f64).collect(),
            locations: (0..41).map(|k| 100.0 + 10.0 * k as f64).collect(),
            indices: vec![0; 41],
            degenerate_count: 0,
        };
        let (slope, r2) = wave_speed_regression(&series).unwrap();
        assert_relative_eq!(slope, 20.0, max_relative = 1e-12);
        assert_relative_eq!(r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn regression_two_points() {
        let series = PeakSeries {
            times: vec![10.0, 30.0],
            locations: vec![100.0, 500.0],
            indices: vec![0, 0],
            degenerate_count: 0,
        };
        assert_relative_eq!(wave_speed_regression(&series).unwrap().0, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn regression_matches_normal_equations_oracle() {
        // Independent route: slope = (n*Sxy - Sx*Sy) / (n*Sxx - Sx^2).
        let mut rng = stream_rng(99, 7, 0);
        let times: Vec<f64> = (0..41).map(|k| 10.0 + 0.5 * k as f64).collect();
        let locations: Vec<f64> = times
            .iter()
            .map(|t| 3.0 + 17.5 * t + rng.random_range(-2.0..=2.0))
            .collect();
        let n = times.len() as f64;
        let sx: f64 = times.iter().sum();
        let sy: f64 = locations.iter().sum();
        let sxy: f64 = times.iter().zip(&locations).map(|(a, b)| a * b).sum();
        let sxx: f64 = times.iter().map(|a| a * a).sum();
        let oracle = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let series = PeakSeries { times, locations, indices: vec![0; 41], degenerate_count: 0 };
        let (slope, _) = wave_speed_regression(&series).unwrap();
        assert_relative_eq!(slope, oracle, max_relative = 1e-9);
    }

    #[test]
    fn regression_needs_two_distinct_times() {
        let series = PeakSeries {
            times: vec![5.0, 5.0],
            locations: vec![1.0, 2.0],
            indices: vec![0, 0],
            degenerate_count: 0,
        };
        assert!(wave_speed_regression(&series).is_err());
    }

    /// Coarse, fast configuration for experiment-level tests.
    fn desk_config() -> WaveConfig {
        WaveConfig {
            n_cells: 250,
            ..WaveConfig::default()
        }
    }

    #[test]
    fn failed_samples_are_reported_and_excluded_from_summary() {
        // An absurd secretion rate blows the integration up; the sample
        // must be recorded as failed with diagnostics, not dropped.
        let mut ranges = WaveRanges::default();
        ranges.alpha = (1e305, 1e305);
        let cfg = desk_config();
        let res = wave_experiment(1, &ranges, 5, &cfg).unwrap();
        assert_eq!(res.n_failed, 1);
        assert_eq!(res.n_ok, 0);
        assert!(res.pearson.is_none(), "no summary from failed samples");
        match &res.samples[0].outcome {
            SampleOutcome::Failed(reason) => assert!(!reason.is_empty()),
            other => panic!("expected a failed sample, got {other:?}"),
        }
    }

    #[test]
    fn wave_experiment_is_deterministic_and_in_range() {
        let cfg = desk_config();
        let a = wave_experiment(2, &WaveRanges::default(), 1234, &cfg).unwrap();
        let b = wave_experiment(2, &WaveRanges::default(), 1234, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.n_ok + a.n_degenerate + a.n_failed, 2);
        for s in &a.samples {
            if let SampleOutcome::Stats(w) = &s.outcome {
                assert!((-1.0..=1.0).contains(&w.pearson));
                assert!(w.l2_shape_diff >= 0.0);
                assert!(w.neighborhood_cells <= cfg.max_halfwidth);
            }
        }
        let c = wave_experiment(2, &WaveRanges::default(), 4321, &cfg).unwrap();
        assert_ne!(
            a.samples[0].params, c.samples[0].params,
            "different seeds draw different parameters"
        );
    }
}
