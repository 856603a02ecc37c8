//! Method-of-lines solver for the coupled ODE-PDE system on a uniform 1D
//! grid with zero-flux (Neumann) boundaries.
//!
//! The two pathogen fields diffuse; the three flower compartments are
//! pointwise ODEs. Space is discretized with second-order central
//! differences and ghost-cell reflection at both ends, time with either a
//! 4th-order Adams-Bashforth-Moulton predictor-corrector (RK4 bootstrap,
//! one corrector iteration plus an optional second) or classical RK4.
//!
//! Both methods are explicit, so the integrator refines its internal step
//! below the requested `dt` whenever the diffusion CFL limit demands it:
//! the substep is `h = dt / m` with `m` the smallest integer putting
//! `h * lambda_max` inside the method's real-axis stability allowance
//! (`lambda_max` = diffusion spectral bound `4*max(D1,D2)/dx^2` plus a
//! reaction-rate envelope). The substep count is a deterministic function
//! of the arguments, so runs remain bit-reproducible.

use crate::error::{Error, Result};
use crate::model::{self, BoundConstants, ModelParams};

/// Absolute tolerance for negative undershoot at recorded snapshots.
pub const TOL_NEG: f64 = 1e-9;
/// Relative tolerance on per-cell flower conservation at snapshots.
pub const TOL_CONS_REL: f64 = 1e-6;
/// Relative slack on the a-priori pathogen bounds at snapshots.
pub const TOL_BOUND_REL: f64 = 1e-6;

/// Real-axis stability allowance for the ABM4 predictor-corrector.
/// The PECE boundary sits at |h*lambda| = 1.28 (1.05 when the second
/// corrector iteration engages); 0.9 leaves margin for both.
const ADAMS_PC_ALLOW: f64 = 0.9;
/// Real-axis stability allowance for classical RK4 (boundary 2.785).
const RK4_ALLOW: f64 = 2.2;
/// Relative correction norm above which a second corrector iteration runs.
const CORRECTOR_RETRY_RTOL: f64 = 1e-8;

/// Uniform 1D grid of cell-centered flower clusters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    length: f64,
    n_cells: usize,
}

impl Grid {
    pub fn new(length: f64, n_cells: usize) -> Result<Self> {
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidParam {
                name: "grid.length",
                value: length,
                reason: "must be finite and positive",
            });
        }
        if n_cells < 3 {
            return Err(Error::InvalidParam {
                name: "grid.n_cells",
                value: n_cells as f64,
                reason: "need at least 3 cells",
            });
        }
        Ok(Self { length, n_cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cell width in meters.
    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    /// Center coordinate of cell `j`.
    pub fn cell_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx()
    }
}

/// The five spatial fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    /// Time in days.
    pub t: f64,
    pub b: Vec<f64>,
    pub o: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

impl FieldState {
    pub fn zeros(n_cells: usize, t: f64) -> Self {
        Self {
            t,
            b: vec![0.0; n_cells],
            o: vec![0.0; n_cells],
            s: vec![0.0; n_cells],
            i: vec![0.0; n_cells],
            r: vec![0.0; n_cells],
        }
    }

    pub fn n_cells(&self) -> usize {
        self.b.len()
    }

    fn check_shape(&self, grid: &Grid) -> Result<()> {
        let n = grid.n_cells();
        if [&self.b, &self.o, &self.s, &self.i, &self.r]
            .iter()
            .any(|f| f.len() != n)
        {
            return Err(Error::Domain(format!(
                "field state has {} cells, grid expects {n}",
                self.n_cells()
            )));
        }
        Ok(())
    }
}

/// Per-field time derivatives on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRates {
    pub b: Vec<f64>,
    pub o: Vec<f64>,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub r: Vec<f64>,
}

/// Time-ordered sequence of recorded snapshots from one integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Grid,
    params: ModelParams,
    dt_record: f64,
    snapshots: Vec<FieldState>,
}

impl Trajectory {
    /// Assembles a trajectory from pre-built snapshots (used by tests and
    /// analysis code); times must be strictly increasing.
    pub fn from_snapshots(
        grid: Grid,
        params: ModelParams,
        dt_record: f64,
        snapshots: Vec<FieldState>,
    ) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::Domain("trajectory needs at least one snapshot".into()));
        }
        for w in snapshots.windows(2) {
            if !w[1].t.is_finite() || w[1].t <= w[0].t {
                return Err(Error::Domain(format!(
                    "snapshot times must be strictly increasing ({} then {})",
                    w[0].t, w[1].t
                )));
            }
        }
        for s in &snapshots {
            s.check_shape(&grid)?;
        }
        Ok(Self { grid, params, dt_record, snapshots })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dt_record(&self) -> f64 {
        self.dt_record
    }

    pub fn snapshots(&self) -> &[FieldState] {
        &self.snapshots
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &FieldState {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &FieldState {
        self.snapshots.last().expect("non-empty by construction")
    }

    /// Snapshot whose time is nearest `t`, required to lie within half a
    /// recording interval.
    pub fn snapshot_nearest(&self, t: f64) -> Result<&FieldState> {
        let best = self
            .snapshots
            .iter()
            .min_by(|a, b| {
                (a.t - t).abs()
                    .partial_cmp(&(b.t - t).abs())
                    .expect("times are finite")
            })
            .expect("non-empty by construction");
        if (best.t - t).abs() > 0.5 * self.dt_record + 1e-9 {
            return Err(Error::Domain(format!(
                "no snapshot near t = {t}; closest is t = {} with recording interval {}",
                best.t, self.dt_record
            )));
        }
        Ok(best)
    }
}

/// Time-stepping method for the semi-discrete system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// 4th-order Adams-Bashforth-Moulton predictor-corrector, RK4 bootstrap.
    #[default]
    AdamsPc,
    /// Classical 4th-order Runge-Kutta.
    Rk4,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::AdamsPc => "adams_pc",
            Method::Rk4 => "rk4",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adams_pc" => Ok(Method::AdamsPc),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::Config(format!(
                "unknown integrator method `{other}` (expected `adams_pc` or `rk4`)"
            ))),
        }
    }
}

/// Second-order Neumann Laplacian: central differences with ghost-cell
/// reflection at both ends (zero flux). The entries sum to zero by
/// telescoping, which is what conserves total mass under pure diffusion.
pub fn laplacian_neumann(field: &[f64], dx: f64) -> Result<Vec<f64>> {
    if field.len() < 3 {
        return Err(Error::Domain(format!(
            "laplacian needs at least 3 cells, got {}",
            field.len()
        )));
    }
    if !dx.is_finite() || dx <= 0.0 {
        return Err(Error::Domain(format!("dx = {dx} must be finite and positive")));
    }
    let inv_dx2 = 1.0 / (dx * dx);
    let mut out = vec![0.0; field.len()];
    laplacian_range(field, inv_dx2, 0, field.len(), &mut out);
    Ok(out)
}

/// Writes `coeff * (u[j-1] - 2 u[j] + u[j+1])` for cells `lo..hi` into
/// `out[0..hi-lo]`, with reflecting ghosts at the domain ends.
fn laplacian_range(field: &[f64], coeff: f64, lo: usize, hi: usize, out: &mut [f64]) {
    let n = field.len();
    debug_assert_eq!(out.len(), hi - lo);
    let start = lo.max(1);
    let stop = hi.min(n - 1);
    if lo == 0 {
        out[0] = coeff * (field[1] - field[0]);
    }
    for j in start..stop {
        out[j - lo] = coeff * (field[j - 1] - 2.0 * field[j] + field[j + 1]);
    }
    if hi == n {
        out[n - 1 - lo] = coeff * (field[n - 2] - field[n - 1]);
    }
}

/// Flat 5-field system buffer used by the integrator.
#[derive(Debug, Clone)]
struct Sys {
    b: Vec<f64>,
    o: Vec<f64>,
    s: Vec<f64>,
    i: Vec<f64>,
    r: Vec<f64>,
}

impl Sys {
    fn zeros(n: usize) -> Self {
        Self {
            b: vec![0.0; n],
            o: vec![0.0; n],
            s: vec![0.0; n],
            i: vec![0.0; n],
            r: vec![0.0; n],
        }
    }

    fn from_state(state: &FieldState) -> Self {
        Self {
            b: state.b.clone(),
            o: state.o.clone(),
            s: state.s.clone(),
            i: state.i.clone(),
            r: state.r.clone(),
        }
    }

    fn to_state(&self, t: f64) -> FieldState {
        FieldState {
            t,
            b: self.b.clone(),
            o: self.o.clone(),
            s: self.s.clone(),
            i: self.i.clone(),
            r: self.r.clone(),
        }
    }

    fn fields(&self) -> [&[f64]; 5] {
        [&self.b, &self.o, &self.s, &self.i, &self.r]
    }

    fn fields_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [&mut self.b, &mut self.o, &mut self.s, &mut self.i, &mut self.r]
    }
}

/// `out = y + c * k`, fieldwise.
fn saxpy(out: &mut Sys, y: &Sys, c: f64, k: &Sys) {
    let yf = y.fields();
    let kf = k.fields();
    for (fi, dst) in out.fields_mut().into_iter().enumerate() {
        let (ys, ks) = (yf[fi], kf[fi]);
        for j in 0..dst.len() {
            dst[j] = ys[j] + c * ks[j];
        }
    }
}

/// `out = y + h * (c0*f0 + c1*f1 + c2*f2 + c3*f3)`, fieldwise.
fn adams_combo(out: &mut Sys, y: &Sys, h: f64, c: [f64; 4], f: [&Sys; 4]) {
    let yf = y.fields();
    let ff: Vec<[&[f64]; 5]> = f.iter().map(|s| s.fields()).collect();
    for (fi, dst) in out.fields_mut().into_iter().enumerate() {
        let ys = yf[fi];
        let (f0, f1, f2, f3) = (ff[0][fi], ff[1][fi], ff[2][fi], ff[3][fi]);
        for j in 0..dst.len() {
            dst[j] = ys[j] + h * (c[0] * f0[j] + c[1] * f1[j] + c[2] * f2[j] + c[3] * f3[j]);
        }
    }
}

/// `y += h/6 * (k1 + 2 k2 + 2 k3 + k4)`, fieldwise.
fn rk4_update(y: &mut Sys, h: f64, k1: &Sys, k2: &Sys, k3: &Sys, k4: &Sys) {
    let c = h / 6.0;
    let (f1, f2, f3, f4) = (k1.fields(), k2.fields(), k3.fields(), k4.fields());
    for (fi, dst) in y.fields_mut().into_iter().enumerate() {
        let (a, b, cc, d) = (f1[fi], f2[fi], f3[fi], f4[fi]);
        for j in 0..dst.len() {
            dst[j] += c * (a[j] + 2.0 * b[j] + 2.0 * cc[j] + d[j]);
        }
    }
}

/// Largest per-field relative difference between `a` and `b`, scaled by
/// the sup of `a`'s field.
fn rel_diff(a: &Sys, b: &Sys) -> f64 {
    let mut worst: f64 = 0.0;
    for (fa, fb) in a.fields().into_iter().zip(b.fields()) {
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for j in 0..fa.len() {
            num = num.max((fa[j] - fb[j]).abs());
            den = den.max(fa[j].abs());
        }
        worst = worst.max(num / (den + 1e-300));
    }
    worst
}

#[derive(Clone, Copy)]
struct RhsCtx {
    params: ModelParams,
    d1_over_dx2: f64,
    d2_over_dx2: f64,
    n_cells: usize,
}

impl RhsCtx {
    fn new(params: &ModelParams, grid: &Grid) -> Self {
        let inv_dx2 = 1.0 / (grid.dx() * grid.dx());
        Self {
            params: *params,
            d1_over_dx2: params.d1 * inv_dx2,
            d2_over_dx2: params.d2 * inv_dx2,
            n_cells: grid.n_cells(),
        }
    }
}

/// Full semi-discrete right-hand side: pointwise reaction everywhere plus
/// diffusion on the two pathogen fields. Evaluation stays single-threaded;
/// parallelism lives at the experiment level where whole integrations are
/// independent.
fn rhs(ctx: &RhsCtx, y: &Sys, out: &mut Sys) {
    let n = ctx.n_cells;
    if ctx.d1_over_dx2 > 0.0 {
        laplacian_range(&y.b, ctx.d1_over_dx2, 0, n, &mut out.b);
    } else {
        out.b.fill(0.0);
    }
    if ctx.d2_over_dx2 > 0.0 {
        laplacian_range(&y.o, ctx.d2_over_dx2, 0, n, &mut out.o);
    } else {
        out.o.fill(0.0);
    }
    let p = &ctx.params;
    for j in 0..n {
        let rates = model::reaction_terms(y.b[j], y.o[j], y.s[j], y.i[j], p);
        out.b[j] += rates.b;
        out.o[j] += rates.o;
        out.s[j] = rates.s;
        out.i[j] = rates.i;
        out.r[j] = rates.r;
    }
}

/// Semi-discrete right-hand side of the full system at one instant.
pub fn full_rhs(state: &FieldState, params: &ModelParams, grid: &Grid) -> Result<FieldRates> {
    params.validate()?;
    state.check_shape(grid)?;
    let bounds = model::a_priori_bounds(
        params,
        state.b.iter().copied().fold(0.0, f64::max),
        state.o.iter().copied().fold(0.0, f64::max),
    )?;
    check_invariants(state, params, &bounds)?;
    let ctx = RhsCtx::new(params, grid);
    let y = Sys::from_state(state);
    let mut out = Sys::zeros(grid.n_cells());
    rhs(&ctx, &y, &mut out);
    Ok(FieldRates { b: out.b, o: out.o, s: out.s, i: out.i, r: out.r })
}

/// Point-seeded initial condition: `b_seed` CFU in cell 0, a fully
/// susceptible cluster of `n` flowers everywhere, nothing else.
pub fn standard_initial_condition(
    grid: &Grid,
    params: &ModelParams,
    b_seed: f64,
) -> Result<FieldState> {
    params.validate()?;
    if !b_seed.is_finite() || b_seed < 0.0 {
        return Err(Error::Domain(format!(
            "b_seed = {b_seed} must be finite and non-negative"
        )));
    }
    let mut state = FieldState::zeros(grid.n_cells(), 0.0);
    state.b[0] = b_seed;
    state.s.fill(params.n);
    Ok(state)
}

/// Conservative envelope of the reaction Jacobian's spectral radius, used
/// only to size the stability substep. The `3r` and `2(M1+M2)` terms cover
/// the logistic overshoot while the carrying capacity collapses behind the
/// front (the ratio B/capacity equilibrates near M/r there).
fn reaction_rate_bound(p: &ModelParams) -> f64 {
    3.0 * p.r + p.mu * p.n + p.gamma + 2.0 * (p.m1 + p.m2)
}

/// Internal substep count for one macro step of size `dt`.
fn substeps_for(params: &ModelParams, grid: &Grid, dt: f64, method: Method) -> usize {
    let dx = grid.dx();
    let lambda = 4.0 * params.d1.max(params.d2) / (dx * dx) + reaction_rate_bound(params);
    let allow = match method {
        Method::AdamsPc => ADAMS_PC_ALLOW,
        Method::Rk4 => RK4_ALLOW,
    };
    ((dt * lambda / allow).ceil() as usize).max(1)
}

/// Snapshot invariant checks: finiteness, non-negativity within
/// [`TOL_NEG`], per-cell flower conservation within [`TOL_CONS_REL`], and
/// the a-priori pathogen bounds within [`TOL_BOUND_REL`].
pub(crate) fn check_invariants(
    state: &FieldState,
    params: &ModelParams,
    bounds: &BoundConstants,
) -> Result<()> {
    let fields: [(&'static str, &[f64]); 5] = [
        ("b", &state.b),
        ("o", &state.o),
        ("s", &state.s),
        ("i", &state.i),
        ("r", &state.r),
    ];
    for (name, field) in fields {
        for (cell, &v) in field.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::BlowUp { field: name, cell, t: state.t });
            }
            if v < -TOL_NEG {
                return Err(Error::Instability {
                    field: name,
                    cell,
                    t: state.t,
                    value: v,
                    constraint: format!("non-negativity (tolerance {TOL_NEG:e})"),
                });
            }
        }
    }
    let n = params.n;
    let cons_tol = TOL_CONS_REL * n;
    for cell in 0..state.n_cells() {
        let total = state.s[cell] + state.i[cell] + state.r[cell];
        if (total - n).abs() > cons_tol {
            return Err(Error::Instability {
                field: "s+i+r",
                cell,
                t: state.t,
                value: total,
                constraint: format!("conservation s+i+r = {n} (tolerance {cons_tol:e})"),
            });
        }
    }
    let b_cap = bounds.b_max * (1.0 + TOL_BOUND_REL);
    let o_cap = bounds.o_max * (1.0 + TOL_BOUND_REL);
    for cell in 0..state.n_cells() {
        if state.b[cell] > b_cap {
            return Err(Error::Instability {
                field: "b",
                cell,
                t: state.t,
                value: state.b[cell],
                constraint: format!("a-priori bound b <= {}", bounds.b_max),
            });
        }
        if state.o[cell] > o_cap {
            return Err(Error::Instability {
                field: "o",
                cell,
                t: state.t,
                value: state.o[cell],
                constraint: format!("a-priori bound o <= {}", bounds.o_max),
            });
        }
    }
    Ok(())
}

/// Clamps undershoot in `[-TOL_NEG, 0)` to zero; used on recorded output.
fn clamp_snapshot(state: &mut FieldState) {
    for field in [&mut state.b, &mut state.o, &mut state.s, &mut state.i, &mut state.r] {
        for v in field.iter_mut() {
            if *v < 0.0 && *v >= -TOL_NEG {
                *v = 0.0;
            }
        }
    }
}

struct Stepper {
    ctx: RhsCtx,
    h: f64,
    method: Method,
    k1: Sys,
    k2: Sys,
    k3: Sys,
    k4: Sys,
    stage: Sys,
    /// Adams rate history at the trailing grid points, oldest first.
    hist: std::collections::VecDeque<Sys>,
    pred: Sys,
    corr: Sys,
    scratch_rate: Sys,
}

impl Stepper {
    fn new(ctx: RhsCtx, h: f64, method: Method) -> Self {
        let n = ctx.n_cells;
        Self {
            ctx,
            h,
            method,
            k1: Sys::zeros(n),
            k2: Sys::zeros(n),
            k3: Sys::zeros(n),
            k4: Sys::zeros(n),
            stage: Sys::zeros(n),
            hist: std::collections::VecDeque::with_capacity(4),
            pred: Sys::zeros(n),
            corr: Sys::zeros(n),
            scratch_rate: Sys::zeros(n),
        }
    }

    fn rk4_step(&mut self, y: &mut Sys, k1_ready: bool) {
        let h = self.h;
        if !k1_ready {
            rhs(&self.ctx, y, &mut self.k1);
        }
        saxpy(&mut self.stage, y, 0.5 * h, &self.k1);
        rhs(&self.ctx, &self.stage, &mut self.k2);
        saxpy(&mut self.stage, y, 0.5 * h, &self.k2);
        rhs(&self.ctx, &self.stage, &mut self.k3);
        saxpy(&mut self.stage, y, h, &self.k3);
        rhs(&self.ctx, &self.stage, &mut self.k4);
        rk4_update(y, h, &self.k1, &self.k2, &self.k3, &self.k4);
    }

    fn step(&mut self, y: &mut Sys) {
        match self.method {
            Method::Rk4 => self.rk4_step(y, false),
            Method::AdamsPc => {
                if self.hist.len() < 4 {
                    // Bootstrap: RK4 substeps while the rate history fills.
                    if self.hist.is_empty() {
                        rhs(&self.ctx, y, &mut self.k1);
                        self.hist.push_back(self.k1.clone());
                    }
                    let newest = self.hist.back().expect("just ensured non-empty");
                    self.k1.clone_from(newest);
                    self.rk4_step(y, true);
                    rhs(&self.ctx, y, &mut self.scratch_rate);
                    self.hist.push_back(self.scratch_rate.clone());
                } else {
                    self.adams_step(y);
                }
            }
        }
    }

    fn adams_step(&mut self, y: &mut Sys) {
        let h = self.h;
        let (f0, f1, f2, f3) = {
            let h = &self.hist;
            (&h[0], &h[1], &h[2], &h[3]) // oldest .. newest
        };
        // Predictor (Adams-Bashforth 4).
        adams_combo(
            &mut self.pred,
            y,
            h / 24.0,
            [55.0, -59.0, 37.0, -9.0],
            [f3, f2, f1, f0],
        );
        rhs(&self.ctx, &self.pred, &mut self.scratch_rate);
        // Corrector (Adams-Moulton 4).
        adams_combo(
            &mut self.corr,
            y,
            h / 24.0,
            [9.0, 19.0, -5.0, 1.0],
            [&self.scratch_rate, f3, f2, f1],
        );
        if rel_diff(&self.corr, &self.pred) > CORRECTOR_RETRY_RTOL {
            rhs(&self.ctx, &self.corr, &mut self.scratch_rate);
            let (f1, f2, f3) = {
                let h = &self.hist;
                (&h[1], &h[2], &h[3])
            };
            adams_combo(
                &mut self.pred,
                y,
                h / 24.0,
                [9.0, 19.0, -5.0, 1.0],
                [&self.scratch_rate, f3, f2, f1],
            );
            std::mem::swap(y, &mut self.pred);
        } else {
            std::mem::swap(y, &mut self.corr);
        }
        // Final evaluation keeps the history consistent with accepted states.
        let mut recycled = self.hist.pop_front().expect("history is full here");
        rhs(&self.ctx, y, &mut recycled);
        self.hist.push_back(recycled);
    }
}

/// Integrates the semi-discrete system from `state0.t` to `t_end`.
///
/// `dt` is the macro step; snapshots are recorded (and invariants checked)
/// at every multiple of `record_every`, which must itself be a multiple of
/// `dt`. Internally each macro step may be subdivided for stability; see
/// the module docs.
pub fn integrate(
    state0: &FieldState,
    params: &ModelParams,
    grid: &Grid,
    t_end: f64,
    dt: f64,
    method: Method,
    record_every: f64,
) -> Result<Trajectory> {
    params.validate()?;
    state0.check_shape(grid)?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Domain(format!("dt = {dt} must be finite and positive")));
    }
    if !t_end.is_finite() || t_end <= state0.t {
        return Err(Error::Domain(format!(
            "t_end = {t_end} must exceed the initial time {}",
            state0.t
        )));
    }
    if record_every < dt {
        return Err(Error::Domain(format!(
            "record_every = {record_every} must be >= dt = {dt}"
        )));
    }
    let n_macro_f = (t_end - state0.t) / dt;
    let n_macro = n_macro_f.round() as usize;
    if n_macro == 0 || (n_macro_f - n_macro as f64).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "integration span {} is not a whole number of dt = {dt} steps",
            t_end - state0.t
        )));
    }
    let k_rec_f = record_every / dt;
    let k_rec = k_rec_f.round() as usize;
    if k_rec == 0 || (k_rec_f - k_rec as f64).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "record_every = {record_every} is not a whole multiple of dt = {dt}"
        )));
    }

    let b0_max = state0.b.iter().copied().fold(0.0, f64::max);
    let o0_max = state0.o.iter().copied().fold(0.0, f64::max);
    let bounds = model::a_priori_bounds(params, b0_max, o0_max)?;

    check_invariants(state0, params, &bounds)?;
    let mut snapshots = Vec::with_capacity(n_macro / k_rec + 2);
    let mut first = state0.clone();
    clamp_snapshot(&mut first);
    snapshots.push(first);

    let ctx = RhsCtx::new(params, grid);
    let m_sub = substeps_for(params, grid, dt, method);
    let h = dt / m_sub as f64;
    let mut stepper = Stepper::new(ctx, h, method);
    let mut y = Sys::from_state(state0);

    for macro_step in 1..=n_macro {
        for _ in 0..m_sub {
            stepper.step(&mut y);
        }
        if macro_step % k_rec == 0 {
            let t = state0.t + macro_step as f64 * dt;
            let mut snap = y.to_state(t);
            check_invariants(&snap, params, &bounds)?;
            clamp_snapshot(&mut snap);
            snapshots.push(snap);
        }
    }

    Trajectory::from_snapshots(*grid, *params, record_every, snapshots)
}
