//! Pointwise model: parameters, Hill kinetics, reaction terms, a-priori
//! bounds, and the travelling-wave parameter constraints.
//!
//! Everything in this module is independent of the spatial discretization.
//! The state at one location is a cluster of `n` flowers split into
//! susceptible/infected/removed compartments, plus two pathogen pools:
//! the epiphytic population `b` living on flower surfaces and the ooze
//! population `o` secreted by infected tissue. Units are CFU for pathogen
//! compartments, flowers for host compartments, days for time.

use crate::error::{Error, Result};

/// Inputs this far below the Hill threshold contribute a rate that is zero
/// to well past double precision; they short-circuit the `powf` call.
const HILL_CUTOFF: f64 = 1e-12;

/// Relative tolerance on the flower-conservation identity s + i + r = n.
pub const CONSERVATION_RTOL: f64 = 1e-6;

/// The model parameters.
///
/// All parameters are strictly positive except `d2`, which may be zero
/// (ooze transport can be switched off entirely). The Hill exponents are
/// real-valued with `n1, n2 >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Flowers per cluster (Flower).
    pub n: f64,
    /// Diffusivity of bee-borne transport of the epiphytic pool (m^2/day).
    pub d1: f64,
    /// Diffusivity of ooze-vector transport (m^2/day). May be zero.
    pub d2: f64,
    /// Epiphytic carrying capacity per living flower (CFU/Flower).
    pub k: f64,
    /// Residual carrying capacity of a fully dead cluster (CFU).
    pub eps: f64,
    /// Epiphytic growth rate (1/day).
    pub r: f64,
    /// Flower-visiting rate of ooze-carrying vectors (1/(day*Flower)).
    pub mu: f64,
    /// Ooze decay rate (1/day).
    pub gamma: f64,
    /// Ooze secretion rate per infected flower (CFU/(day*Flower)).
    pub alpha: f64,
    /// Maximum infection rate (1/day).
    pub m1: f64,
    /// Maximum death rate (1/day).
    pub m2: f64,
    /// Epiphytic population threshold for invasion (CFU).
    pub a1: f64,
    /// Infected-flower threshold for accelerated death (Flower).
    pub a2: f64,
    /// Hill exponent of the invasion rate (dimensionless).
    pub n1: f64,
    /// Hill exponent of the death rate (dimensionless).
    pub n2: f64,
}

impl ModelParams {
    /// Reference parameter set used by the bundled configurations:
    /// a five-flower cluster with fast bee transport, slow ooze decay,
    /// and quadratic Hill switches at 10^6 CFU / 1 flower.
    pub fn baseline() -> Self {
        Self {
            n: 5.0,
            d1: 50.0,
            d2: 10.0,
            k: 1e6,
            eps: 10.0,
            r: 0.5,
            mu: 0.5,
            gamma: 0.0027,
            alpha: 1e8,
            m1: 1.0,
            m2: 1.0,
            a1: 1e6,
            a2: 1.0,
            n1: 2.0,
            n2: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 12] = [
            ("n", self.n),
            ("d1", self.d1),
            ("k", self.k),
            ("eps", self.eps),
            ("r", self.r),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("alpha", self.alpha),
            ("m1", self.m1),
            ("m2", self.m2),
            ("a1", self.a1),
            ("a2", self.a2),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        if !self.d2.is_finite() || self.d2 < 0.0 {
            return Err(Error::InvalidParam {
                name: "d2",
                value: self.d2,
                reason: "must be finite and non-negative",
            });
        }
        for (name, value) in [("n1", self.n1), ("n2", self.n2)] {
            if !value.is_finite() || value < 1.0 {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "Hill exponent must be finite and >= 1",
                });
            }
        }
        Ok(())
    }
}

/// The five compartments at one spatial location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    /// Epiphytic pathogen (CFU).
    pub b: f64,
    /// Ooze pathogen (CFU).
    pub o: f64,
    /// Susceptible flowers (Flower).
    pub s: f64,
    /// Infected flowers (Flower).
    pub i: f64,
    /// Removed flowers (Flower).
    pub r: f64,
}

impl PointState {
    /// Checks non-negativity of all compartments and the conservation
    /// identity s + i + r = n within [`CONSERVATION_RTOL`].
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        for (name, value) in [
            ("b", self.b),
            ("o", self.o),
            ("s", self.s),
            ("i", self.i),
            ("r", self.r),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::Domain(format!(
                    "point state component {name} = {value} must be finite and non-negative"
                )));
            }
        }
        let total = self.s + self.i + self.r;
        if (total - params.n).abs() > CONSERVATION_RTOL * params.n {
            return Err(Error::Domain(format!(
                "flower compartments sum to {total}, expected {} within {:e} relative",
                params.n, CONSERVATION_RTOL
            )));
        }
        Ok(())
    }
}

/// Per-compartment time derivatives of a [`PointState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRates {
    pub b: f64,
    pub o: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

/// Saturating Hill rate `m * (x/a)^n / (1 + (x/a)^n)`.
///
/// The result lies in `[0, m)`, is monotone non-decreasing in `x`, and
/// equals exactly `m/2` at `x = a`. Inputs with `x/a` below 1e-12 return 0
/// (the true value there is below 1e-12 * m, far under every tolerance in
/// this crate).
pub fn hill(x: f64, m: f64, a: f64, n: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("hill input x = {x} must be finite and >= 0")));
    }
    if !m.is_finite() || m <= 0.0 {
        return Err(Error::Domain(format!("hill max rate m = {m} must be finite and > 0")));
    }
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::Domain(format!("hill threshold a = {a} must be finite and > 0")));
    }
    if !n.is_finite() || n < 1.0 {
        return Err(Error::Domain(format!("hill exponent n = {n} must be finite and >= 1")));
    }
    Ok(hill_eval(x, m, a, n))
}

/// Unchecked Hill evaluation; the integrator hot path calls this directly.
/// Small integral exponents take the `powi` fast path.
#[inline]
pub(crate) fn hill_eval(x: f64, m: f64, a: f64, n: f64) -> f64 {
    let u = x / a;
    if u < HILL_CUTOFF {
        return 0.0;
    }
    let un = if n == 2.0 {
        u * u
    } else if n == 1.0 {
        u
    } else if n.fract() == 0.0 && n <= 8.0 {
        u.powi(n as i32)
    } else {
        u.powf(n)
    };
    if un.is_infinite() {
        m
    } else {
        m * un / (1.0 + un)
    }
}

/// Reaction rates shared by [`reaction_rhs`] and the grid solver.
///
/// `ds`, `di`, `dr` always sum to zero up to floating-point rounding:
/// the transfer terms `f(b)*s` and `g(i)*i` are each computed once and
/// reused with opposite signs.
#[inline]
pub(crate) fn reaction_terms(b: f64, o: f64, s: f64, i: f64, p: &ModelParams) -> PointRates {
    let capacity = p.k * (s + i) + p.eps;
    let invasion = if s > 0.0 { hill_eval(b, p.m1, p.a1, p.n1) * s } else { 0.0 };
    let death = if i > 0.0 { hill_eval(i, p.m2, p.a2, p.n2) * i } else { 0.0 };
    let ooze_uptake = p.mu * s * o;
    PointRates {
        b: p.r * b * (1.0 - b / capacity) + ooze_uptake,
        o: p.alpha * i - ooze_uptake - p.gamma * o,
        s: -invasion,
        i: invasion - death,
        r: death,
    }
}

/// Pointwise reaction terms of the model (diffusion excluded).
pub fn reaction_rhs(point: &PointState, params: &ModelParams) -> Result<PointRates> {
    params.validate()?;
    point.validate(params)?;
    Ok(reaction_terms(point.b, point.o, point.s, point.i, params))
}

/// A-priori solution bounds: every solution started under these constants
/// stays under them for all time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// Upper bound on the epiphytic pool (CFU).
    pub b_max: f64,
    /// Upper bound on the ooze pool (CFU).
    pub o_max: f64,
    /// Upper bound on each flower compartment (Flower); equals `n`.
    pub compartment_max: f64,
}

/// Computes the a-priori bounds from the parameters and the suprema of the
/// initial pathogen fields.
///
/// The ooze bound is `max(o0_max, alpha*n/gamma)`; the epiphytic bound is
/// the larger of `b0_max` and the attracting fixed point of the ooze-fed
/// logistic envelope,
/// `(k*n+eps)/2 * (1 + sqrt(1 + 4*mu*o_max / (r*(k*n+eps))))`.
pub fn a_priori_bounds(params: &ModelParams, b0_max: f64, o0_max: f64) -> Result<BoundConstants> {
    params.validate()?;
    for (name, value) in [("b0_max", b0_max), ("o0_max", o0_max)] {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Domain(format!(
                "{name} = {value} must be finite and non-negative"
            )));
        }
    }
    let o_max = o0_max.max(params.alpha * params.n / params.gamma);
    let kne = params.k * params.n + params.eps;
    let envelope = 0.5 * kne * (1.0 + (1.0 + 4.0 * params.mu * o_max / (params.r * kne)).sqrt());
    Ok(BoundConstants {
        b_max: b0_max.max(envelope),
        o_max,
        compartment_max: params.n,
    })
}

/// Result of checking the sufficient parameter constraints for guaranteed
/// travelling-wave existence, plus the minimum wave speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    /// `d2 <= d1`.
    pub d2_le_d1: bool,
    /// `n1 = n2 + 1` (exact for integer exponents, 1e-12 tolerance otherwise).
    pub exponent_link: bool,
    /// `m1 <= g(n)`, the death rate evaluated at a fully infected cluster.
    pub m1_le_g_n: bool,
    /// `alpha^n1 * m1 * n * (a2^n2 + n^n2) <= a1^n1 * m2 * gamma^n1`.
    pub ooze_inequality: bool,
    /// Conjunction of the four predicates above.
    pub all_satisfied: bool,
    /// Minimum wave speed `2*sqrt(d1*(r + mu*n))` (m/day).
    pub c_min: f64,
}

/// Tolerance for the exponent-link predicate on non-integer exponents.
const EXPONENT_LINK_TOL: f64 = 1e-12;

/// Evaluates the four sufficient constraints under which travelling-wave
/// solutions are guaranteed to exist, and the associated minimum speed.
pub fn check_wave_constraints(params: &ModelParams) -> Result<ConstraintReport> {
    params.validate()?;
    let d2_le_d1 = params.d2 <= params.d1;
    let integer_exponents = params.n1.fract() == 0.0 && params.n2.fract() == 0.0;
    let exponent_link = if integer_exponents {
        params.n1 == params.n2 + 1.0
    } else {
        (params.n1 - (params.n2 + 1.0)).abs() <= EXPONENT_LINK_TOL
    };
    let g_n = hill_eval(params.n, params.m2, params.a2, params.n2);
    let m1_le_g_n = params.m1 <= g_n;
    let lhs = params.alpha.powf(params.n1)
        * params.m1
        * params.n
        * (params.a2.powf(params.n2) + params.n.powf(params.n2));
    let rhs = params.a1.powf(params.n1) * params.m2 * params.gamma.powf(params.n1);
    let ooze_inequality = lhs <= rhs;
    let all_satisfied = d2_le_d1 && exponent_link && m1_le_g_n && ooze_inequality;
    Ok(ConstraintReport {
        d2_le_d1,
        exponent_link,
        m1_le_g_n,
        ooze_inequality,
        all_satisfied,
        c_min: min_wave_speed(params),
    })
}

/// Minimum travelling-wave speed `2*sqrt(d1*(r + mu*n))` in m/day.
pub fn min_wave_speed(params: &ModelParams) -> f64 {
    2.0 * (params.d1 * (params.r + params.mu * params.n)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_relative_eq, relative_eq};
    use proptest::prelude::*;

    fn params_n(n: f64) -> ModelParams {
        ModelParams {
            n,
            ..ModelParams::baseline()
        }
    }

    #[test]
    fn hill_zero_input_is_zero() {
        assert_eq!(hill(0.0, 1.0, 1e6, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn hill_at_threshold_is_exactly_half_max() {
        assert_eq!(hill(1e6, 1.0, 1e6, 2.0).unwrap(), 0.5);
        assert_eq!(hill(0.25, 0.7, 0.25, 3.7).unwrap(), 0.35);
    }

    #[test]
    fn hill_three_times_threshold_quadratic() {
        // (3)^2 / (1 + 9) = 0.9
        assert_relative_eq!(hill(3e6, 1.0, 1e6, 2.0).unwrap(), 0.9, max_relative = 1e-12);
    }

    #[test]
    fn hill_rejects_bad_inputs() {
        assert!(hill(-1.0, 1.0, 1.0, 2.0).is_err());
        assert!(hill(1.0, 0.0, 1.0, 2.0).is_err());
        assert!(hill(1.0, 1.0, -2.0, 2.0).is_err());
        assert!(hill(1.0, 1.0, 1.0, 0.5).is_err());
        assert!(hill(f64::NAN, 1.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn hill_saturates_at_huge_ratio() {
        // (x/a)^n overflows; the limit is m.
        let v = hill(1e300, 2.0, 1e-4, 5.0).unwrap();
        assert_eq!(v, 2.0);
    }

    proptest! {
        #[test]
        fn hill_monotone_and_below_max(
            x1 in 0.0..1e9f64,
            x2 in 0.0..1e9f64,
            m in 1e-3..10.0f64,
            a in 1e-3..1e9f64,
            n in 1.0..5.0f64,
        ) {
            let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
            let v_lo = hill(lo, m, a, n).unwrap();
            let v_hi = hill(hi, m, a, n).unwrap();
            prop_assert!(v_lo <= v_hi);
            prop_assert!(v_hi < m);
        }

        #[test]
        fn reaction_conserves_flower_total(
            b in 0.0..1e10f64,
            o in 0.0..1e11f64,
            s_frac in 0.0..1.0f64,
            i_frac in 0.0..1.0f64,
        ) {
            let p = params_n(5.0);
            let s = p.n * s_frac;
            let i = (p.n - s) * i_frac;
            let r = p.n - s - i;
            let rates = reaction_rhs(&PointState { b, o, s, i, r }, &p).unwrap();
            let scale = rates.s.abs() + rates.r.abs() + 1.0;
            prop_assert!((rates.s + rates.i + rates.r).abs() <= 4.0 * f64::EPSILON * scale);
        }

        #[test]
        fn bounds_monotone_in_initial_ooze(
            o0_a in 0.0..1e12f64,
            o0_b in 0.0..1e12f64,
        ) {
            let p = params_n(3.0);
            let (lo, hi) = if o0_a <= o0_b { (o0_a, o0_b) } else { (o0_b, o0_a) };
            let ba = a_priori_bounds(&p, 1e6, lo).unwrap();
            let bb = a_priori_bounds(&p, 1e6, hi).unwrap();
            prop_assert!(bb.o_max >= ba.o_max);
            prop_assert!(bb.b_max >= ba.b_max);
        }

        #[test]
        fn wave_speed_monotone(
            d1 in 1.0..100.0f64,
            r in 0.01..2.0f64,
            mu in 0.01..2.0f64,
            n in 1.0..10.0f64,
            bump in 0.01..1.0f64,
        ) {
            let base = ModelParams { d1, r, mu, n, ..ModelParams::baseline() };
            let c0 = min_wave_speed(&base);
            for p in [
                ModelParams { d1: d1 + bump, ..base },
                ModelParams { r: r + bump, ..base },
                ModelParams { mu: mu + bump, ..base },
                ModelParams { n: n + bump, ..base },
            ] {
                prop_assert!(min_wave_speed(&p) > c0);
            }
        }
    }

    #[test]
    fn disease_free_point_is_stationary() {
        let p = params_n(5.0);
        let rates = reaction_rhs(
            &PointState { b: 0.0, o: 0.0, s: p.n, i: 0.0, r: 0.0 },
            &p,
        )
        .unwrap();
        assert_eq!(rates, PointRates { b: 0.0, o: 0.0, s: 0.0, i: 0.0, r: 0.0 });
    }

    #[test]
    fn reaction_ooze_uptake_arithmetic() {
        // b = 0, o = 1e8, s = n = 3: only the ooze transfer and decay act.
        let p = ModelParams { n: 3.0, mu: 0.5, ..ModelParams::baseline() };
        let rates = reaction_rhs(
            &PointState { b: 0.0, o: 1e8, s: 3.0, i: 0.0, r: 0.0 },
            &p,
        )
        .unwrap();
        assert_relative_eq!(rates.b, 1.5e8, max_relative = 1e-14);
        assert_relative_eq!(rates.o, -1.5e8 - p.gamma * 1e8, max_relative = 1e-14);
        assert_eq!((rates.s, rates.i, rates.r), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reaction_rejects_invalid_state() {
        let p = params_n(5.0);
        assert!(reaction_rhs(&PointState { b: -1.0, o: 0.0, s: 5.0, i: 0.0, r: 0.0 }, &p).is_err());
        // conservation broken
        assert!(reaction_rhs(&PointState { b: 0.0, o: 0.0, s: 1.0, i: 0.0, r: 0.0 }, &p).is_err());
    }

    #[test]
    fn ooze_bound_from_secretion_decay_balance() {
        let p = ModelParams { alpha: 1e8, n: 3.0, gamma: 0.0027, ..ModelParams::baseline() };
        let b = a_priori_bounds(&p, 0.0, 0.0).unwrap();
        assert_relative_eq!(b.o_max, 3e8 / 0.0027, max_relative = 1e-12);
        assert_eq!(b.compartment_max, 3.0);
    }

    #[test]
    fn ooze_bound_keeps_larger_initial_supremum() {
        let p = params_n(3.0);
        let huge = 1e15;
        let b = a_priori_bounds(&p, 0.0, huge).unwrap();
        assert_eq!(b.o_max, huge);
    }

    #[test]
    fn epiphytic_bound_matches_hand_evaluation() {
        // Baseline parameters, b0_max = 1e6, o0_max = 0.
        let p = ModelParams::baseline();
        let b = a_priori_bounds(&p, 1e6, 0.0).unwrap();
        let o_max = p.alpha * p.n / p.gamma;
        let kne = p.k * p.n + p.eps;
        let expected = 0.5 * kne * (1.0 + (1.0 + 4.0 * p.mu * o_max / (p.r * kne)).sqrt());
        assert!(expected > 1e6, "envelope dominates the seed here");
        assert_relative_eq!(b.b_max, expected, max_relative = 1e-14);
    }

    #[test]
    fn baseline_params_fail_wave_constraints() {
        // n1 = n2 = 2 breaks the exponent link, and the ooze inequality
        // fails by many orders of magnitude.
        let report = check_wave_constraints(&ModelParams::baseline()).unwrap();
        assert!(report.d2_le_d1);
        assert!(!report.exponent_link);
        assert!(!report.ooze_inequality);
        assert!(!report.all_satisfied);
    }

    #[test]
    fn constructed_params_satisfy_all_constraints() {
        // Small alpha makes the ooze inequality hold:
        // alpha^3 * 0.1 * 3 * (1 + 9) = 3*alpha^3 <= (1e6)^3 * 1 * 0.5^3.
        let p = ModelParams {
            n: 3.0,
            d1: 50.0,
            d2: 10.0,
            gamma: 0.5,
            alpha: 1e5,
            m1: 0.1,
            m2: 1.0,
            a1: 1e6,
            a2: 1.0,
            n1: 3.0,
            n2: 2.0,
            ..ModelParams::baseline()
        };
        let report = check_wave_constraints(&p).unwrap();
        assert!(report.d2_le_d1);
        assert!(report.exponent_link);
        assert!(report.m1_le_g_n, "g(3) = 0.9 >= 0.1");
        assert!(report.ooze_inequality);
        assert!(report.all_satisfied);
    }

    #[test]
    fn faster_ooze_transport_fails_diffusivity_predicate() {
        let p = ModelParams { d2: 60.0, d1: 50.0, ..ModelParams::baseline() };
        let report = check_wave_constraints(&p).unwrap();
        assert!(!report.d2_le_d1);
        assert!(!report.all_satisfied);
    }

    #[test]
    fn exponent_link_tolerance_on_real_exponents() {
        let p = ModelParams { n1: 3.0 + 5e-13, n2: 2.0 + 1e-13, ..ModelParams::baseline() };
        assert!(check_wave_constraints(&p).unwrap().exponent_link);
        let q = ModelParams { n1: 3.0001, n2: 2.0, ..ModelParams::baseline() };
        assert!(!check_wave_constraints(&q).unwrap().exponent_link);
    }

    #[test]
    fn min_wave_speed_arithmetic() {
        let p = ModelParams { d1: 50.0, r: 0.5, mu: 0.5, n: 3.0, ..ModelParams::baseline() };
        assert_relative_eq!(min_wave_speed(&p), 20.0, max_relative = 1e-15);
        // Limits of the formula itself (not valid parameter sets).
        let zero_d = ModelParams { d1: 0.0, ..p };
        assert_eq!(min_wave_speed(&zero_d), 0.0);
        let zero_growth = ModelParams { r: 0.0, mu: 0.0, ..p };
        assert_eq!(min_wave_speed(&zero_growth), 0.0);
    }

    #[test]
    fn params_validation_catches_each_field() {
        assert!(ModelParams::baseline().validate().is_ok());
        assert!(ModelParams { n: 0.0, ..ModelParams::baseline() }.validate().is_err());
        assert!(ModelParams { d2: -1.0, ..ModelParams::baseline() }.validate().is_err());
        assert!(ModelParams { n1: 0.9, ..ModelParams::baseline() }.validate().is_err());
        assert!(ModelParams { gamma: f64::NAN, ..ModelParams::baseline() }.validate().is_err());
        // d2 = 0 is allowed.
        assert!(ModelParams { d2: 0.0, ..ModelParams::baseline() }.validate().is_ok());
    }

    #[test]
    fn hill_half_max_exact_even_for_awkward_exponents() {
        for n in [1.0, 1.5, 2.0, 3.25, 5.0] {
            let v = hill(7.5, 0.9, 7.5, n).unwrap();
            assert!(relative_eq!(v, 0.45, max_relative = 0.0), "n = {n}: {v}");
        }
    }
}
