//! Closed-form variance schedule and entropy-rate constructions.
//!
//! The position variance of the thermally diffusing particle decomposes
//! into three parts: the static minimum-uncertainty width `dx0^2`, the
//! coherent drift `(dp t / m)^2`, and the classical diffusion term
//! `hbar t / m`. Because `dx0 dp = hbar / 2`, the three terms sum to the
//! perfect square `(dx0 + dp t / m)^2`, and the entropy of the resulting
//! Gaussian grows at a rate that approaches `2 kB T / hbar` from below.
//!
//! Two discrete rate constructions are provided:
//!
//! - `rate_conditional`: entropy gained in one step, `[h(n+1) - h(n)] / dt`;
//! - `rate_block`: entropy gained since the start, `[h(n) - h(0)] / (n dt)`.
//!
//! Both are bounded above by the exact rate (`ln(1+x) <= x`) and converge
//! to it as the elapsed time shrinks; their supremum over the whole
//! `(n, dt)` grid equals it. The dual limit `n -> inf, dt -> 0` taken
//! jointly does not exist, which is why everything here is exposed as a
//! curve over `(n, dt)` instead of a single number.

use crate::units::DerivedScales;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("variance must be positive, got {0}")]
    NonPositiveVariance(f64),
    #[error("dt must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("block rate needs step index n >= 1")]
    IndexBelowOne,
    #[error("grid point {index}: {source}")]
    GridPoint {
        index: usize,
        #[source]
        source: Box<EntropyError>,
    },
}

/// The three variance components at a given time and their total.
/// `total` is the component sum; it equals the factored form
/// `(dx0 + dp t / m)^2` to within a few ulps.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarianceBreakdown {
    /// Static width `dx0^2`.
    pub quantum_static: f64,
    /// Coherent spreading `(dp t / m)^2`.
    pub quantum_drift: f64,
    /// Classical diffusion `hbar t / m = 2 D t`.
    pub classical: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    ConditionalIncrement,
    BlockAverage,
    Exact,
}

impl RateMethod {
    pub fn label(self) -> &'static str {
        match self {
            RateMethod::ConditionalIncrement => "conditional_increment",
            RateMethod::BlockAverage => "block_average",
            RateMethod::Exact => "exact",
        }
    }
}

/// One point of a rate curve: the step index and step size it was
/// evaluated at, the rate in nats per unit time, and which construction
/// produced it.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateCurvePoint {
    pub n: u64,
    pub dt: f64,
    pub rate: f64,
    pub method: RateMethod,
}

fn check_time(t: f64) -> Result<f64, EntropyError> {
    if t >= 0.0 && t.is_finite() {
        Ok(t)
    } else {
        Err(EntropyError::NegativeTime(t))
    }
}

fn check_dt(dt: f64) -> Result<f64, EntropyError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(dt)
    } else {
        Err(EntropyError::NonPositiveDt(dt))
    }
}

/// Coherent variance `dx0^2 + (dp t / m)^2`.
pub fn variance_quantum(scales: &DerivedScales, t: f64) -> Result<f64, EntropyError> {
    let t = check_time(t)?;
    let drift = scales.dp * t / scales.mass;
    Ok(scales.dx0 * scales.dx0 + drift * drift)
}

/// Classical diffusion variance `2 D t = hbar t / m`.
pub fn variance_classical(scales: &DerivedScales, t: f64) -> Result<f64, EntropyError> {
    let t = check_time(t)?;
    Ok(2.0 * scales.diffusion_const * t)
}

/// Full breakdown of the position variance at time `t`.
pub fn variance_total(scales: &DerivedScales, t: f64) -> Result<VarianceBreakdown, EntropyError> {
    let t = check_time(t)?;
    let drift = scales.dp * t / scales.mass;
    let quantum_static = scales.dx0 * scales.dx0;
    let quantum_drift = drift * drift;
    let classical = 2.0 * scales.diffusion_const * t;
    Ok(VarianceBreakdown {
        quantum_static,
        quantum_drift,
        classical,
        total: quantum_static + quantum_drift + classical,
    })
}

/// Differential entropy of a Gaussian with the given variance,
/// `0.5 ln(2 pi e variance)`, in nats.
pub fn gaussian_entropy(variance: f64) -> Result<f64, EntropyError> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(EntropyError::NonPositiveVariance(variance));
    }
    let ln_2pi_e = (std::f64::consts::TAU * std::f64::consts::E).ln();
    Ok(0.5 * (ln_2pi_e + variance.ln()))
}

/// Per-step rate `[h(n+1) - h(n)] / dt` in closed form:
/// `ln(1 + dt v / (dx0 + n dt v)) / dt` with `v = dp / m`.
///
/// Strictly decreasing in `n` at fixed `dt`; tends to zero as `n` grows,
/// which is exactly why the joint limit over `(n, dt)` needs care.
pub fn rate_conditional(
    scales: &DerivedScales,
    n: u64,
    dt: f64,
) -> Result<RateCurvePoint, EntropyError> {
    let dt = check_dt(dt)?;
    let v = scales.drift_velocity();
    let x = dt * v / (scales.dx0 + n as f64 * dt * v);
    Ok(RateCurvePoint {
        n,
        dt,
        rate: x.ln_1p() / dt,
        method: RateMethod::ConditionalIncrement,
    })
}

/// Block-average rate `[h(n) - h(0)] / (n dt)` in closed form:
/// `ln(1 + (dp / (m dx0)) n dt) / (n dt)`. Depends on `n` and `dt` only
/// through the elapsed time `n dt`; strictly decreasing in it.
pub fn rate_block(scales: &DerivedScales, n: u64, dt: f64) -> Result<RateCurvePoint, EntropyError> {
    let dt = check_dt(dt)?;
    if n < 1 {
        return Err(EntropyError::IndexBelowOne);
    }
    let elapsed = n as f64 * dt;
    let x = scales.dp / (scales.mass * scales.dx0) * elapsed;
    Ok(RateCurvePoint {
        n,
        dt,
        rate: x.ln_1p() / elapsed,
        method: RateMethod::BlockAverage,
    })
}

/// The exact rate `2 kB T / hbar` wrapped as a curve point.
pub fn rate_exact_point(scales: &DerivedScales) -> RateCurvePoint {
    RateCurvePoint {
        n: 0,
        dt: 0.0,
        rate: scales.rate_exact,
        method: RateMethod::Exact,
    }
}

/// One row of a bound report: both estimator rates at a grid point and
/// their gaps below the exact rate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundReportRow {
    pub n: u64,
    pub dt: f64,
    pub rate_conditional: f64,
    pub rate_block: f64,
    pub rate_exact: f64,
    pub gap_conditional: f64,
    pub gap_block: f64,
}

/// Evaluate both rate constructions over a grid of `(n, dt)` points.
///
/// At `n = 0` the block construction has no elapsed time to average over;
/// the row carries its `n dt -> 0` limit `dp / (m dx0)` instead, which is
/// the supremum the curve converges to.
///
/// Errors from individual points are reported with the grid index
/// attached.
pub fn bound_report(
    scales: &DerivedScales,
    grid: &[(u64, f64)],
) -> Result<Vec<BoundReportRow>, EntropyError> {
    grid.iter()
        .enumerate()
        .map(|(index, &(n, dt))| {
            bound_row(scales, n, dt).map_err(|source| EntropyError::GridPoint {
                index,
                source: Box::new(source),
            })
        })
        .collect()
}

fn bound_row(scales: &DerivedScales, n: u64, dt: f64) -> Result<BoundReportRow, EntropyError> {
    let conditional = rate_conditional(scales, n, dt)?.rate;
    let block = if n >= 1 {
        rate_block(scales, n, dt)?.rate
    } else {
        check_dt(dt)?;
        scales.dp / (scales.mass * scales.dx0)
    };
    let exact = scales.rate_exact;
    Ok(BoundReportRow {
        n,
        dt,
        rate_conditional: conditional,
        rate_block: block,
        rate_exact: exact,
        gap_conditional: exact - conditional,
        gap_block: exact - block,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams;
    use crate::units::PhysicalParams;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn unit_scales() -> DerivedScales {
        PhysicalParams::natural(1.0, 1.0).unwrap().derive_scales()
    }

    /// Independent oracle: differential entropy by Simpson quadrature of
    /// -g ln g over [-20 sigma, 20 sigma].
    fn entropy_by_quadrature(variance: f64) -> f64 {
        let sigma = variance.sqrt();
        let (a, b) = (-20.0 * sigma, 20.0 * sigma);
        let n = 20_000; // intervals, even
        let h = (b - a) / n as f64;
        let integrand = |x: f64| {
            let g = (-x * x / (2.0 * variance)).exp()
                / (std::f64::consts::TAU * variance).sqrt();
            if g > 0.0 {
                -g * g.ln()
            } else {
                0.0
            }
        };
        let mut sum = integrand(a) + integrand(b);
        for j in 1..n {
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(a + j as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn gaussian_entropy_matches_quadrature_oracle() {
        // Frozen values computed from the quadrature oracle.
        assert_abs_diff_eq!(entropy_by_quadrature(0.25), 0.7257913526447274, epsilon = 1e-6);
        assert_abs_diff_eq!(entropy_by_quadrature(2.25), 1.824403641312837, epsilon = 1e-6);

        assert_abs_diff_eq!(
            gaussian_entropy(0.25).unwrap(),
            0.7257913526447274,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            gaussian_entropy(2.25).unwrap(),
            1.824403641312837,
            epsilon = 1e-12
        );
    }

    #[test]
    fn gaussian_entropy_is_zero_at_the_unit_log_argument() {
        let v = 1.0 / (std::f64::consts::TAU * std::f64::consts::E);
        assert_abs_diff_eq!(gaussian_entropy(v).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gaussian_entropy_rejects_non_positive_variance() {
        assert!(matches!(
            gaussian_entropy(0.0),
            Err(EntropyError::NonPositiveVariance(_))
        ));
        assert!(matches!(
            gaussian_entropy(-1.0),
            Err(EntropyError::NonPositiveVariance(_))
        ));
    }

    #[test]
    fn variance_components_at_unit_parameters() {
        let s = unit_scales();
        assert_eq!(variance_quantum(&s, 0.0).unwrap(), 0.25);
        assert_relative_eq!(variance_quantum(&s, 1.0).unwrap(), 1.25, max_relative = 1e-12);
        assert_relative_eq!(variance_quantum(&s, 2.0).unwrap(), 4.25, max_relative = 1e-12);

        assert_eq!(variance_classical(&s, 0.0).unwrap(), 0.0);
        assert_relative_eq!(variance_classical(&s, 2.0).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn variance_classical_for_si_electron() {
        let s = PhysicalParams::si(300.0, 9.109_383_7e-31)
            .unwrap()
            .derive_scales();
        assert_relative_eq!(
            variance_classical(&s, 1e-9).unwrap(),
            1.158e-13,
            max_relative = 1e-3
        );
    }

    #[test]
    fn variance_total_matches_both_routes() {
        let s = unit_scales();
        let b = variance_total(&s, 0.0).unwrap();
        assert_eq!(
            (b.quantum_static, b.quantum_drift, b.classical, b.total),
            (0.25, 0.0, 0.0, 0.25)
        );

        let b = variance_total(&s, 1.0).unwrap();
        assert_relative_eq!(b.quantum_static, 0.25, max_relative = 1e-12);
        assert_relative_eq!(b.quantum_drift, 1.0, max_relative = 1e-12);
        assert_relative_eq!(b.classical, 1.0, max_relative = 1e-12);
        assert_relative_eq!(b.total, 2.25, max_relative = 1e-12);

        let b = variance_total(&s, 3.0).unwrap();
        assert_relative_eq!(b.total, 12.25, max_relative = 1e-12);
        let factored = (s.dx0 + s.dp * 3.0 / s.mass).powi(2);
        assert_relative_eq!(b.total, factored, max_relative = 1e-12);
    }

    #[test]
    fn variance_ops_reject_negative_time() {
        let s = unit_scales();
        assert!(matches!(
            variance_quantum(&s, -1e-9),
            Err(EntropyError::NegativeTime(_))
        ));
        assert!(matches!(
            variance_classical(&s, -1.0),
            Err(EntropyError::NegativeTime(_))
        ));
        assert!(matches!(
            variance_total(&s, -1.0),
            Err(EntropyError::NegativeTime(_))
        ));
    }

    #[test]
    fn rate_conditional_examples() {
        let s = unit_scales();
        let r = rate_conditional(&s, 0, 1e-6).unwrap();
        assert_abs_diff_eq!(r.rate, 1.999998000002667, epsilon = 1e-9);
        assert_eq!(r.method, RateMethod::ConditionalIncrement);

        let r = rate_conditional(&s, 0, 0.5).unwrap();
        assert_relative_eq!(r.rate, 2.0f64.ln() / 0.5, max_relative = 1e-14);

        // rate decays to zero as n grows at fixed dt
        let mut last = f64::INFINITY;
        for n in [0u64, 10, 1_000, 100_000, 10_000_000] {
            let r = rate_conditional(&s, n, 1e-3).unwrap().rate;
            assert!(r < last);
            last = r;
        }
        assert!(last < 1e-3);
    }

    #[test]
    fn rate_block_examples() {
        let s = unit_scales();
        let block = rate_block(&s, 1, 1e-6).unwrap().rate;
        let cond = rate_conditional(&s, 0, 1e-6).unwrap().rate;
        assert_relative_eq!(block, cond, max_relative = 1e-14);

        let r = rate_block(&s, 1000, 1e-6).unwrap();
        assert_abs_diff_eq!(r.rate, 1.998002662673058, epsilon = 1e-9);

        // block rate depends only on the elapsed time n*dt
        let a = rate_block(&s, 5, 0.1).unwrap().rate;
        let b = rate_block(&s, 500_000, 1e-6).unwrap().rate;
        assert_relative_eq!(a, 2.0f64.ln() / 0.5, max_relative = 1e-12);
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn rate_ops_validate_inputs() {
        let s = unit_scales();
        assert!(matches!(
            rate_conditional(&s, 0, 0.0),
            Err(EntropyError::NonPositiveDt(_))
        ));
        assert!(matches!(
            rate_block(&s, 0, 1e-3),
            Err(EntropyError::IndexBelowOne)
        ));
        assert!(matches!(
            rate_block(&s, 1, -1.0),
            Err(EntropyError::NonPositiveDt(_))
        ));
    }

    #[test]
    fn rate_exact_point_carries_the_scale() {
        let s = unit_scales();
        let p = rate_exact_point(&s);
        assert_eq!(p.rate, 2.0);
        assert_eq!(p.method, RateMethod::Exact);

        let s = PhysicalParams::natural(2.5, 1.0).unwrap().derive_scales();
        assert_relative_eq!(rate_exact_point(&s).rate, 5.0, max_relative = 1e-12);

        let s = PhysicalParams::si(300.0, 9.109_383_7e-31)
            .unwrap()
            .derive_scales();
        assert_relative_eq!(rate_exact_point(&s).rate, 7.86e13, max_relative = 1e-3);
    }

    #[test]
    fn telescoping_identity_holds() {
        // Summed per-step increments equal the block total: the chain
        // h(n) - h(0) telescopes.
        let s = unit_scales();
        for &dt in &[1e-6, 1e-3, 0.1] {
            for &n in &[1u64, 7, 100] {
                let summed: f64 = (0..n)
                    .map(|j| rate_conditional(&s, j, dt).unwrap().rate * dt)
                    .sum();
                let block = rate_block(&s, n, dt).unwrap().rate * n as f64 * dt;
                assert_relative_eq!(summed, block, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn rates_never_exceed_the_exact_rate() {
        // 1e4 deterministic random (n, dt) pairs; ln(1+x) <= x makes both
        // constructions upper-bounded by 2 kB T / hbar.
        let s = unit_scales();
        let bound = s.rate_exact * (1.0 + 1e-12);
        for i in 0..10_000u64 {
            let dt = 1e-9 * (1e8f64).powf(streams::uniform(11, i, 0, 0));
            let n = (streams::uniform(11, i, 0, 1) * 1e6) as u64;
            assert!(rate_conditional(&s, n, dt).unwrap().rate <= bound);
            assert!(rate_block(&s, n.max(1), dt).unwrap().rate <= bound);
        }
    }

    #[test]
    fn block_rate_converges_from_below() {
        let s = unit_scales();
        for &elapsed in &[1e-2, 1e-4, 1e-6] {
            let n = 100u64;
            let dt = elapsed / n as f64;
            let rate = rate_block(&s, n, dt).unwrap().rate;
            let gap = s.rate_exact - rate;
            assert!(gap >= 0.0);
            assert!(gap <= s.rate_exact * s.rate_exact * elapsed / 2.0);
        }
    }

    #[test]
    fn block_rate_decreases_in_elapsed_time() {
        let s = unit_scales();
        let mut last = f64::INFINITY;
        for &elapsed in &[1e-6, 1e-4, 1e-2, 1.0, 100.0] {
            let rate = rate_block(&s, 1, elapsed).unwrap().rate;
            assert!(rate < last);
            last = rate;
        }
    }

    #[test]
    fn entropy_scaling_law() {
        for i in 0..100u64 {
            let v = 1e-6 * (1e12f64).powf(streams::uniform(13, i, 0, 0));
            let diff = gaussian_entropy(4.0 * v).unwrap() - gaussian_entropy(v).unwrap();
            assert_abs_diff_eq!(diff, 2.0f64.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn bound_report_small_elapsed_time() {
        let s = unit_scales();
        let rows = bound_report(&s, &[(0, 1e-8)]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].gap_conditional.abs() <= 1e-7);
        assert!(rows[0].gap_block.abs() <= 1e-7);
    }

    #[test]
    fn bound_report_large_elapsed_time() {
        let s = unit_scales();
        let rows = bound_report(&s, &[(1_000_000, 1e-3)]).unwrap();
        assert!(rows[0].rate_conditional < 0.01);
        assert!(rows[0].gap_conditional > 1.99 && rows[0].gap_conditional <= 2.0);
    }

    #[test]
    fn bound_report_attaches_grid_index_to_errors() {
        let s = unit_scales();
        let err = bound_report(&s, &[(0, 1e-3), (5, 0.0)]).unwrap_err();
        match err {
            EntropyError::GridPoint { index, source } => {
                assert_eq!(index, 1);
                assert!(matches!(*source, EntropyError::NonPositiveDt(_)));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn prop_conditional_rate_bounded_and_decreasing(
            dt in 1e-9f64..1e-1,
            n in 0u64..1_000_000,
        ) {
            let s = unit_scales();
            let here = rate_conditional(&s, n, dt).unwrap().rate;
            let next = rate_conditional(&s, n + 1, dt).unwrap().rate;
            prop_assert!(here <= s.rate_exact * (1.0 + 1e-12));
            prop_assert!(here >= 0.0);
            prop_assert!(next < here);
        }

        #[test]
        fn prop_variance_total_is_the_factored_square(
            t_exp in -3f64..3.0,
            temp_exp in -3f64..3.0,
            mass_exp in -3f64..3.0,
        ) {
            let t = 10f64.powf(t_exp);
            let s = PhysicalParams::natural(10f64.powf(temp_exp), 10f64.powf(mass_exp))
                .unwrap()
                .derive_scales();
            let b = variance_total(&s, t).unwrap();
            let sum = b.quantum_static + b.quantum_drift + b.classical;
            let factored = (s.dx0 + s.dp * t / s.mass).powi(2);
            prop_assert!((b.total - sum).abs() <= 1e-12 * b.total);
            prop_assert!((b.total - factored).abs() <= 1e-12 * b.total);
        }
    }
}
