//! The acceptance battery: eight criteria covering the exact-rate
//! identity, convergence of both rate constructions, the variance
//! algebra, the spectral oracle, Monte Carlo marginals, the
//! nonparametric entropy estimator, ensemble-derived rates, and
//! end-to-end determinism.
//!
//! Every numeric tolerance is pinned here. Runtimes are recorded per
//! criterion but are not pass/fail conditions; the suite as a whole is
//! sized for desk-scale hardware.

use serde::Serialize;
use std::time::Instant;
use thermodiff_core::{
    ensemble_stats, entropy_nn, psi_closed_form, rate_block, rate_conditional,
    rate_from_ensemble, sample_trajectories, streams, variance_total, EntropyEstimator,
    PhysicalParams, Scheme, SpatialGrid, SpectralState,
};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    /// The value the measurement is compared against.
    pub target: f64,
    /// The deviation actually observed.
    pub measured: f64,
    /// Largest acceptable deviation.
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: impl Into<String>, target: f64, measured: f64, tolerance: f64) -> CheckOutcome {
    CheckOutcome {
        name: name.into(),
        target,
        measured,
        tolerance,
        pass: measured <= tolerance,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: &'static str,
    pub description: &'static str,
    /// Target / measured / tolerance of the binding (tightest) check.
    pub target: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_ms: f64,
    pub checks: Vec<CheckOutcome>,
}

fn tightness(c: &CheckOutcome) -> f64 {
    if c.tolerance > 0.0 {
        c.measured / c.tolerance
    } else if c.measured <= 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    }
}

fn criterion(
    id: &'static str,
    description: &'static str,
    checks: Vec<CheckOutcome>,
    started: Instant,
) -> CriterionOutcome {
    let binding = checks
        .iter()
        .max_by(|a, b| tightness(a).total_cmp(&tightness(b)))
        .expect("every criterion has at least one check")
        .clone();
    CriterionOutcome {
        id,
        description,
        target: binding.target,
        measured: binding.measured,
        tolerance: binding.tolerance,
        pass: checks.iter().all(|c| c.pass),
        runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        checks,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceReport {
    pub version: &'static str,
    pub seed: u64,
    pub pass: bool,
    pub total_runtime_ms: f64,
    pub criteria: Vec<CriterionOutcome>,
}

/// One `id PASS/FAIL` line per criterion.
pub fn format_line(c: &CriterionOutcome) -> String {
    format!(
        "{} {} {} — measured {:.3e}, tolerance {:.3e} [{:.0} ms]",
        c.id,
        if c.pass { "PASS" } else { "FAIL" },
        c.description,
        c.measured,
        c.tolerance,
        c.runtime_ms
    )
}

fn log_uniform(u: f64, lo: f64, hi: f64) -> f64 {
    lo * (hi / lo).powf(u)
}

fn a1(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut worst_rate = 0.0f64;
    let mut worst_uncertainty = 0.0f64;
    for i in 0..1000u64 {
        let t = log_uniform(streams::uniform(seed, i, 0, 0), 1e-3, 1e3);
        let m = log_uniform(streams::uniform(seed, i, 0, 1), 1e-3, 1e3);
        let s = PhysicalParams::natural(t, m).unwrap().derive_scales();
        let via_scales = s.dp / (s.mass * s.dx0);
        worst_rate = worst_rate.max((via_scales - s.rate_exact).abs() / s.rate_exact);
        let half_hbar = s.hbar / 2.0;
        worst_uncertainty = worst_uncertainty.max((s.dx0 * s.dp - half_hbar).abs() / half_hbar);
    }
    criterion(
        "A1",
        "exact-rate identity dp/(m dx0) = 2 kB T / hbar over 1000 random (T, m)",
        vec![
            check("worst relative rate deviation", 0.0, worst_rate, 1e-12),
            check(
                "worst relative uncertainty-product deviation",
                0.0,
                worst_uncertainty,
                1e-12,
            ),
        ],
        started,
    )
}

fn a2(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let s = PhysicalParams::natural(1.0, 1.0).unwrap().derive_scales();

    let cond = rate_conditional(&s, 0, 1e-6).unwrap().rate;
    let block = rate_block(&s, 1, 1e-6).unwrap().rate;

    // both constructions stay at or below the exact rate over random (n, dt)
    let mut max_excess = f64::NEG_INFINITY;
    for i in 0..10_000u64 {
        let dt = log_uniform(streams::uniform(seed, i, 0, 0), 1e-9, 1e-1);
        let n = (streams::uniform(seed, i, 0, 1) * 1e6) as u64;
        let rc = rate_conditional(&s, n, dt).unwrap().rate;
        let rb = rate_block(&s, n.max(1), dt).unwrap().rate;
        max_excess = max_excess.max((rc - s.rate_exact) / s.rate_exact);
        max_excess = max_excess.max((rb - s.rate_exact) / s.rate_exact);
    }

    criterion(
        "A2",
        "both rate constructions converge to 2 and never exceed it",
        vec![
            check("conditional rate at dt = 1e-6", 2.0, (cond - 2.0).abs(), 1e-5),
            check("block rate at elapsed 1e-6", 2.0, (block - 2.0).abs(), 1e-5),
            check(
                "max relative excess over 1e4 random (n, dt)",
                0.0,
                max_excess,
                1e-12,
            ),
        ],
        started,
    )
}

fn a3(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut worst_sum = 0.0f64;
    let mut worst_factored = 0.0f64;
    for i in 0..10_000u64 {
        let temp = log_uniform(streams::uniform(seed, i, 0, 0), 1e-3, 1e3);
        let mass = log_uniform(streams::uniform(seed, i, 0, 1), 1e-3, 1e3);
        let t = log_uniform(streams::uniform(seed, i, 0, 2), 1e-3, 1e3);
        let s = PhysicalParams::natural(temp, mass).unwrap().derive_scales();
        let b = variance_total(&s, t).unwrap();
        let sum = b.quantum_static + b.quantum_drift + b.classical;
        let factored = (s.dx0 + s.dp * t / s.mass).powi(2);
        worst_sum = worst_sum.max((b.total - sum).abs() / b.total);
        worst_factored = worst_factored.max((b.total - factored).abs() / b.total);
    }
    criterion(
        "A3",
        "variance decomposition equals its factored square over 1e4 random (T, m, t)",
        vec![
            check("worst |total - component sum| / total", 0.0, worst_sum, 1e-12),
            check(
                "worst |total - factored form| / total",
                0.0,
                worst_factored,
                1e-12,
            ),
        ],
        started,
    )
}

fn a4() -> CriterionOutcome {
    let started = Instant::now();
    let s = PhysicalParams::natural(1.0, 1.0).unwrap().derive_scales();
    let mut checks = Vec::new();
    for &t in &[0.25, 1.0, 2.0] {
        let span = 40.0 * (s.dx0 + s.dp * t / s.mass);
        let grid = SpatialGrid::new(1 << 14, span).unwrap();
        let state = SpectralState::initialize(&s, grid).unwrap().evolve(t).unwrap();
        let m = state.moments();
        let b = variance_total(&s, t).unwrap();
        let analytic = b.quantum_static + b.quantum_drift;
        checks.push(check(
            format!("variance relative error at t = {t}"),
            analytic,
            (m.variance - analytic).abs() / analytic,
            1e-6,
        ));
        checks.push(check(
            format!("norm drift at t = {t}"),
            1.0,
            (m.norm - 1.0).abs(),
            1e-10,
        ));
        let mut max_err = 0.0f64;
        for (j, a) in state.amplitudes().iter().enumerate() {
            let exact = psi_closed_form(&s, grid.position(j), t).unwrap();
            max_err = max_err.max((a - exact).norm());
        }
        checks.push(check(
            format!("max pointwise amplitude error at t = {t}"),
            0.0,
            max_err,
            1e-8,
        ));
    }
    criterion(
        "A4",
        "spectral propagation matches the closed-form wavepacket",
        checks,
        started,
    )
}

fn a5(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let s = PhysicalParams::natural(1.0, 1.0).unwrap().derive_scales();
    let n = 1_000_000;
    let mut checks = Vec::new();
    for (idx, (scheme, target)) in [
        (Scheme::Full, 2.25),
        (Scheme::ClassicalOnly, 1.0),
        (Scheme::QuantumOnly, 1.25),
    ]
    .into_iter()
    .enumerate()
    {
        let run_seed = streams::derive_seed(seed, idx as u64);
        let e = sample_trajectories(&s, 0.1, 10, n, run_seed, scheme).unwrap();
        let stats = ensemble_stats(&e);
        let row = &stats.rows[10];
        checks.push(check(
            format!("{} sample variance at t = 1 within 3 SE", scheme.label()),
            target,
            (row.variance - target).abs(),
            3.0 * row.std_error,
        ));
    }
    criterion(
        "A5",
        "Monte Carlo marginal variances at t = 1 with 1e6 particles",
        checks,
        started,
    )
}

fn a6(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    // 1e5 draws from N(0, 0.25); closed-form entropy 0.5 ln(2 pi e / 4)
    let samples: Vec<f64> = (0..100_000)
        .map(|i| 0.5 * streams::standard_normal(seed, i, 0, 0))
        .collect();
    let h = entropy_nn(&samples, 4).unwrap();
    let target = 0.7257913526447274;
    criterion(
        "A6",
        "nearest-neighbor entropy of 1e5 Gaussian samples",
        vec![check(
            "absolute error vs closed form (nats)",
            target,
            (h - target).abs(),
            0.02,
        )],
        started,
    )
}

fn a7(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let s = PhysicalParams::natural(1.0, 1.0).unwrap().derive_scales();
    let n = 1_000_000;

    let full_seed = streams::derive_seed(seed, 10);
    let e = sample_trajectories(&s, 1e-3, 10, n, full_seed, Scheme::Full).unwrap();
    let rates = rate_from_ensemble(&e, EntropyEstimator::PluginGaussian).unwrap();
    let avg = rates.iter().map(|r| r.rate).sum::<f64>() / rates.len() as f64;

    let quantum_seed = streams::derive_seed(seed, 11);
    let q = sample_trajectories(&s, 1e-3, 2, n, quantum_seed, Scheme::QuantumOnly).unwrap();
    let q_rates = rate_from_ensemble(&q, EntropyEstimator::PluginGaussian).unwrap();

    criterion(
        "A7",
        "plug-in entropy rate from a sampled ensemble",
        vec![
            check(
                "full-scheme average rate over steps 0-9 within 5% of 2",
                2.0,
                (avg - 2.0).abs() / 2.0,
                0.05,
            ),
            check(
                "quantum-only step-0 rate stays below 0.1",
                0.0,
                q_rates[0].rate,
                0.1,
            ),
        ],
        started,
    )
}

fn run_battery(seed: u64) -> Vec<CriterionOutcome> {
    vec![
        a1(streams::derive_seed(seed, 101)),
        a2(streams::derive_seed(seed, 102)),
        a3(streams::derive_seed(seed, 103)),
        a4(),
        a5(streams::derive_seed(seed, 105)),
        a6(streams::derive_seed(seed, 106)),
        a7(streams::derive_seed(seed, 107)),
    ]
}

/// Numeric payload only: everything except runtimes. Byte equality of
/// this string is bit equality of every measured value.
fn fingerprint(criteria: &[CriterionOutcome]) -> String {
    #[derive(Serialize)]
    struct Entry<'a> {
        id: &'a str,
        checks: Vec<(&'a str, f64, f64, f64, bool)>,
    }
    let entries: Vec<Entry> = criteria
        .iter()
        .map(|c| Entry {
            id: c.id,
            checks: c
                .checks
                .iter()
                .map(|ch| (ch.name.as_str(), ch.target, ch.measured, ch.tolerance, ch.pass))
                .collect(),
        })
        .collect();
    serde_json::to_string(&entries).expect("fingerprint serialization cannot fail")
}

/// Run the full battery (twice — the second pass feeds the determinism
/// criterion) and assemble the report.
pub fn run_acceptance(seed: u64) -> AcceptanceReport {
    let started = Instant::now();
    let first = run_battery(seed);
    let rerun_started = Instant::now();
    let second = run_battery(seed);
    let identical = fingerprint(&first) == fingerprint(&second);

    let mut criteria = first;
    criteria.push(criterion(
        "A8",
        "re-running the battery with the same seed reproduces every byte",
        vec![check(
            "fingerprint mismatch count",
            0.0,
            if identical { 0.0 } else { 1.0 },
            0.0,
        )],
        rerun_started,
    ));

    AcceptanceReport {
        version: thermodiff_core::VERSION,
        seed,
        pass: criteria.iter().all(|c| c.pass),
        total_runtime_ms: started.elapsed().as_secs_f64() * 1e3,
        criteria,
    }
}
