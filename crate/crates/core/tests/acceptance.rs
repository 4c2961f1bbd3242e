//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! per checked property. Reference values come from the published experiment
//! tables this project reproduces.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use volterra_id_core::assembly::{beta_coeff, gamma_coeff, ExpansionSizes, GridScheme, NodeGrid};
use volterra_id_core::basis::BasisSet;
use volterra_id_core::quadrature::integrate_2d_tensor;
use volterra_id_core::signals::{
    forward_response, model1_input, model1_output_corrected, model1_output_printed, model2_input,
    GroundTruthKernels, NoiseSpec, SignalPair,
};
use volterra_id_core::solver::{
    identify_collocation, identify_lsm, predict, stability_experiment, synthesize_pair,
    IdentifyOptions, KernelExpansion, Method, StabilityOptions,
};
use volterra_id_core::QuadratureConfigF64;

fn cfg() -> QuadratureConfigF64 {
    QuadratureConfigF64::default()
}

fn opts() -> IdentifyOptions<f64> {
    IdentifyOptions::default()
}

/// Shared fading-model pair so the dense output grid is integrated once for
/// the whole suite.
fn model2_pair() -> &'static SignalPair<f64> {
    static PAIR: OnceLock<SignalPair<f64>> = OnceLock::new();
    PAIR.get_or_init(|| SignalPair::model2(&cfg()))
}

fn within_one_order(computed: f64, reference: f64) -> bool {
    computed >= reference / 10.0 && computed <= reference * 10.0
}

/// Residual floor for double precision; rows below it are only required to
/// stay small, not to keep decreasing.
const FLOOR: f64 = 1e-11;

struct RowCheck {
    failures: Vec<String>,
}

impl RowCheck {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, detail: String) {
        println!("  {} {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures.push(detail);
        }
    }

    fn finish(self, criterion: &str) {
        if self.failures.is_empty() {
            println!("{criterion}: PASS");
        } else {
            println!("{criterion}: FAIL");
            panic!("{criterion} failed:\n{}", self.failures.join("\n"));
        }
    }
}

#[test]
fn criterion_1_factorization_oracle() {
    let start = Instant::now();
    let pair = model2_pair();
    let basis = BasisSet::chebyshev(2, 1.0).unwrap();
    let grid = NodeGrid::uniform(GridScheme::UniformIncludingZero, 5, 1.0).unwrap();
    let tensor_cfg = cfg().with_oscillation(10.0);

    let mut worst: f64 = 0.0;
    for &t_k in grid.nodes() {
        for i in 0..2usize {
            for j in 0..2usize {
                let (bi, _) = beta_coeff(&basis, pair, i, t_k, &cfg()).unwrap();
                let (bj, _) = beta_coeff(&basis, pair, j, t_k, &cfg()).unwrap();
                let (full, _) = integrate_2d_tensor(
                    |s1, s2| {
                        basis.eval(i, s1).unwrap()
                            * basis.eval(j, s2).unwrap()
                            * model2_input(t_k - s1)
                            * model2_input(t_k - s2)
                    },
                    t_k,
                    &tensor_cfg,
                )
                .unwrap();
                worst = worst.max((gamma_coeff(bi, bj) - full).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    println!(
        "criterion 1 (factorized second-order entries vs tensor quadrature): \
         worst |product - tensor| = {worst:.3e}, runtime {elapsed:?}"
    );
    assert!(worst <= 1e-10, "worst deviation {worst:e} exceeds 1e-10");
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "runtime {elapsed:?} exceeds 5 s"
    );
    println!("criterion 1: PASS");
}

#[test]
fn criterion_2_periodic_model_reconstruction() {
    let kernels = GroundTruthKernels::<f64>::model1();
    let quad = cfg().with_oscillation(20.0);
    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let t = rng.gen_range(0.0..=1.0);
        let oracle = forward_response(&kernels, model1_input, t, &quad).unwrap();
        let closed = model1_output_corrected(t);
        worst = worst.max((oracle - closed).abs());
    }
    println!(
        "criterion 2 (corrected output is the exact series response): \
         worst |closed form - oracle| over 20 random t = {worst:.3e}"
    );
    assert!(worst <= 1e-9, "worst deviation {worst:e} exceeds 1e-9");

    // The printed/corrected gap is (100/40501) cos(20t) exp(-t): its
    // supremum sits at t = 0.
    let mut max_gap: f64 = 0.0;
    let mut argmax = f64::NAN;
    for k in 0..=1000 {
        let t = k as f64 / 1000.0;
        let gap = (model1_output_printed(t) - model1_output_corrected(t)).abs();
        if gap > max_gap {
            max_gap = gap;
            argmax = t;
        }
    }
    println!("  sup gap = {max_gap:.15e} at t = {argmax}");
    assert_eq!(argmax, 0.0, "gap supremum not attained at t = 0");
    assert!(
        (max_gap - 100.0 / 40501.0).abs() <= 1e-12,
        "sup gap {max_gap:e} differs from 100/40501"
    );
    println!("criterion 2: PASS");
}

#[test]
fn criterion_3_fading_model_collocation_table() {
    let start = Instant::now();
    let pair = model2_pair();
    let mut eps = Vec::new();
    for m in 3..=7usize {
        let report =
            identify_collocation(pair, ExpansionSizes::cube(m).unwrap(), &cfg(), &opts()).unwrap();
        eps.push((m, report.residual_max));
    }

    let mut rows = RowCheck::new();
    let windowed = [(3usize, 3.16e-5), (4, 9.85e-9)];
    for (m, reference) in windowed {
        let computed = eps.iter().find(|(mm, _)| *mm == m).unwrap().1;
        rows.check(
            within_one_order(computed, reference),
            format!("m={m}: computed {computed:.3e} within one order of reference {reference:.2e}"),
        );
    }
    for (m, computed) in eps.iter().filter(|(m, _)| *m >= 6) {
        rows.check(
            *computed <= 1e-10,
            format!("m={m}: computed {computed:.3e} <= 1e-10 (double-precision floor regime)"),
        );
    }
    for pair_ in eps.windows(2) {
        let (m_prev, e_prev) = pair_[0];
        let (m_next, e_next) = pair_[1];
        rows.check(
            e_next <= e_prev.max(FLOOR),
            format!("m={m_prev}->{m_next}: {e_prev:.3e} -> {e_next:.3e} nonincreasing down to the floor"),
        );
    }
    let elapsed = start.elapsed();
    println!("  runtime {elapsed:?}");
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "runtime {elapsed:?} exceeds 60 s"
    );
    rows.finish("criterion 3");
}

#[test]
fn criterion_4_periodic_model_collocation_table() {
    let pair = SignalPair::<f64>::model1_corrected();
    let mut eps = Vec::new();
    for m in [3usize, 4, 5, 6, 7, 8, 10] {
        let report =
            identify_collocation(&pair, ExpansionSizes::cube(m).unwrap(), &cfg(), &opts()).unwrap();
        eps.push((m, report.residual_max));
    }

    let mut rows = RowCheck::new();
    let windowed = [(3usize, 1.41e-2), (4, 1.14e-6), (5, 4.72e-9)];
    for (m, reference) in windowed {
        let computed = eps.iter().find(|(mm, _)| *mm == m).unwrap().1;
        rows.check(
            within_one_order(computed, reference),
            format!("m={m}: computed {computed:.3e} within one order of reference {reference:.2e}"),
        );
    }
    for (m, computed) in eps.iter().filter(|(m, _)| *m >= 7) {
        rows.check(
            *computed <= 1e-10,
            format!("m={m}: computed {computed:.3e} <= 1e-10 (double-precision floor regime)"),
        );
    }
    for pair_ in eps.windows(2) {
        let (m_prev, e_prev) = pair_[0];
        let (m_next, e_next) = pair_[1];
        rows.check(
            e_next <= e_prev.max(FLOOR),
            format!("m={m_prev}->{m_next}: {e_prev:.3e} -> {e_next:.3e} nonincreasing down to the floor"),
        );
    }
    rows.finish("criterion 4");
}

#[test]
fn criterion_5_least_squares_tables() {
    let model1 = SignalPair::<f64>::model1_corrected();
    let model2 = model2_pair();
    let mut rows = RowCheck::new();

    // Periodic model, m = 3: one reference for all three grid multipliers.
    let mut model1_m3 = Vec::new();
    for mult in [2usize, 5, 10] {
        let sizes = ExpansionSizes::cube(3).unwrap();
        let report =
            identify_lsm(&model1, sizes, sizes.column_count() * mult, &cfg(), &opts()).unwrap();
        rows.check(
            within_one_order(report.residual_max, 8.07e-4),
            format!(
                "periodic m=3 multiplier={mult}: computed {:.3e} within one order of 8.07e-4",
                report.residual_max
            ),
        );
        model1_m3.push(report.residual_max);
    }
    // Insensitivity to the multiplier at one significant digit, matching the
    // identical reference rows.
    let one_digit: Vec<String> = model1_m3.iter().map(|&e| format!("{e:.0e}")).collect();
    let spread = model1_m3.iter().cloned().fold(f64::MIN, f64::max)
        / model1_m3.iter().cloned().fold(f64::MAX, f64::min);
    rows.check(
        one_digit.windows(2).all(|w| w[0] == w[1]) && spread <= 1.25,
        format!(
            "periodic m=3: multiplier-insensitive at one significant digit ({}; max/min = {spread:.4})",
            one_digit.join(", ")
        ),
    );

    // Fading model, m = 3: per-multiplier references.
    for (mult, reference) in [(2usize, 2.38e-6), (5, 2.63e-6), (10, 3.48e-6)] {
        let sizes = ExpansionSizes::cube(3).unwrap();
        let report =
            identify_lsm(model2, sizes, sizes.column_count() * mult, &cfg(), &opts()).unwrap();
        rows.check(
            within_one_order(report.residual_max, reference),
            format!(
                "fading m=3 multiplier={mult}: computed {:.3e} within one order of {reference:.2e}",
                report.residual_max
            ),
        );
    }
    rows.finish("criterion 5");
}

#[test]
fn criterion_6_stability_tables() {
    let pair = model2_pair();
    let sizes = ExpansionSizes::cube(3).unwrap();
    let deltas = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let stab_opts = StabilityOptions::<f64>::default();

    let mut rows = RowCheck::new();
    for (method, lsm_nodes, references, label) in [
        (
            Method::Collocation,
            None,
            [1.729e-2, 2.71e-3, 2.56e-4, 7.54e-5, 1.66e-5],
            "collocation",
        ),
        (
            Method::LeastSquares,
            Some(sizes.column_count() * 5),
            [6.28e-3, 5.11e-4, 6.02e-5, 5.36e-6, 2.64e-6],
            "least squares",
        ),
    ] {
        let mut means = Vec::new();
        for &delta in &deltas {
            let noise = NoiseSpec::new(delta, 10, 42).unwrap();
            let outcome =
                stability_experiment(pair, method, sizes, lsm_nodes, &noise, &cfg(), &stab_opts)
                    .unwrap();
            means.push(outcome.mean_residual);
        }
        // Factor-of-5 agreement at the two largest noise levels.
        for (i, reference) in references.iter().take(2).enumerate() {
            let ratio = means[i] / reference;
            rows.check(
                (0.2..=5.0).contains(&ratio),
                format!(
                    "{label} delta={:.0e}: mean {:.3e} within factor 5 of {reference:.3e} (ratio {ratio:.2})",
                    deltas[i], means[i]
                ),
            );
        }
        // Nonincreasing means through delta = 1e-4, trend only below.
        for i in 0..means.len() - 1 {
            rows.check(
                means[i + 1] <= means[i],
                format!(
                    "{label} delta {:.0e} -> {:.0e}: mean {:.3e} -> {:.3e} nonincreasing",
                    deltas[i],
                    deltas[i + 1],
                    means[i],
                    means[i + 1]
                ),
            );
        }
    }
    rows.finish("criterion 6");
}

#[test]
fn criterion_7_null_space_invariance() {
    let pair = model2_pair();
    let sizes = ExpansionSizes::cube(3).unwrap();
    let report = identify_collocation(pair, sizes, &cfg(), &opts()).unwrap();
    let base = report.expansion;

    let mut coefficients = Vec::new();
    coefficients.extend_from_slice(base.first_order());
    for i in 0..3 {
        for j in 0..3 {
            coefficients.push(base.second_order().at(i, j));
        }
    }
    let eta = 0.1;
    coefficients[sizes.first + 1] += eta; // c_01
    coefficients[sizes.first + 3] -= eta; // c_10
    let perturbed =
        KernelExpansion::from_coefficients(&coefficients, sizes, base.basis().clone()).unwrap();

    let mut worst: f64 = 0.0;
    for k in 0..=50 {
        let t = k as f64 / 50.0;
        let a = predict(&base, pair, t, &cfg()).unwrap();
        let b = predict(&perturbed, pair, t, &cfg()).unwrap();
        worst = worst.max((a - b).abs());
    }
    let norm_base = base.coefficient_norm();
    let norm_perturbed = perturbed.coefficient_norm();
    println!(
        "criterion 7 (antisymmetric perturbation, eta = {eta}): worst prediction change {worst:.3e}, \
         coefficient norm {norm_base:.6} -> {norm_perturbed:.6}"
    );
    assert!(worst <= 1e-12, "prediction changed by {worst:e}");
    assert!(
        norm_perturbed > norm_base,
        "coefficient norm did not increase"
    );
    println!("criterion 7: PASS");
}

#[test]
fn criterion_8_round_trip_in_span() {
    // K1 = B0 + B1 and K2 = B0 (x) B0 lie inside the size-2 basis span, so
    // identification must reproduce the generated output to solver accuracy.
    let sizes = ExpansionSizes::cube(2).unwrap();
    let basis = BasisSet::chebyshev(sizes.beta_count(), 1.0).unwrap();
    let mut coefficients = vec![0.0; sizes.column_count()];
    coefficients[0] = 1.0; // a_0
    coefficients[1] = 1.0; // a_1
    coefficients[sizes.first] = 1.0; // c_00
    let truth = KernelExpansion::from_coefficients(&coefficients, sizes, basis).unwrap();
    let pair = synthesize_pair(
        truth,
        Arc::new(|t: f64| model2_input(t)),
        10.0,
        "in-span",
        &cfg(),
    )
    .unwrap();

    let report = identify_collocation(&pair, sizes, &cfg(), &opts()).unwrap();
    println!(
        "criterion 8 (in-span round trip): node_residual_max {:.3e}, dense residual {:.3e}",
        report.node_residual_max, report.residual_max
    );
    assert!(
        report.node_residual_max <= 1e-10,
        "node residual {:e} exceeds 1e-10",
        report.node_residual_max
    );
    assert!(
        report.residual_max <= 1e-8,
        "dense residual {:e} exceeds 1e-8",
        report.residual_max
    );
    println!("criterion 8: PASS");
}
