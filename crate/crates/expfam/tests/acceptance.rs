//! The verification gate for the whole crate: every check the project
//! promises, at its stated tolerance and within its time budget, one
//! test per claim. Each prints a single PASS line with the measured
//! worst case (visible under `--nocapture`).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use expfam::config::ExperimentConfig;
use expfam::experiment::{self, RunData};
use expfam::families::{Example, ExpectationParam, Family, NaturalParam};
use expfam::linalg::Matrix;
use expfam::mixture::{mixture_bound, permutation_invariance_check, PriorSpec};
use expfam::online::{self, Mode};
use expfam::regression;
use expfam::regret::{self, IDENTITY_TOLERANCE};

fn row<'a>(
    report: &'a expfam::regret::RegretReport<f64>,
    name: &str,
) -> &'a expfam::regret::IdentityCheck<f64> {
    report
        .identities
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("no identity row {name}"))
}

fn bound_row<'a>(
    report: &'a expfam::regret::RegretReport<f64>,
    name: &str,
) -> &'a expfam::regret::BoundCheck<f64> {
    report
        .bounds
        .iter()
        .find(|b| b.name == name)
        .unwrap_or_else(|| panic!("no bound row {name}"))
}

#[test]
fn exact_identities_hold_across_families_modes_and_horizons() {
    let start = Instant::now();
    let lines = experiment::identity_sweep(40).unwrap();
    let elapsed = start.elapsed();

    assert!(lines.len() >= 200, "only {} configurations", lines.len());
    let worst = lines
        .iter()
        .map(|l| l.worst_residual)
        .fold(0.0f64, f64::max);
    for l in &lines {
        assert!(
            l.pass && l.worst_residual < IDENTITY_TOLERANCE,
            "{} residual {:.3e}",
            l.key,
            l.worst_residual
        );
    }
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "PASS identities: {} configurations, worst relative residual {worst:.3e}, {elapsed:?}",
        lines.len()
    );
}

#[test]
fn bernoulli_totals_match_the_gamma_closed_form_exhaustively() {
    let start = Instant::now();
    let family = Family::<f64>::bernoulli();
    let mu1 = ExpectationParam::new(vec![0.5]);

    // forward mode from the centered start with no prior weight; every
    // bit string up to length 14
    let (worst_total, worst_regret_gap, tightest_margin) = (1..=14u32)
        .into_par_iter()
        .flat_map(|t| (0u32..1 << t).into_par_iter().map(move |bits| (t, bits)))
        .map(|(t, bits)| {
            let examples: Vec<Example<f64>> = (0..t)
                .map(|i| Example::new(vec![f64::from(bits >> i & 1)]))
                .collect();
            let trace = online::run(&family, &mu1, 0.0, Mode::Forward, &examples).unwrap();
            let (closed_total, closed_regret) = regret::bernoulli_closed_form(&trace).unwrap();
            let direct_regret = trace.total_loss()
                - regret::offline_objective_value(&family, &mu1, 0.0, &examples).unwrap();
            let bound = regret::bernoulli_regret_bound::<f64>(t as u64);
            assert!(
                closed_regret <= bound + 1e-12,
                "T {t} bits {bits:b}: regret {closed_regret} above {bound}"
            );
            (
                (trace.total_loss() - closed_total).abs(),
                (direct_regret - closed_regret).abs(),
                bound - closed_regret,
            )
        })
        .reduce(
            || (0.0, 0.0, f64::INFINITY),
            |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.min(b.2)),
        );
    let elapsed = start.elapsed();

    assert!(worst_total < 1e-9, "worst total gap {worst_total:.3e}");
    assert!(worst_regret_gap < 1e-9);
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS closed form: 32766 bit strings, worst total gap {worst_total:.3e}, \
         regret bound margin ≥ {tightest_margin:.3}, {elapsed:?}"
    );
}

#[test]
fn gaussian_regret_is_the_rate_weighted_square_sum_and_obeys_the_log_bound() {
    let start = Instant::now();
    let mut worst_identity = 0.0f64;
    let mut log_bound_checks = 0u32;
    for seed in 0..100u64 {
        // zero start, mixed iid and boundary sequences, one and three
        // dimensional, horizons up to 100
        let dim = if seed % 4 == 3 { 3 } else { 1 };
        let family = Family::<f64>::gaussian(dim).unwrap();
        let sequence = if seed % 2 == 0 {
            format!("iid({})", vec!["0.3"; dim].join(","))
        } else {
            "adversarial_boundary(1.5)".to_string()
        };
        let spec = sequence.parse().unwrap();
        let trials = 1 + (seed as usize * 7) % 100;
        let examples = expfam::generate::generate(&family, &spec, seed, trials).unwrap();
        let mu1 = ExpectationParam::new(vec![0.0; dim]);
        let w = 0.2 + (seed as f64) * 0.028; // up to 3.0

        for mode in [Mode::Forward, Mode::IncrementalOffline] {
            let trace = online::run(&family, &mu1, w, mode, &examples).unwrap();
            let report = regret::report(&trace).unwrap();
            let (excess, log_bound) = regret::gaussian_bound(&trace).unwrap();

            if mode == Mode::Forward {
                let check = row(&report, "gaussian_forward_excess_exact");
                assert!(check.applicable);
                assert!(
                    check.relative_residual() < 1e-8,
                    "seed {seed}: residual {:.3e}",
                    check.relative_residual()
                );
                worst_identity = worst_identity.max(check.relative_residual());
            }
            // the schedule starts above 1 exactly when the log curve
            // applies; then regret ≤ excess ≤ the curve
            let eta1_inv = w + mode.rate_shift() as f64;
            assert_eq!(log_bound.is_some(), eta1_inv > 1.0 && excess.is_some());
            if let (Some(e), Some(lb)) = (excess, log_bound) {
                let regret = report.regret;
                assert!(regret <= e + 1e-9 * e.abs().max(1.0), "seed {seed} {mode}");
                assert!(e <= lb + 1e-9 * lb.abs().max(1.0), "seed {seed} {mode}");
                assert!(regret <= lb + 1e-9 * lb.abs().max(1.0), "seed {seed} {mode}");
                log_bound_checks += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    assert!(log_bound_checks >= 100, "only {log_bound_checks} bound checks");
    println!(
        "PASS square-sum exactness: 100 sequences × 2 modes, worst residual \
         {worst_identity:.3e}, {log_bound_checks} log-bound checks, {elapsed:?}"
    );
}

#[test]
fn gamma_chain_holds_per_trial_and_in_total() {
    let start = Instant::now();
    let family = Family::<f64>::gamma();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_chain_slack = f64::NEG_INFINITY;
    for seed in 0..100u64 {
        let theta_star = -rng.random_range(0.3..3.0);
        let spec = format!("iid({theta_star})").parse().unwrap();
        let trials = 5 + (seed as usize) % 60;
        let examples = expfam::generate::generate(&family, &spec, seed, trials).unwrap();
        let mu1 = ExpectationParam::new(vec![rng.random_range(0.4..2.0)]);
        let w = rng.random_range(1.0..3.0);

        let trace =
            online::run(&family, &mu1, w, Mode::IncrementalOffline, &examples).unwrap();
        for (t, (lhs, rhs)) in regret::gamma_per_trial_chain(&trace)
            .unwrap()
            .into_iter()
            .enumerate()
        {
            assert!(lhs <= rhs + 1e-12, "seed {seed} trial {}: {lhs} > {rhs}", t + 1);
            worst_chain_slack = worst_chain_slack.max(lhs - rhs);
        }
        let report = regret::report(&trace).unwrap();
        let total = bound_row(&report, "gamma_rate_sum_bound");
        assert!(total.applicable && total.holds_with_slack(1e-12), "seed {seed}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    println!(
        "PASS rate chain: 100 positive sequences, max per-trial overshoot \
         {worst_chain_slack:.3e}, {elapsed:?}"
    );
}

#[test]
fn regression_is_exact_in_forward_mode_and_obeys_the_log_bound() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut worst_forward = 0.0f64;
    let mut worst_incremental = 0.0f64;
    let mut worst_inverse_gap = 0.0f64;
    for run in 0..48 {
        let d = 1 + run % 8;
        let trials = 20 + (run * 13) % 181; // up to 200
        // scalar prior comfortably above the dimension, where the log
        // curve provably clears both modes
        let a = d as f64 + 0.5 + rng.random_range(0.0..1.0) * (2.0 * d as f64 + 0.5);
        let prior = Matrix::scaled_identity(d, a);
        let theta_star: Vec<f64> = (0..d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let spec = format!(
            "iid({})",
            theta_star
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        )
        .parse()
        .unwrap();
        let examples =
            expfam::generate::generate_labeled(d, &spec, run as u64, trials).unwrap();

        for mode in [Mode::Forward, Mode::IncrementalOffline] {
            let trace = regression::run(&prior, mode, &examples).unwrap();
            let report = regression::report(&trace).unwrap();

            if mode == Mode::Forward {
                let check = row(&report, "regression_forward_excess_exact");
                assert!(check.applicable && check.relative_residual() < 1e-8);
                worst_forward = worst_forward.max(check.relative_residual());
                assert!(bound_row(&report, "regression_excess_bound")
                    .holds_with_relative_slack(1e-9));
            } else {
                let check = row(&report, "regression_incremental_residual_exact");
                assert!(check.applicable && check.relative_residual() < 1e-8);
                worst_incremental = worst_incremental.max(check.relative_residual());
            }
            let log = bound_row(&report, "regression_log_bound");
            assert!(
                log.applicable && log.holds_with_relative_slack(1e-9),
                "d {d} a {a} {mode}: regret {} vs bound {}",
                log.quantity,
                log.bound
            );

            // the maintained rank-one inverse against fresh dense solves
            let drift = trace.final_state().inverse_drift().unwrap();
            assert!(drift < 1e-8, "maintained inverse drifted {drift:.3e}");
            let mut dense = prior.clone();
            for e in &examples {
                dense.add_outer(e.x(), 1.0);
            }
            let fresh = dense.inverse().unwrap();
            let gap = fresh.max_abs_diff(trace.final_state().cov_inv());
            assert!(gap < 1e-8, "d {d}: dense inverse gap {gap:.3e}");
            worst_inverse_gap = worst_inverse_gap.max(gap.max(drift));
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "PASS regression: 48 designs × 2 modes (d ≤ 8, T ≤ 200), worst residuals \
         forward {worst_forward:.3e} / incremental {worst_incremental:.3e}, \
         inverse agreement {worst_inverse_gap:.3e}, {elapsed:?}"
    );
}

#[test]
fn link_maps_are_mutually_inverse_with_consistent_derivatives() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let cases = [
        (Family::<f64>::bernoulli(), -3.9, 3.9),
        (Family::gaussian(1).unwrap(), -10.0, 10.0),
        (Family::gaussian(3).unwrap(), -10.0, 10.0),
        (Family::gamma(), -20.0, -0.1),
    ];
    let mut worst = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (family, lo, hi) in &cases {
        for _ in 0..1000 {
            let theta = NaturalParam::new(
                (0..family.dim())
                    .map(|_| rng.random_range(*lo..*hi))
                    .collect(),
            );
            let mu = family.link(&theta).unwrap();
            let back = family.inverse_link(&mu).unwrap();
            let (th, mv, bk) = (theta.as_slice(), mu.as_slice(), back.as_slice());
            for j in 0..family.dim() {
                let rel = (bk[j] - th[j]).abs() / th[j].abs().max(1.0);
                assert!(rel < 1e-10, "{} round trip {rel:.3e}", family.name());
                worst.0 = worst.0.max(rel);
            }

            // conjugacy pins the two potentials together pointwise
            let legendre = family.dual(&mu).unwrap() + family.cumulant(&theta).unwrap()
                - th.iter().zip(mv).map(|(a, b)| a * b).sum::<f64>();
            assert!(legendre.abs() < 1e-10);
            worst.1 = worst.1.max(legendre.abs());

            let hg = family.cumulant_hessian(&theta).unwrap();
            let hf = family.dual_hessian(&mu).unwrap();
            let id_gap = hf.mul_mat(&hg).max_abs_diff(&Matrix::identity(family.dim()));
            assert!(id_gap < 1e-8, "{} hessian product {id_gap:.3e}", family.name());
            worst.2 = worst.2.max(id_gap);

            let h = 1e-5;
            for j in 0..family.dim() {
                let mut tp = th.to_vec();
                let mut tm = th.to_vec();
                tp[j] += h;
                tm[j] -= h;
                let fd_link = (family.cumulant(&NaturalParam::new(tp)).unwrap()
                    - family.cumulant(&NaturalParam::new(tm)).unwrap())
                    / (2.0 * h);
                assert!((fd_link - mv[j]).abs() < 1e-6);
                worst.3 = worst.3.max((fd_link - mv[j]).abs());

                let mut mp = mv.to_vec();
                let mut mm = mv.to_vec();
                mp[j] += h;
                mm[j] -= h;
                let fd_inverse = (family.dual(&ExpectationParam::new(mp)).unwrap()
                    - family.dual(&ExpectationParam::new(mm)).unwrap())
                    / (2.0 * h);
                assert!((fd_inverse - th[j]).abs() < 1e-6);
                worst.3 = worst.3.max((fd_inverse - th[j]).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    println!(
        "PASS duality: 1000 points × {} parameterizations, round trip {:.3e}, \
         conjugacy {:.3e}, hessian product {:.3e}, finite differences {:.3e}, {elapsed:?}",
        cases.len(),
        worst.0,
        worst.1,
        worst.2,
        worst.3
    );
}

#[test]
fn mixture_value_coincides_with_forward_loss_and_ignores_order() {
    let start = Instant::now();
    let family = Family::<f64>::bernoulli();
    let mu1 = ExpectationParam::new(vec![0.5]);
    let prior = PriorSpec::jeffreys();

    let worst_gap = (1..=12u32)
        .into_par_iter()
        .flat_map(|t| (0u32..1 << t).into_par_iter().map(move |bits| (t, bits)))
        .map(|(t, bits)| {
            let examples: Vec<Example<f64>> = (0..t)
                .map(|i| Example::new(vec![f64::from(bits >> i & 1)]))
                .collect();
            let forward = online::run(&family, &mu1, 0.0, Mode::Forward, &examples)
                .unwrap()
                .total_loss();
            let mixed = mixture_bound(&family, &prior, 1.0, &examples).unwrap();
            let gap = (mixed - forward).abs();
            assert!(gap < 1e-7, "T {t} bits {bits:b}: gap {gap:.3e}");
            gap
        })
        .reduce(|| 0.0, f64::max);

    let mut worst_spread = 0.0f64;
    for t in 1..=8usize {
        for pattern in [0b10110100u32, 0b01011011] {
            let examples: Vec<Example<f64>> = (0..t)
                .map(|i| Example::new(vec![f64::from(pattern >> i & 1)]))
                .collect();
            let spread =
                permutation_invariance_check(&family, &prior, 1.0, &examples).unwrap();
            assert!(spread < 1e-8, "T {t}: spread {spread:.3e}");
            worst_spread = worst_spread.max(spread);
        }
    }
    let elapsed = start.elapsed();
    println!(
        "PASS mixture: 8190 bit strings coincide (worst gap {worst_gap:.3e}), \
         permutation spread ≤ {worst_spread:.3e}, {elapsed:?}"
    );
}

#[test]
fn total_loss_is_order_sensitive_while_the_final_mean_is_not() {
    let start = Instant::now();
    // the same two examples in both orders, through the full harness
    let outcomes: Vec<(f64, Vec<f64>)> = (0..=1u64)
        .map(|k| {
            let mut c = ExperimentConfig::default();
            c.set("family", "gaussian").unwrap();
            c.set("mode", "forward").unwrap();
            c.set("mu1", "0").unwrap();
            c.set("eta_b_inv", "1").unwrap();
            c.set("sequence", &format!("permutation(2,0;{k})")).unwrap();
            c.set("trials", "2").unwrap();
            let (data, report) = experiment::execute(&c).unwrap();
            let RunData::Density(trace) = data else {
                panic!("expected a density run")
            };
            assert!(report.all_pass());
            (report.online_total, trace.final_mu().as_slice().to_vec())
        })
        .collect::<Vec<_>>();

    let loss_gap = (outcomes[0].0 - outcomes[1].0).abs();
    let mean_gap = (outcomes[0].1[0] - outcomes[1].1[0]).abs();
    assert!(loss_gap > 1e-3, "orderings indistinguishable: {loss_gap:.3e}");
    assert!(mean_gap < 1e-12, "final means differ: {mean_gap:.3e}");
    let elapsed = start.elapsed();
    println!(
        "PASS order sensitivity: totals differ by {loss_gap:.6} \
         (that is 2/9), final means within {mean_gap:.3e}, {elapsed:?}"
    );
}
