//! Module invariants as reusable property checks over randomized small
//! instances (K ≤ 16), 200 cases each.

#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseResult, TestRng, TestRunner};

use risia::assignment::{assign_from_path, gray_code, random_assignment, remap_codebook, Assignment};
use risia::baseline::{exact_optimum, greedy_best, greedy_order, natural_order, random_order, three_opt, two_opt};
use risia::bench::{rows_from_csv, rows_to_csv, run_campaign_with_threads, CampaignConfig, MatrixSource, SolverKind};
use risia::codebook::{snr, Instance};
use risia::loss::{ber_from_snr_db, expected_loss, mismatch_loss, path_cost, LossMatrix};
use risia::perm::{is_permutation, Permutation};
use risia::rng;
use risia::solver::{
    build_layers_sized, mu_at, next_k_cate, sample_route, selection_probs, solve, CountMode, DistType, PairCounts,
    RouteContext, SolverParams, SolverReport,
};

use crate::common::*;

pub const CASES: u32 = 200;

pub type Outcome = Result<(), String>;

fn check<S: Strategy>(name: &str, strategy: S, test: impl Fn(S::Value) -> TestCaseResult) -> Outcome {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=6, 1usize..=6, 1usize..=3, 1u32..=3, any::<u64>()).prop_filter_map(
        "codebook too small",
        |(k, n, m, b, seed)| Instance::generate(k, n, m, b, seed).ok(),
    )
}

fn pow2_matrix() -> impl Strategy<Value = (LossMatrix, u64)> {
    (1u32..=4, 0usize..3, any::<u64>()).prop_map(|(m, d, seed)| (synth(d, 1 << m, seed), seed))
}

fn any_matrix(kmax: usize) -> impl Strategy<Value = (LossMatrix, u64)> {
    (2usize..=kmax, 0usize..3, any::<u64>()).prop_map(|(k, d, seed)| (synth(d, k, seed), seed))
}

fn permutation(k: usize) -> impl Strategy<Value = Permutation> {
    Just((0..k).collect::<Vec<_>>()).prop_shuffle().prop_map(|v| Permutation::new(v).unwrap())
}

// ---- channels and codebook ----

pub fn snr_invariant_under_common_phase_rotation() -> Outcome {
    check("phase rotation", (instance(), 0.0f64..std::f64::consts::TAU), |(inst, theta)| {
        let rot = Complex64::from_polar(1.0, theta);
        for ue in 0..inst.channels.k() {
            let base = inst.codebook.get(ue).phases();
            let rotated: Vec<Complex64> = base.iter().map(|p| p * rot).collect();
            let a = inst.channels.snr_for_phases(&base, ue).unwrap();
            let b = inst.channels.snr_for_phases(&rotated, ue).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(f64::MIN_POSITIVE), "{a} vs {b}");
        }
        Ok(())
    })
}

pub fn generation_is_a_pure_function_of_seed() -> Outcome {
    check("pure generation", (1usize..6, 2usize..6, 1usize..3, any::<u64>()), |(k, n, m, seed)| {
        let a = Instance::generate(k, n, m, 2, seed).unwrap();
        let b = Instance::generate(k, n, m, 2, seed).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        Ok(())
    })
}

pub fn doubling_power_doubles_snr() -> Outcome {
    check("snr linear in P", instance(), |inst| {
        let doubled = inst.channels.clone().with_power(2.0 * inst.channels.power()).unwrap();
        for ue in 0..inst.channels.k() {
            let cw = inst.codebook.get(ue);
            prop_assert_eq!(snr(&doubled, cw, ue).unwrap(), 2.0 * snr(&inst.channels, cw, ue).unwrap());
        }
        Ok(())
    })
}

// ---- loss model ----

pub fn mismatch_loss_is_scale_covariant() -> Outcome {
    check("scale covariance", (instance(), 0.01f64..100.0), |(inst, c)| {
        let k = inst.channels.k();
        for i in 0..k {
            let h: Vec<Complex64> = inst.channels.h_r(i).iter().map(|z| z * c.sqrt()).collect();
            let scaled = inst.channels.clone().with_h_r(i, h).unwrap();
            for j in 0..k {
                let a = mismatch_loss(&inst.channels, &inst.codebook, i, j).unwrap();
                let b = mismatch_loss(&scaled, &inst.codebook, i, j).unwrap();
                // d = |1 - ratio|: rounding is relative to the 1, not to d.
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a), "{a} vs {b}");
            }
        }
        Ok(())
    })
}

pub fn expected_loss_is_linear_in_q() -> Outcome {
    check("linear in q", (pow2_matrix(), 1e-9f64..0.5), |((m, seed), q)| {
        let a = random_assignment(m.k(), seed).unwrap();
        let one = expected_loss(&m, &a, q).unwrap();
        let two = expected_loss(&m, &a, 2.0 * q).unwrap();
        prop_assert!((two - 2.0 * one).abs() <= 1e-12 * two.max(1e-300));
        Ok(())
    })
}

pub fn path_cost_is_reversal_invariant() -> Outcome {
    check("reversal", any_matrix(16), |(m, seed)| {
        let m = m.symmetrize();
        let p = random_order(m.k(), seed);
        let fwd = path_cost(&m, &p).unwrap();
        let back = path_cost(&m, &p.reversed()).unwrap();
        prop_assert!((fwd - back).abs() <= 1e-12 * fwd.max(1.0));
        Ok(())
    })
}

pub fn ber_strictly_decreasing() -> Outcome {
    check("ber decreasing", (-10.0f64..14.0, 1e-3f64..6.0), |(a, step)| {
        prop_assert!(ber_from_snr_db(a) > ber_from_snr_db(a + step));
        Ok(())
    })
}

// ---- heuristic solver ----

pub fn sampled_routes_are_permutations() -> Outcome {
    let s = (any_matrix(16), any::<bool>(), 0.05f64..1.0, any::<bool>());
    check("valid routes", s, |((m, seed), type_two, mu, with_counts)| {
        let k = m.k();
        let layers = build_layers_sized(&m, [1, 2, 3]);
        let ctx = RouteContext {
            loss: &m,
            layers: &layers,
            dist: if type_two { DistType::TypeII } else { DistType::TypeI },
            tail: 4,
        };
        let mut counts = PairCounts::new(k);
        counts.add_route(random_order(k, seed).as_slice());
        let route = sample_route(&ctx, mu, with_counts.then_some(&counts), &mut rng::from_seed(seed));
        prop_assert!(is_permutation(&route));
        prop_assert_eq!(route.len(), k);
        Ok(())
    })
}

pub fn selection_probs_normalized_and_scale_free() -> Outcome {
    let s = (prop::collection::vec(0.0f64..1.0, 15), 0.05f64..1.0, 1e-3f64..1e3, 1usize..=15);
    check("selection probs", s, |(values, mu, scale, n_omega)| {
        let k = 16;
        let m = raw_matrix(k, &values).symmetrize();
        let scaled = LossMatrix::new(k, m.as_slice().iter().map(|x| x * scale).collect(), true).unwrap();
        let omega: Vec<usize> = (1..=n_omega).collect();
        let p = selection_probs(0, &omega, &m, mu);
        let ps = selection_probs(0, &omega, &scaled, mu);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (a, b) in p.iter().zip(&ps) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        Ok(())
    })
}

pub fn schedules_respect_floors() -> Outcome {
    let s = (6usize..=16, 0.2f64..1.0, 0.01f64..1.0, 0.0f64..0.3, 0usize..50, 1usize..100, 1usize..400);
    check("schedules", s, |(k, mu0, frac, sigma, z, k_min, k_cate0)| {
        let p = SolverParams {
            mu0,
            mu_min: mu0 * frac,
            sigma,
            z,
            k_min: k_min.min(k_cate0),
            k_cate0,
            ..SolverParams::for_k(k)
        };
        let mut kc = p.k_cate0;
        for t in 1..60 {
            prop_assert!(mu_at(&p, t) >= p.mu_min);
            kc = next_k_cate(kc, &p, t);
            prop_assert!(kc >= p.k_min);
        }
        Ok(())
    })
}

pub fn pair_counts_stay_symmetric() -> Outcome {
    let s = (
        2usize..=16,
        prop::collection::vec(any::<u64>(), 1..12),
        prop::collection::vec(0usize..3, 1..6),
    );
    check("count symmetry", s, |(k, seeds, modes)| {
        let all = [CountMode::Normal, CountMode::UpperLimit, CountMode::Intermediate];
        let mut c = PairCounts::new(k);
        for (i, s) in seeds.iter().enumerate() {
            c.add_route(random_order(k, *s).as_slice());
            c.apply_mode(all[modes[i % modes.len()]]);
            prop_assert!(c.is_symmetric());
            for u in 0..k {
                prop_assert_eq!(c.get(u, u), 0);
            }
        }
        Ok(())
    })
}

pub fn report_trace_monotone_and_cost_consistent() -> Outcome {
    check("monotone trace", any_matrix(16), |(m, seed)| {
        let r = solve(&m, &quick_params(m.k(), seed)).unwrap();
        prop_assert!(r.cost_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(is_permutation(r.best_pi.as_slice()));
        let direct = direct_path_cost(&m, r.best_pi.as_slice());
        prop_assert!((r.best_cost - direct).abs() <= 1e-12 * direct.max(1.0));
        Ok(())
    })
}

pub fn solver_is_seed_deterministic() -> Outcome {
    check("solver determinism", any_matrix(16), |(m, seed)| {
        let p = quick_params(m.k(), seed);
        let a = solve(&m, &p).unwrap().without_timing();
        let b = solve(&m, &p).unwrap().without_timing();
        prop_assert_eq!(a, b);
        Ok(())
    })
}

// ---- baselines ----

pub fn baselines_return_permutations_never_below_exact() -> Outcome {
    check("exact is a lower bound", any_matrix(10), |(m, seed)| {
        let k = m.k();
        let sym = m.symmetrize();
        let (opt_pi, opt) = exact_optimum(&sym).unwrap();
        let outputs = [
            natural_order(k),
            random_order(k, seed),
            greedy_order(&sym, seed as usize % k).unwrap(),
            greedy_best(&sym),
            two_opt(&sym, &random_order(k, seed), usize::MAX).unwrap(),
            three_opt(&sym, &random_order(k, seed), usize::MAX).unwrap(),
            solve(&m, &quick_params(k, seed)).unwrap().best_pi,
            opt_pi,
        ];
        for p in &outputs {
            prop_assert!(is_permutation(p.as_slice()));
            prop_assert!(opt <= path_cost(&sym, p).unwrap() + 1e-12);
        }
        Ok(())
    })
}

pub fn local_search_is_idempotent() -> Outcome {
    check("idempotent local search", any_matrix(16), |(m, seed)| {
        let sym = m.symmetrize();
        let k = sym.k();
        let two = two_opt(&sym, &random_order(k, seed), usize::MAX).unwrap();
        prop_assert_eq!(&two_opt(&sym, &two, usize::MAX).unwrap(), &two);
        let three = three_opt(&sym, &random_order(k, seed), usize::MAX).unwrap();
        prop_assert_eq!(&three_opt(&sym, &three, usize::MAX).unwrap(), &three);
        Ok(())
    })
}

// ---- assignment ----

pub fn gray_neighbours_differ_in_one_bit() -> Outcome {
    check("gray adjacency", (1u32..=16, any::<u64>()), |(m, k)| {
        let k = k % ((1u64 << m) - 1);
        let a = gray_code(k, m).unwrap();
        let b = gray_code(k + 1, m).unwrap();
        prop_assert_eq!((a ^ b).count_ones(), 1);
        Ok(())
    })
}

pub fn path_neighbours_get_hamming_one_labels() -> Outcome {
    check("path adjacency", (1u32..=4).prop_flat_map(|m| permutation(1 << m)), |pi| {
        let a = assign_from_path(&pi).unwrap();
        for w in pi.as_slice().windows(2) {
            prop_assert_eq!((a.label(w[0]) ^ a.label(w[1])).count_ones(), 1);
        }
        Ok(())
    })
}

pub fn expected_loss_matches_hamming_pair_sum() -> Outcome {
    check("hamming-1 objective", (pow2_matrix(), 1e-12f64..0.5), |((m, seed), q)| {
        let a = assign_from_path(&random_order(m.k(), seed)).unwrap();
        let got = expected_loss(&m, &a, q).unwrap();
        let want = brute_expected_loss(&m, a.labels(), q);
        prop_assert!((got - want).abs() <= 1e-12 * want.max(1e-300));
        Ok(())
    })
}

pub fn remap_preserves_codeword_multiset() -> Outcome {
    check("remap multiset", (1u32..=3, any::<u64>()), |(m, seed)| {
        let k = 1usize << m;
        let inst = Instance::generate(k, 4, 2, 2, seed).unwrap();
        let a = random_assignment(k, seed).unwrap();
        let remapped = remap_codebook(&inst.codebook, &a).unwrap();
        let levels = |b: &risia::codebook::Codebook| {
            let mut v: Vec<Vec<u32>> = b.codewords().iter().map(|c| c.levels().to_vec()).collect();
            v.sort();
            v
        };
        prop_assert_eq!(levels(&inst.codebook), levels(&remapped));
        Ok(())
    })
}

// ---- persistence and campaigns ----

pub fn emitted_files_round_trip() -> Outcome {
    check("file round trips", (pow2_matrix(), instance()), |((m, seed), inst)| {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        m.save(&path, "synthetic", Some(seed)).unwrap();
        let (back, meta) = LossMatrix::load(&path).unwrap();
        prop_assert_eq!(back.as_slice(), m.as_slice());
        prop_assert_eq!(meta.unwrap().seed, Some(seed));

        let report = solve(&m, &quick_params(m.k(), seed)).unwrap();
        prop_assert_eq!(SolverReport::from_json(&report.to_json()).unwrap(), report.clone());
        let pjson = serde_json::to_string(&report.best_pi).unwrap();
        prop_assert_eq!(serde_json::from_str::<Permutation>(&pjson).unwrap(), report.best_pi.clone());
        let a = assign_from_path(&report.best_pi).unwrap();
        prop_assert_eq!(Assignment::from_json(&a.to_json()).unwrap(), a);
        let p = quick_params(m.k(), seed);
        prop_assert_eq!(SolverParams::from_json(&p.to_json()).unwrap(), p);

        let text = inst.to_json().unwrap();
        prop_assert_eq!(Instance::from_json(&text).unwrap().to_json().unwrap(), text);
        Ok(())
    })
}

pub fn campaign_independent_of_thread_count() -> Outcome {
    check("campaign determinism", (any::<u64>(), 1usize..3, 0usize..4), |(seed, runs, src)| {
        let source = [MatrixSource::Miso, MatrixSource::Uniform, MatrixSource::Clustered, MatrixSource::Exploded][src];
        let patch = serde_json::json!({"n_shot": 30, "k_shot": 6, "n_cate": 40, "k_cate0": 12, "k_min": 6, "T": 2});
        let cfg = CampaignConfig {
            experiment: "prop".into(),
            k: vec![8],
            n: vec![6],
            m: vec![2],
            b: vec![2],
            bsc_snr_db: vec![0.0, 8.0],
            solvers: vec![SolverKind::Tsp, SolverKind::Random, SolverKind::TwoOpt],
            runs,
            seed,
            output_dir: ".".into(),
            source,
            solver_params: Some(patch.as_object().unwrap().clone()),
            record_timing: false,
        };
        let a = rows_to_csv(&run_campaign_with_threads(&cfg, 1).unwrap());
        let b = rows_to_csv(&run_campaign_with_threads(&cfg, 4).unwrap());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(rows_to_csv(&rows_from_csv(&a).unwrap()), a);
        prop_assert_eq!(CampaignConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        Ok(())
    })
}

pub const ALL: &[(&str, fn() -> Outcome)] = &[
    ("snr_invariant_under_common_phase_rotation", snr_invariant_under_common_phase_rotation),
    ("generation_is_a_pure_function_of_seed", generation_is_a_pure_function_of_seed),
    ("doubling_power_doubles_snr", doubling_power_doubles_snr),
    ("mismatch_loss_is_scale_covariant", mismatch_loss_is_scale_covariant),
    ("expected_loss_is_linear_in_q", expected_loss_is_linear_in_q),
    ("path_cost_is_reversal_invariant", path_cost_is_reversal_invariant),
    ("ber_strictly_decreasing", ber_strictly_decreasing),
    ("sampled_routes_are_permutations", sampled_routes_are_permutations),
    ("selection_probs_normalized_and_scale_free", selection_probs_normalized_and_scale_free),
    ("schedules_respect_floors", schedules_respect_floors),
    ("pair_counts_stay_symmetric", pair_counts_stay_symmetric),
    ("report_trace_monotone_and_cost_consistent", report_trace_monotone_and_cost_consistent),
    ("solver_is_seed_deterministic", solver_is_seed_deterministic),
    ("baselines_return_permutations_never_below_exact", baselines_return_permutations_never_below_exact),
    ("local_search_is_idempotent", local_search_is_idempotent),
    ("gray_neighbours_differ_in_one_bit", gray_neighbours_differ_in_one_bit),
    ("path_neighbours_get_hamming_one_labels", path_neighbours_get_hamming_one_labels),
    ("expected_loss_matches_hamming_pair_sum", expected_loss_matches_hamming_pair_sum),
    ("remap_preserves_codeword_multiset", remap_preserves_codeword_multiset),
    ("emitted_files_round_trip", emitted_files_round_trip),
    ("campaign_independent_of_thread_count", campaign_independent_of_thread_count),
];
