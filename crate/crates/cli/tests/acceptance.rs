//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Run with `cargo test -p trendfit-cli --test acceptance -- --nocapture`
//! to see the lines; tests share a lock so timing-sensitive checks do not
//! fight for cores.

use std::sync::Mutex;
use std::time::Instant;

use trendfit::ir::{pav_solve, pdas_ir_init, pdas_ir_solve, pdas_ir_solve_with_partition};
use trendfit::oracle::{dual_cd_tf, exhaustive_tf, kkt_check_ir, OracleConfig};
use trendfit::tf::{
    partition_update_standard, ssm, tf_solve_plain, tf_solve_sf2, tf_solve_sf2_traced,
    tf_solve_sf2_with_partition, Sf2Config,
};
use trendfit::{
    objective_tf, BlockPartition, IrProblem, Penalty, SignPartition, SolveStatus, TfProblem,
};
use trendfit_cli::gen::{generate, perturb, GenKind, GenSpec};
use trendfit_cli::grid::{run_grid, ExperimentGrid, Variant};
use trendfit_cli::rng::{derive_seed, PortableRng};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn median_usize(values: &mut [usize]) -> f64 {
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid] as f64
    } else {
        0.5 * (values[mid - 1] + values[mid]) as f64
    }
}

fn median_f64(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

#[test]
fn criterion_1_pav_pdas_equivalence() {
    let _guard = serial();
    let clock = Instant::now();
    let mut rng = PortableRng::new(1001);
    for trial in 0..1000 {
        let n = 1 + rng.below(500);
        let style = rng.below(3);
        let y: Vec<f64> = (0..n)
            .map(|i| match style {
                0 => rng.uniform_in(0.0, 10.0),
                1 => i as f64 * 0.1 + rng.normal(0.0, 2.0),
                _ => rng.normal(0.0, 5.0),
            })
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.1, 10.0)).collect();
        let p = IrProblem::new(y, w).unwrap();
        let (pav_theta, _) = pav_solve(&p);
        let (pdas_theta, z, _) = pdas_ir_solve(&p, None).unwrap();
        assert!(
            max_abs_diff(&pav_theta, &pdas_theta) <= 1e-9,
            "trial {trial}: solvers disagree"
        );
        assert!(kkt_check_ir(&p, &pdas_theta, &z, 1e-8), "trial {trial}: KKT failed");
        if n >= 2 {
            // PAV returns no dual; its fit must still pass with the PDAS dual
            assert!(kkt_check_ir(&p, &pav_theta, &z, 1e-7), "trial {trial}: PAV fit KKT");
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.1}s, budget 30s");
    println!("criterion 1 (PAV/PDAS equivalence, 1000 instances): PASS ({elapsed:.1}s)");
}

#[test]
fn criterion_2_six_point_instance() {
    let _guard = serial();
    let p = IrProblem::with_unit_weights(vec![6.0, 4.0, 2.0, 9.0, 11.0, 4.0]).unwrap();
    let expected = [4.0, 4.0, 4.0, 8.0, 8.0, 8.0];
    let (pav_theta, pav_report) = pav_solve(&p);
    assert_eq!(pav_theta, expected);
    assert_eq!(pav_report.merge_count, 4);
    let (pdas_theta, _, pdas_report) = pdas_ir_solve(&p, None).unwrap();
    assert_eq!(pdas_theta, expected);
    assert_eq!(pdas_report.merge_count, 4);
    println!("criterion 2 (six-point instance, 4 merges each): PASS");
}

#[test]
fn criterion_3_linear_work_bound() {
    let _guard = serial();
    let clock = Instant::now();
    let mut times_small = Vec::new();
    let mut times_large = Vec::new();
    for rep in 0..5u64 {
        for &(n, bucket) in &[(100_000usize, 0usize), (200_000, 1)] {
            let y = generate(&GenSpec { kind: GenKind::LinearNoise, n, seed: 300 + rep })
                .unwrap();
            let p = IrProblem::with_unit_weights(y).unwrap();
            let start = Instant::now();
            let (_, _, report) = pdas_ir_solve(&p, None).unwrap();
            let dt = start.elapsed().as_secs_f64();
            assert_eq!(report.status, SolveStatus::Optimal);
            assert!(
                report.merge_count + report.split_count <= 2 * (n - 1),
                "work bound violated at n={n}"
            );
            if bucket == 0 {
                times_small.push(dt);
            } else {
                times_large.push(dt);
            }
        }
    }
    let ratio = median_f64(&mut times_large) / median_f64(&mut times_small);
    assert!(ratio <= 2.5, "doubling n scaled time by {ratio:.2} > 2.5");
    let elapsed = clock.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.1}s, budget 60s");
    println!(
        "criterion 3 (work bound and linear scaling, ratio {ratio:.2}): PASS ({elapsed:.1}s)"
    );
}

#[test]
fn criterion_4_dual_monotonicity() {
    let _guard = serial();
    let mut rng = PortableRng::new(404);
    for trial in 0..100 {
        let n = 2 + rng.below(199);
        let y: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 5.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.2, 5.0)).collect();
        let p = IrProblem::new(y, w).unwrap();
        let mut state = pdas_ir_init(&p, &BlockPartition::singletons(n)).unwrap();
        let mut previous = state.reconstruct_z(&p);
        while state.merge_pass() {
            let current = state.reconstruct_z(&p);
            for (i, (&now, &before)) in current.iter().zip(&previous).enumerate() {
                assert!(
                    now >= before - 1e-12,
                    "trial {trial}: z[{i}] fell from {before} to {now}"
                );
                assert!(now >= -1e-12, "trial {trial}: z[{i}] = {now}");
            }
            previous = current;
        }
    }
    println!("criterion 4 (dual monotonicity from singleton starts): PASS");
}

#[test]
fn criterion_5_cycle_reproduction() {
    let _guard = serial();
    let clock = Instant::now();
    let p = TfProblem::new(
        vec![603.0, 996.0, 502.0, 19.0, 56.0, 139.0],
        100.0,
        2,
        Penalty::L1,
    )
    .unwrap();
    let start = SignPartition::from_sets(4, &[1, 2, 3], &[0], &[]).unwrap();

    // frozen rational iterates of the published table
    let golden_dtheta: [&[f64]; 4] = [
        &[13.0, -689.0, 820.0, -254.0],
        &[0.0, 0.0, 4227.0 / 38.0, 0.0],
        &[-787.0, 520.0, -16.0, 0.0],
        &[-887.0 / 5.0, 0.0, 0.0, 0.0],
    ];
    let golden_z: [&[f64]; 4] = [
        &[-1.0, 1.0, 1.0, 1.0],
        &[-5293.0 / 2280.0, -482.0 / 475.0, 1.0, 5201.0 / 5700.0],
        &[-1.0, -1.0, 1.0, 91.0 / 100.0],
        &[-1.0, 127.0 / 125.0, 371.0 / 125.0, 943.0 / 500.0],
    ];
    let mut part = start.clone();
    for k in 0..4 {
        let res = ssm(&p, &part).unwrap();
        assert!(max_abs_diff(&res.d_theta, golden_dtheta[k]) <= 1e-9, "D theta at k={k}");
        assert!(max_abs_diff(&res.point.z, golden_z[k]) <= 1e-9, "z at k={k}");
        part = partition_update_standard(&part, &res.violations);
    }
    assert_eq!(part, start, "period-4 cycle must close");

    let (_, report) = tf_solve_plain(&p, Some(&start), 800).unwrap();
    assert_eq!(report.status, SolveStatus::Cycled);
    assert_eq!(report.iterations, 4);
    let elapsed = clock.elapsed().as_secs_f64();
    assert!(elapsed < 1.0, "took {elapsed:.2}s, budget 1s");
    println!("criterion 5 (cycle reproduction, period 4, rationals to 1e-9): PASS");
}

#[test]
fn criterion_6_safeguard_success_grid() {
    let _guard = serial();
    let clock = Instant::now();
    let grid = ExperimentGrid {
        sizes: vec![10_000],
        repeats: 10,
        lambda: 10.0,
        max_iter: 800,
        seed: 42,
        ..Default::default()
    };
    let (rows, _) = run_grid(&grid).unwrap();
    println!("criterion 6 measured grid (n=10^4, 10 seeds, lambda=10, max_iter=800):");
    for r in &rows {
        println!(
            "    {} d={} {}: success {:.1}, median iterations {}",
            r.penalty, r.order, r.variant, r.success, r.med_iters
        );
    }
    for r in &rows {
        match (r.variant, r.order) {
            (Variant::Plain, 1) => assert_eq!(
                r.success, 1.0,
                "plain d=1 {} expected success 1.0, got {}",
                r.penalty, r.success
            ),
            (Variant::Plain, 2) => assert!(
                r.success <= 0.2,
                "plain d=2 {} expected success <= 0.2, got {}",
                r.penalty, r.success
            ),
            (Variant::Sf1, _) => assert_eq!(
                r.success, 1.0,
                "sf1 d={} {} expected success 1.0, got {}",
                r.order, r.penalty, r.success
            ),
            (Variant::Sf2, _) => assert_eq!(
                r.success, 1.0,
                "sf2 d={} {} expected success 1.0, got {}",
                r.order, r.penalty, r.success
            ),
            _ => unreachable!(),
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    assert!(elapsed < 600.0, "took {elapsed:.0}s, budget 600s");
    println!("criterion 6 (safeguard success grid): PASS ({elapsed:.0}s)");
}

#[test]
fn criterion_7_oracle_equivalence() {
    let _guard = serial();
    let clock = Instant::now();
    let mut rng = PortableRng::new(707);
    let cfg = OracleConfig { max_sweeps: 400_000, tol: 1e-11 };
    let mut exhaustive_checked = 0usize;
    for trial in 0..200 {
        let order = 1 + rng.below(2);
        // mix tiny instances (exhaustive range) with medium ones
        let n = if trial % 4 == 0 {
            (order + 2) + rng.below(12 + order - (order + 2) + 1)
        } else {
            16 + rng.below(185)
        };
        let penalty = if rng.below(2) == 0 { Penalty::L1 } else { Penalty::L1Pos };
        let lambda = rng.uniform_in(0.5, 10.0);
        let y: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.0, 10.0)).collect();
        let p = TfProblem::new(y, lambda, order, penalty).unwrap();

        let (point, report) = tf_solve_sf2(&p, None, Sf2Config::default(), 800).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal, "trial {trial}: sf2 failed");
        let obj_sf2 = objective_tf(&p, &point.theta).unwrap();

        let (cd_theta, _) = dual_cd_tf(&p, &cfg).unwrap();
        let obj_cd = objective_tf(&p, &cd_theta).unwrap();
        assert!(
            (obj_sf2 - obj_cd).abs() <= 1e-7 * obj_cd.abs().max(1.0),
            "trial {trial} (n={n}, d={order}, {penalty}, lambda={lambda:.2}): \
             sf2 {obj_sf2} vs cd {obj_cd}"
        );

        if n - order <= 12 {
            let (ex_theta, _) = exhaustive_tf(&p).unwrap();
            let obj_ex = objective_tf(&p, &ex_theta).unwrap();
            assert!(
                (obj_sf2 - obj_ex).abs() <= 1e-8 * obj_ex.abs().max(1.0),
                "trial {trial}: exhaustive {obj_ex} vs sf2 {obj_sf2}"
            );
            exhaustive_checked += 1;
        }
    }
    assert!(exhaustive_checked >= 30, "only {exhaustive_checked} exhaustive checks ran");
    let elapsed = clock.elapsed().as_secs_f64();
    println!(
        "criterion 7 (oracle equivalence, 200 instances, {exhaustive_checked} exhaustive): \
         PASS ({elapsed:.0}s)"
    );
}

#[test]
fn criterion_8_warm_start_benefit() {
    let _guard = serial();
    let clock = Instant::now();
    let n = 10_000;

    // isotonic protocol: solve a linear-noise base, then warm-start the
    // optimal partition on ten perturbed copies
    let base = generate(&GenSpec { kind: GenKind::LinearNoise, n, seed: 808 }).unwrap();
    let base_problem = IrProblem::with_unit_weights(base.clone()).unwrap();
    let (_, _, base_partition, _) =
        pdas_ir_solve_with_partition(&base_problem, None).unwrap();
    let mut cold_merges = Vec::new();
    let mut warm_merges = Vec::new();
    for rep in 0..10 {
        let y = perturb(&base, derive_seed(808, n, rep));
        let p = IrProblem::with_unit_weights(y).unwrap();
        let (_, _, cold) = pdas_ir_solve(&p, None).unwrap();
        let (_, _, warm) = pdas_ir_solve(&p, Some(&base_partition)).unwrap();
        assert!(kkt_check_ir(
            &p,
            &pdas_ir_solve(&p, Some(&base_partition)).unwrap().0,
            &pdas_ir_solve(&p, Some(&base_partition)).unwrap().1,
            1e-8
        ));
        cold_merges.push(cold.merge_count);
        warm_merges.push(warm.merge_count + warm.split_count);
    }
    let cold_med = median_usize(&mut cold_merges);
    let warm_med = median_usize(&mut warm_merges);
    assert!(
        warm_med <= 0.25 * cold_med,
        "isotonic warm start: {warm_med} vs cold {cold_med}"
    );

    // trend filtering: same protocol with SF2 on first-order l1
    let tf_base = generate(&GenSpec { kind: GenKind::Uniform, n, seed: 818 }).unwrap();
    let tf_problem = TfProblem::new(tf_base.clone(), 10.0, 1, Penalty::L1).unwrap();
    let (_, base_report, tf_partition) =
        tf_solve_sf2_with_partition(&tf_problem, None, Sf2Config::default(), 800).unwrap();
    assert_eq!(base_report.status, SolveStatus::Optimal);
    let mut cold_iters = Vec::new();
    let mut warm_iters = Vec::new();
    for rep in 0..10 {
        let y = perturb(&tf_base, derive_seed(818, n, rep));
        let p = TfProblem::new(y, 10.0, 1, Penalty::L1).unwrap();
        let (_, cold) = tf_solve_sf2(&p, None, Sf2Config::default(), 800).unwrap();
        let (_, warm) =
            tf_solve_sf2(&p, Some(&tf_partition), Sf2Config::default(), 800).unwrap();
        assert_eq!(cold.status, SolveStatus::Optimal);
        assert_eq!(warm.status, SolveStatus::Optimal);
        cold_iters.push(cold.iterations);
        warm_iters.push(warm.iterations);
    }
    let tf_cold_med = median_usize(&mut cold_iters);
    let tf_warm_med = median_usize(&mut warm_iters);
    assert!(
        tf_warm_med <= 0.25 * tf_cold_med,
        "trend-filtering warm start: {tf_warm_med} vs cold {tf_cold_med}"
    );
    let elapsed = clock.elapsed().as_secs_f64();
    println!(
        "criterion 8 (warm-start benefit: isotonic {warm_med}/{cold_med} merges, \
         trend filtering {tf_warm_med}/{tf_cold_med} iterations): PASS ({elapsed:.0}s)"
    );
}

#[test]
fn criterion_9_sf2_internal_invariants() {
    let _guard = serial();
    let mut rng = PortableRng::new(909);
    let mut logged = 0usize;
    // assorted runs: the cycling instance plus uniform data at both orders
    let mut problems = vec![(
        TfProblem::new(vec![603.0, 996.0, 502.0, 19.0, 56.0, 139.0], 100.0, 2, Penalty::L1)
            .unwrap(),
        Some(SignPartition::from_sets(4, &[1, 2, 3], &[0], &[]).unwrap()),
    )];
    for _ in 0..20 {
        let n = 200 + rng.below(1800);
        let order = 1 + rng.below(2);
        let penalty = if rng.below(2) == 0 { Penalty::L1 } else { Penalty::L1Pos };
        let y: Vec<f64> = (0..n).map(|_| rng.uniform_in(0.0, 10.0)).collect();
        problems.push((TfProblem::new(y, 10.0, order, penalty).unwrap(), None));
    }
    for (p, start) in &problems {
        let (_, report, trace) =
            tf_solve_sf2_traced(p, start.as_ref(), Sf2Config::default(), 800).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        let refs: Vec<usize> = trace.reference_max.iter().flatten().copied().collect();
        for w in refs.windows(2) {
            assert!(w[1] <= w[0], "queue maximum increased: {} -> {}", w[0], w[1]);
        }
        for (k, &portion) in trace.proportions.iter().enumerate() {
            let count = trace.violation_counts[k] as f64;
            assert!(
                portion >= 1.0 / count - 1e-15 && portion <= 1.0,
                "portion {portion} outside [{:.3e}, 1] at iteration {k}",
                1.0 / count
            );
            assert!(trace.moved_counts[k] >= 1);
        }
        logged += 1;
    }
    println!("criterion 9 (SF2 queue/proportion invariants over {logged} runs): PASS");
}
