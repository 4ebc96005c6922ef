//! Exit criteria. Each test prints one `PASS`/`FAIL` line and fails on FAIL.
//!
//! `cargo test -p surfsim --test acceptance -- --nocapture --test-threads 1`

mod common;

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surfsim::analysis::{
    break_even, fit_effective_alpha, fit_power_law, lifetime_ratio, DataPoint, LifetimeParams, Weighting,
};
use surfsim::circuit::{build_parallel, build_serialized, Axis, GateKind};
use surfsim::engine::{run_shot, Calibration, NoiseModel};
use surfsim::experiment::{run_experiment, Engine, ExperimentConfig, RunOptions, RunResult};
use surfsim::layout::{build_layout, CodeDistance, CodeLayout};
use surfsim::linalg::Matrix;
use surfsim::matching::min_weight_perfect_matching;
use surfsim::noise::{coherent_overrotation_unitary, gate_unitary, CrNoiseMode, NoiseParams};
use surfsim::rng::shot_seed;
use surfsim::statevector::StateVector;
use surfsim::tableau::Tableau;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!("{} #{n} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} ({name}) failed: {detail}");
}

fn layout(d: usize) -> CodeLayout {
    build_layout(CodeDistance::new(d).unwrap())
}

const TABLE_D5: [(&[usize], &[usize]); 12] = [
    (&[1, 2], &[16, 21]),
    (&[3, 4], &[6, 11]),
    (&[2, 3, 7, 8], &[11, 12, 16, 17]),
    (&[4, 5, 9, 10], &[1, 2, 6, 7]),
    (&[6, 7, 11, 12], &[17, 18, 22, 23]),
    (&[8, 9, 13, 14], &[7, 8, 12, 13]),
    (&[12, 13, 17, 18], &[13, 14, 18, 19]),
    (&[14, 15, 19, 20], &[3, 4, 8, 9]),
    (&[16, 17, 21, 22], &[19, 20, 24, 25]),
    (&[18, 19, 23, 24], &[9, 10, 14, 15]),
    (&[22, 23], &[15, 20]),
    (&[24, 25], &[5, 10]),
];

#[test]
fn criterion_01_layout_matches_stabilizer_table() {
    let l = layout(5);
    let set = |s: &[usize]| s.iter().copied().collect::<BTreeSet<_>>();
    let mut mismatches = Vec::new();
    if l.x_stabilizers.len() != 12 || l.z_stabilizers.len() != 12 {
        mismatches.push(format!("{} X / {} Z stabilizers", l.x_stabilizers.len(), l.z_stabilizers.len()));
    }
    for (row, (x, z)) in TABLE_D5.iter().enumerate() {
        for (stabs, want) in [(&l.x_stabilizers, x), (&l.z_stabilizers, z)] {
            match stabs.get(row) {
                Some(s) if s.index == row + 1 && set(&s.support()) == set(want) => {}
                Some(s) => mismatches.push(format!("row {}: {} vs {:?}", row + 1, s.label(), want)),
                None => mismatches.push(format!("row {} missing", row + 1)),
            }
        }
    }
    report(1, "layout fidelity (d=5)", mismatches.is_empty(), format!("24 stabilizers checked, mismatches {mismatches:?}"));
}

#[test]
fn criterion_02_schedules_are_equivalent() {
    let mut detail = Vec::new();
    let mut pass = true;
    for d in [3, 5] {
        let l = layout(d);
        let res = surfsim::circuit::validate_schedules(&build_parallel(&l, d).unwrap(), &build_serialized(&l, d).unwrap(), &l);
        match res {
            Ok(r) => detail.push(format!("d={d}: {r}")),
            Err(e) => {
                pass = false;
                detail.push(format!("d={d}: {e}"));
            }
        }
    }
    report(2, "schedule equivalence", pass, detail.join("; "));
}

#[test]
fn criterion_03_engines_bit_identical() {
    let l = layout(3);
    let circuit = build_serialized(&l, 3).unwrap();
    let cal = Calibration::compute(&circuit, &l).unwrap();
    let mut sv = StateVector::new(circuit.n_registers).unwrap();
    let mut tab = Tableau::new(circuit.n_registers);
    let mut mismatches = 0;
    let mut syndromes = 0usize;
    let shots = 1000;
    for p in [5e-3, 1e-2] {
        let model = NoiseModel::new(NoiseParams::new(p, 0.0).unwrap(), CrNoiseMode::Replace);
        for i in 0..shots {
            let seed = shot_seed(3, i);
            let a = run_shot(&mut sv, &circuit, &l, &model, &cal, seed, &[]).unwrap();
            let b = run_shot(&mut tab, &circuit, &l, &model, &cal, seed, &[]).unwrap();
            syndromes += a.syndromes.iter().flatten().filter(|&&s| s).count();
            if a != b {
                mismatches += 1;
            }
        }
    }
    report(
        3,
        "engine cross-validation",
        mismatches == 0 && syndromes > 0,
        format!("2×{shots} shots, {mismatches} mismatched records, {syndromes} syndrome bits set"),
    );
}

#[test]
fn criterion_04_single_faults_are_corrected() {
    let l = layout(3);
    let circuit = build_serialized(&l, 3).unwrap();
    let (runs, detected, failures) = common::exhaust(&l, &circuit, CrNoiseMode::Replace);
    report(
        4,
        "single-fault exhaustion",
        failures.is_empty() && runs > 0,
        format!("{runs} injected faults, {detected} detected, {} logical flips {:?}", failures.len(), &failures[..failures.len().min(5)]),
    );
}

fn brute_force(n: usize, w: &[Vec<Option<i64>>]) -> Option<i64> {
    fn rec(free: &mut Vec<usize>, w: &[Vec<Option<i64>>]) -> Option<i64> {
        let Some(a) = free.pop() else { return Some(0) };
        let mut best: Option<i64> = None;
        for k in 0..free.len() {
            let b = free[k];
            if let Some(wab) = w[a][b] {
                free.remove(k);
                if let Some(rest) = rec(free, w) {
                    best = Some(best.map_or(wab + rest, |x: i64| x.min(wab + rest)));
                }
                free.insert(k, b);
            }
        }
        free.push(a);
        best
    }
    rec(&mut (0..n).collect(), w)
}

#[test]
fn criterion_05_mwpm_is_optimal() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let graphs = 2000;
    let mut wrong = 0;
    let mut infeasible = 0;
    for _ in 0..graphs {
        let n = 2 * rng.random_range(1..=5);
        let density: f64 = rng.random_range(0.3..=1.0);
        let mut w = vec![vec![None; n]; n];
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random::<f64>() < density {
                    let x = rng.random_range(0..100);
                    w[a][b] = Some(x);
                    w[b][a] = Some(x);
                    edges.push((a, b, x));
                }
            }
        }
        let want = brute_force(n, &w);
        let got = min_weight_perfect_matching(n, &edges).map(|mate| {
            assert!((0..n).all(|i| mate[mate[i]] == i && mate[i] != i));
            (0..n).filter(|&i| i < mate[i]).map(|i| w[i][mate[i]].expect("matched along a non-edge")).sum::<i64>()
        });
        if want.is_none() {
            infeasible += 1;
        }
        if got != want {
            wrong += 1;
        }
    }
    report(5, "MWPM optimality", wrong == 0, format!("{graphs} graphs ({infeasible} without a perfect matching), {wrong} suboptimal"));
}

#[test]
fn criterion_06_coherent_flip_probability() {
    let samples = 1_000_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut pass = true;
    let mut detail = Vec::new();
    for (p, c) in [(1e-3, 1.0), (1e-2, 0.5)] {
        let params = NoiseParams::new(p, c).unwrap();
        let eps = params.epsilon();
        let expected = (c * p.sqrt()).sin().powi(2);
        // over-rotated RX90 then an ideal RX90†, on |0>
        let dag = gate_unitary(GateKind::Rx90Dag).unwrap();
        let noisy = coherent_overrotation_unitary(GateKind::Rx90, &params).unwrap().mul(&gate_unitary(GateKind::Rx90).unwrap());
        let u: Matrix = dag.mul(&noisy);
        let from_matrix = u[(1, 0)].norm_sqr();
        let mut sv = StateVector::new(1).unwrap();
        let mut flips = 0u64;
        for _ in 0..samples {
            sv.reset_all();
            sv.rotate(Axis::X, &[0], FRAC_PI_4 + eps);
            sv.rotate(Axis::X, &[0], -FRAC_PI_4);
            if sv.measure(0, rng.random()).unwrap() {
                flips += 1;
            }
        }
        let freq = flips as f64 / samples as f64;
        let sigma = (expected * (1.0 - expected) / samples as f64).sqrt();
        let ok = (freq - expected).abs() <= 3.0 * sigma && (from_matrix - expected).abs() < 1e-12;
        pass &= ok;
        detail.push(format!("(p={p}, c={c}): sampled {freq:.6e} vs {expected:.6e} ± {sigma:.1e}, matrix {from_matrix:.6e}"));
    }
    report(6, "coherent bit-flip probability", pass, detail.join("; "));
}

const SWEEP_PS: [f64; 4] = [3e-3, 5e-3, 7e-3, 1e-2];
const SWEEP_RANGE: (f64, f64) = (3e-3, 1e-2);

fn d3_point(p: f64, c: f64, shots: u64) -> RunResult {
    let mut cfg = ExperimentConfig::new(3, p, c, shots);
    cfg.master_seed = 77;
    cfg.engine = if c == 0.0 { Engine::Tableau } else { Engine::StateVector };
    run_experiment(&cfg, &RunOptions::default()).unwrap()
}

fn point(r: &RunResult) -> DataPoint {
    DataPoint { p: r.config.p, c: r.config.c, p_l: r.p_l, stderr: r.stderr }
}

#[test]
fn criterion_07_scaling_exponent_d3() {
    let points: Vec<DataPoint> = SWEEP_PS.iter().map(|&p| point(&d3_point(p, 0.0, 10_000))).collect();
    let fit = fit_power_law(&points, SWEEP_RANGE, Weighting::Unweighted).unwrap();
    let curve: Vec<String> = points.iter().map(|pt| format!("{}→{:.4}", pt.p, pt.p_l)).collect();
    report(
        7,
        "scaling exponent (d=3)",
        (1.6..=2.4).contains(&fit.xi),
        format!("xi = {:.3} (A = {:.3e}) over {}, want [1.6, 2.4]", fit.xi, fit.a, curve.join(", ")),
    );
}

#[test]
fn criterion_08_effective_model_shape_d3() {
    let mut points = Vec::new();
    for c in [0.0, 0.5, 1.0] {
        for &p in &SWEEP_PS {
            points.push(point(&d3_point(p, c, 10_000)));
        }
    }
    let zero: Vec<DataPoint> = points.iter().copied().filter(|pt| pt.c == 0.0).collect();
    let fit = fit_power_law(&zero, SWEEP_RANGE, Weighting::Unweighted).unwrap();
    let model = fit_effective_alpha(&points, &fit).unwrap();
    let b0 = model.b_values[0].1;
    let monotone = model.b_values.windows(2).all(|w| w[1].1 >= w[0].1);
    let bs: Vec<String> = model.b_values.iter().map(|(c, b)| format!("B({c})={b:.4}")).collect();
    report(
        8,
        "effective-model shape (d=3)",
        (0.9..=1.1).contains(&b0) && monotone && model.alpha > 0.0,
        format!("{}, alpha = {:.4}", bs.join(", "), model.alpha),
    );
}

#[test]
fn criterion_09_break_even_and_lifetime() {
    let mut xs = Vec::new();
    let mut all_found = true;
    for k in 0..=20 {
        let c = k as f64 / 20.0;
        match break_even(&LifetimeParams::default_d5(1e-3, c), 1e-4, 0.1).unwrap() {
            Some(x) => xs.push(x),
            None => all_found = false,
        }
    }
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio = lifetime_ratio(&LifetimeParams::default_d5(1e-3, 1.0)).unwrap().ratio;
    let in_band = all_found && lo >= 0.005 && hi <= 0.007;
    report(
        9,
        "break-even band and lifetime gain",
        in_band && ratio >= 10.0,
        format!("break-even t_g/t_c spans [{lo:.5}, {hi:.5}] for c in [0, 1], want within [0.005, 0.007]; t_L/t_c at t_g/t_c = 0.001, c = 1 is {ratio:.3}, want ≥ 10"),
    );
}

#[test]
fn criterion_10_d5_smoke() {
    let mut cfg = ExperimentConfig::new(5, 3e-3, 0.5, 50);
    cfg.master_seed = 10;
    cfg.engine = Engine::StateVector;
    let sv = run_experiment(&cfg, &RunOptions { workers: Some(1), keep_records: false }).unwrap();
    let gib = sv.state_bytes as f64 / (1u64 << 30) as f64;
    let sv_ok = sv.shots_run >= 50 && sv.aborts == 0 && gib <= 1.5;

    let mut cfg = ExperimentConfig::new(5, 3e-3, 0.0, 1000);
    cfg.master_seed = 10;
    cfg.engine = Engine::Tableau;
    let tab = run_experiment(&cfg, &RunOptions::default()).unwrap();
    let expected = 6.5e5 * 3e-3f64.powf(2.92);
    let z = (tab.p_l - expected) / tab.stderr;
    report(
        10,
        "d=5 smoke",
        sv_ok && z.abs() <= 3.0,
        format!(
            "state vector c=0.5: {} shots, {} aborts, {gib:.3} GiB state, p_L = {:.3} in {:.0} s; tableau c=0: p_L = {:.4} ± {:.4} vs {expected:.4} ({z:+.2}σ)",
            sv.shots_run, sv.aborts, sv.p_l, sv.wall_time_s, tab.p_l, tab.stderr
        ),
    );
}
