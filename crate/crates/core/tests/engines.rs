use surfsim::circuit::{build_parallel, build_serialized};
use surfsim::engine::{run_shot, Calibration, Fault, NoiseModel};
use surfsim::layout::{build_layout, CodeDistance, CodeLayout};
use surfsim::noise::{CrNoiseMode, NoiseParams};
use surfsim::pauli::Pauli;
use surfsim::rng::shot_seed;
use surfsim::statevector::StateVector;
use surfsim::tableau::Tableau;

fn layout(d: usize) -> CodeLayout {
    build_layout(CodeDistance::new(d).unwrap())
}

#[test]
fn calibration_is_deterministic_for_both_schedules() {
    for d in [3, 5, 7] {
        let l = layout(d);
        for c in [build_parallel(&l, 3).unwrap(), build_serialized(&l, 3).unwrap()] {
            Calibration::compute(&c, &l).unwrap();
        }
    }
}

#[test]
fn noise_free_shots_have_zero_syndromes() {
    let l = layout(3);
    let c = build_serialized(&l, 3).unwrap();
    let cal = Calibration::compute(&c, &l).unwrap();
    let model = NoiseModel::noiseless();
    let mut sv = StateVector::new(c.n_registers).unwrap();
    let mut tab = Tableau::new(c.n_registers);
    for i in 0..5 {
        for rec in [
            run_shot(&mut sv, &c, &l, &model, &cal, shot_seed(1, i), &[]).unwrap(),
            run_shot(&mut tab, &c, &l, &model, &cal, shot_seed(1, i), &[]).unwrap(),
        ] {
            assert!(rec.syndromes.iter().flatten().all(|b| !b));
            let zl: bool = l.logical_z_support.iter().fold(false, |a, q| a ^ rec.final_data_bits[q - 1]);
            assert!(!zl);
        }
    }
}

#[test]
fn engines_agree_bit_for_bit() {
    let l = layout(3);
    let c = build_serialized(&l, 3).unwrap();
    let cal = Calibration::compute(&c, &l).unwrap();
    let model = NoiseModel::new(NoiseParams::new(0.02, 0.0).unwrap(), CrNoiseMode::Replace);
    let mut sv = StateVector::new(c.n_registers).unwrap();
    let mut tab = Tableau::new(c.n_registers);
    for i in 0..200 {
        let s = shot_seed(9, i);
        let a = run_shot(&mut sv, &c, &l, &model, &cal, s, &[]).unwrap();
        let b = run_shot(&mut tab, &c, &l, &model, &cal, s, &[]).unwrap();
        assert_eq!(a, b, "shot {i}");
    }
}

#[test]
fn x_on_data_seven_flips_its_two_z_neighbours() {
    let l = layout(5);
    let c = build_serialized(&l, 3).unwrap();
    let cal = Calibration::compute(&c, &l).unwrap();
    let mut tab = Tableau::new(c.n_registers);
    let fault = Fault::BetweenRounds { after_round: 1, register: 6, pauli: Pauli::X };
    let rec = run_shot(&mut tab, &c, &l, &NoiseModel::noiseless(), &cal, 3, &[fault]).unwrap();
    let flipped: Vec<String> = l
        .stabilizers()
        .filter(|s| rec.syndromes[2][s.ancilla_id])
        .map(|s| s.product_string())
        .collect();
    assert_eq!(flipped, vec!["Z1Z2Z6Z7".to_string(), "Z7Z8Z12Z13".to_string()]);
    assert!(rec.syndromes[..2].iter().flatten().all(|b| !b));
}
