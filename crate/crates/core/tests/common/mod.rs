use surfsim::circuit::Circuit;
use surfsim::decoder::Decoder;
use surfsim::engine::{run_shot, stochastic_location_count, Calibration, Fault, NoiseModel};
use surfsim::layout::CodeLayout;
use surfsim::noise::{op_channels, Channel, CrNoiseMode, NoiseParams};
use surfsim::pauli::Pauli;
use surfsim::tableau::Tableau;

// Every non-identity Pauli at every stochastic location, one at a time.
pub fn exhaust(layout: &CodeLayout, circuit: &Circuit, mode: CrNoiseMode) -> (usize, usize, Vec<String>) {
    let cal = Calibration::compute(circuit, layout).unwrap();
    let dec = Decoder::new(layout, circuit.rounds);
    // p = 0 keeps every other location silent; the fault overrides its own draw
    let model = NoiseModel::new(NoiseParams::new(0.0, 0.0).unwrap(), mode);
    let arities: Vec<bool> = circuit
        .ops
        .iter()
        .flat_map(|op| op_channels(op, mode).map(|ch| matches!(ch, Channel::Depol2(..))))
        .collect();
    assert_eq!(arities.len(), stochastic_location_count(circuit, mode));
    let mut t = Tableau::new(circuit.n_registers);
    let mut failures = Vec::new();
    let mut runs = 0;
    let mut detected = 0;
    for (index, &two) in arities.iter().enumerate() {
        let combos: Vec<(Pauli, Pauli)> = if two {
            Pauli::ALL.iter().flat_map(|&a| Pauli::ALL.iter().map(move |&b| (a, b))).skip(1).collect()
        } else {
            Pauli::ALL[1..].iter().map(|&a| (a, Pauli::I)).collect()
        };
        for paulis in combos {
            let fault = Fault::Location { index, paulis };
            let shot = run_shot(&mut t, circuit, layout, &model, &cal, 1, &[fault]).unwrap();
            runs += 1;
            let out = dec.decode(&shot).unwrap();
            if out.z_events + out.x_events > 0 {
                detected += 1;
            }
            if out.logical_flip {
                failures.push(format!("location {index} {paulis:?}"));
            }
        }
    }
    (runs, detected, failures)
}
