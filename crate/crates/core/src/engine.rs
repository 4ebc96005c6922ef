//! Shared shot executor for both backends.
//!
//! Randomness is consumed in one canonical order so that the state-vector and
//! tableau engines see identical draws for identical seeds: for each op in
//! circuit order, first the op itself (one draw for MEASURE_Z and RESET),
//! then one draw per stochastic channel; finally one draw per data-qubit
//! readout.

use std::f64::consts::FRAC_PI_4;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Axis, Circuit, GateKind};
use crate::error::{Error, Result};
use crate::layout::CodeLayout;
use crate::noise::{depolarizing_1q_from_uniform, depolarizing_2q_from_uniform, op_channels, Channel, CrNoiseMode, NoiseParams};
use crate::pauli::Pauli;
use crate::statevector::StateVector;
use crate::tableau::Tableau;

pub trait Backend {
    fn n_registers(&self) -> usize;
    /// Back to `|0…0⟩`.
    fn reset_all(&mut self);
    /// `exp(-iθP_axis)` on `qubits`.
    fn rotate(&mut self, axis: Axis, qubits: &[usize], theta: f64) -> Result<()>;
    fn apply_pauli(&mut self, q: usize, p: Pauli);
    fn measure(&mut self, q: usize, u: f64) -> Result<bool>;
    fn reset(&mut self, q: usize, u: f64) -> Result<()>;
    fn postselect_x_product(&mut self, qubits: &[usize]) -> Result<()>;
    /// Whether the last measurement outcome was random (None if unknown).
    fn last_measurement_random(&self) -> Option<bool> {
        None
    }
    fn supports_coherent(&self) -> bool;
}

impl Backend for StateVector {
    fn n_registers(&self) -> usize {
        StateVector::n_registers(self)
    }
    fn reset_all(&mut self) {
        StateVector::reset_all(self)
    }
    fn rotate(&mut self, axis: Axis, qubits: &[usize], theta: f64) -> Result<()> {
        StateVector::rotate(self, axis, qubits, theta);
        Ok(())
    }
    fn apply_pauli(&mut self, q: usize, p: Pauli) {
        StateVector::apply_pauli(self, q, p)
    }
    fn measure(&mut self, q: usize, u: f64) -> Result<bool> {
        StateVector::measure(self, q, u)
    }
    fn reset(&mut self, q: usize, u: f64) -> Result<()> {
        StateVector::reset(self, q, u)
    }
    fn postselect_x_product(&mut self, qubits: &[usize]) -> Result<()> {
        StateVector::postselect_x_product(self, qubits)
    }
    fn supports_coherent(&self) -> bool {
        true
    }
}

impl Backend for Tableau {
    fn n_registers(&self) -> usize {
        Tableau::n_registers(self)
    }
    fn reset_all(&mut self) {
        Tableau::reset_all(self)
    }
    fn rotate(&mut self, axis: Axis, qubits: &[usize], theta: f64) -> Result<()> {
        Tableau::rotate(self, axis, qubits, theta)
    }
    fn apply_pauli(&mut self, q: usize, p: Pauli) {
        Tableau::apply_pauli(self, q, p)
    }
    fn measure(&mut self, q: usize, u: f64) -> Result<bool> {
        Ok(Tableau::measure(self, q, u))
    }
    fn reset(&mut self, q: usize, u: f64) -> Result<()> {
        Tableau::reset(self, q, u);
        Ok(())
    }
    fn postselect_x_product(&mut self, qubits: &[usize]) -> Result<()> {
        Tableau::postselect_x_product(self, qubits)
    }
    fn last_measurement_random(&self) -> Option<bool> {
        Some(Tableau::last_measurement_random(self))
    }
    fn supports_coherent(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub params: NoiseParams,
    pub cr_mode: CrNoiseMode,
}

impl NoiseModel {
    pub fn new(params: NoiseParams, cr_mode: CrNoiseMode) -> Self {
        Self { params, cr_mode }
    }

    pub fn noiseless() -> Self {
        Self { params: NoiseParams::noiseless(), cr_mode: CrNoiseMode::Replace }
    }
}

/// Deterministic fault for tests and exhaustive single-fault sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Replace the sample at stochastic location `index` (execution order).
    /// For one-qubit channels only the first Pauli is used.
    Location { index: usize, paulis: (Pauli, Pauli) },
    /// Apply `pauli` to `register` after its last op of round `after_round`.
    BetweenRounds { after_round: usize, register: usize, pauli: Pauli },
}

/// Raw measurement record of one shot, before calibration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// `rounds × n_stabilizers`, global stabilizer id order.
    pub syndromes: Vec<Vec<bool>>,
    pub final_bits: Vec<bool>,
    /// Syndrome measurements the backend reported as random.
    pub random_syndromes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotRecord {
    /// Frame-corrected syndrome bits, `rounds × n_stabilizers`.
    pub syndromes: Vec<Vec<bool>>,
    /// Frame-corrected final data readout (`d²` bits, qubit `q` at `q - 1`).
    pub final_data_bits: Vec<bool>,
    pub shot_seed: u64,
}

/// Noise-free reference outcomes of a compiled circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Calibration {
    pub syndromes: Vec<Vec<bool>>,
    /// A data readout with the reference Z-stabilizer and Z_L parities.
    pub final_bits: Vec<bool>,
}

impl Calibration {
    /// Noise-free tableau run. Every syndrome bit must come out deterministic,
    /// which validates the compiled circuit's Clifford frame.
    pub fn compute(circuit: &Circuit, layout: &CodeLayout) -> Result<Self> {
        let mut t = Tableau::new(circuit.n_registers);
        initialize_codestate(&mut t, layout)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let raw = execute(circuit, layout.n_stabilizers(), &mut t, &NoiseModel::noiseless(), &mut rng, &[])?;
        if raw.random_syndromes > 0 {
            return Err(Error::Calibration(format!(
                "{} syndrome measurements are random in the noise-free circuit",
                raw.random_syndromes
            )));
        }
        Ok(Self { syndromes: raw.syndromes, final_bits: raw.final_bits })
    }

    pub fn apply(&self, raw: RawRecord, shot_seed: u64) -> ShotRecord {
        let xor = |a: &[bool], b: &[bool]| a.iter().zip(b).map(|(x, y)| x ^ y).collect::<Vec<_>>();
        ShotRecord {
            syndromes: raw.syndromes.iter().zip(&self.syndromes).map(|(a, b)| xor(a, b)).collect(),
            final_data_bits: xor(&raw.final_bits, &self.final_bits),
            shot_seed,
        }
    }
}

/// Project `|0…0⟩` onto the +1 eigenspace of every X stabilizer. Z
/// stabilizers and Z_L are already +1 on `|0…0⟩`.
pub fn initialize_codestate<B: Backend + ?Sized>(backend: &mut B, layout: &CodeLayout) -> Result<()> {
    for s in &layout.x_stabilizers {
        let regs: Vec<usize> = s.support().iter().map(|q| q - 1).collect();
        backend.postselect_x_product(&regs)?;
    }
    Ok(())
}

/// Run `circuit` on an initialized backend, then read out all data qubits.
pub fn execute<B: Backend + ?Sized, R: Rng + ?Sized>(
    circuit: &Circuit,
    n_stabilizers: usize,
    backend: &mut B,
    model: &NoiseModel,
    rng: &mut R,
    faults: &[Fault],
) -> Result<RawRecord> {
    if backend.n_registers() != circuit.n_registers {
        return Err(Error::Circuit(format!(
            "backend has {} registers, circuit needs {}",
            backend.n_registers(),
            circuit.n_registers
        )));
    }
    let eps = model.params.epsilon();
    if eps > 0.0 && !backend.supports_coherent() {
        return Err(Error::Unsupported("coherent over-rotation (c > 0) on a Clifford backend".into()));
    }
    let p = model.params.p();
    let mut syndromes = vec![vec![false; n_stabilizers]; circuit.rounds];
    let mut random_syndromes = 0;
    let mut location = 0usize;
    let mut pending: Vec<Fault> = faults.iter().copied().filter(|f| matches!(f, Fault::BetweenRounds { .. })).collect();

    for op in &circuit.ops {
        pending.retain(|f| match *f {
            Fault::BetweenRounds { after_round, register, pauli } if op.round > after_round && op.touches(register) => {
                backend.apply_pauli(register, pauli);
                false
            }
            _ => true,
        });

        let q = op.qubits();
        match op.gate {
            GateKind::Wait => {}
            GateKind::Reset => backend.reset(q[0], rng.random())?,
            GateKind::MeasureZ => {
                let bit = backend.measure(q[0], rng.random())?;
                if backend.last_measurement_random() == Some(true) {
                    random_syndromes += 1;
                }
                let owner = op.owner.ok_or_else(|| Error::Circuit(format!("unowned measurement: {}", op.dump_line())))?;
                syndromes[op.round][owner] = bit;
            }
            g => {
                let (axis, sign) = g.rotation().expect("remaining gates are rotations");
                backend.rotate(axis, q, sign * (FRAC_PI_4 + eps))?;
            }
        }

        for ch in op_channels(op, model.cr_mode) {
            let u: f64 = rng.random();
            let injected = faults.iter().find_map(|f| match *f {
                Fault::Location { index, paulis } if index == location => Some(paulis),
                _ => None,
            });
            match ch {
                Channel::Depol1(a) => {
                    let pa = injected.map_or_else(|| depolarizing_1q_from_uniform(p, u), |f| f.0);
                    backend.apply_pauli(a, pa);
                }
                Channel::Depol2(a, b) => {
                    let (pa, pb) = injected.unwrap_or_else(|| depolarizing_2q_from_uniform(p, u));
                    backend.apply_pauli(a, pa);
                    backend.apply_pauli(b, pb);
                }
            }
            location += 1;
        }
    }
    for f in pending {
        if let Fault::BetweenRounds { register, pauli, .. } = f {
            backend.apply_pauli(register, pauli);
        }
    }

    let mut final_bits = Vec::with_capacity(circuit.n_data);
    for r in 0..circuit.n_data {
        final_bits.push(backend.measure(r, rng.random())?);
    }
    Ok(RawRecord { syndromes, final_bits, random_syndromes })
}

/// Count of stochastic locations in `circuit` (the range of `Fault::Location`).
pub fn stochastic_location_count(circuit: &Circuit, mode: CrNoiseMode) -> usize {
    circuit.ops.iter().map(|op| op_channels(op, mode).count()).sum()
}

/// One full shot: reset, initialize, execute with the per-shot RNG stream,
/// and apply the calibration frame.
pub fn run_shot<B: Backend + ?Sized>(
    backend: &mut B,
    circuit: &Circuit,
    layout: &CodeLayout,
    model: &NoiseModel,
    calibration: &Calibration,
    shot_seed: u64,
    faults: &[Fault],
) -> Result<ShotRecord> {
    backend.reset_all();
    initialize_codestate(backend, layout)?;
    let mut rng = ChaCha8Rng::seed_from_u64(shot_seed);
    let raw = execute(circuit, layout.n_stabilizers(), backend, model, &mut rng, faults)?;
    Ok(calibration.apply(raw, shot_seed))
}

/// Tableau shot; rejects `c ≠ 0`.
pub fn run_shot_tableau(
    tableau: &mut Tableau,
    circuit: &Circuit,
    layout: &CodeLayout,
    model: &NoiseModel,
    calibration: &Calibration,
    shot_seed: u64,
) -> Result<ShotRecord> {
    if model.params.c() != 0.0 {
        return Err(Error::Unsupported("the tableau engine requires c = 0".into()));
    }
    run_shot(tableau, circuit, layout, model, calibration, shot_seed, &[])
}

/// Shot-record persistence: CSV rows `shot_seed,round,stabilizer_index,bit`
/// for every syndrome bit (stabilizer_index = global id), then one row
/// `shot_seed,final,,<d² bits as 0/1>` per shot.
pub fn write_shot_records<W: std::io::Write>(out: W, records: &[ShotRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["shot_seed", "round", "stabilizer_index", "bit"])?;
    for rec in records {
        let seed = rec.shot_seed.to_string();
        for (round, row) in rec.syndromes.iter().enumerate() {
            for (k, &b) in row.iter().enumerate() {
                w.write_record([seed.as_str(), &round.to_string(), &k.to_string(), if b { "1" } else { "0" }])?;
            }
        }
        let bits: String = rec.final_data_bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        w.write_record([seed.as_str(), "final", "", &bits])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_shot_records<R: std::io::Read>(input: R, rounds: usize, n_stabilizers: usize) -> Result<Vec<ShotRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    let mut cur: Option<ShotRecord> = None;
    for row in rd.records() {
        let row = row?;
        let bad = || Error::Parse(format!("bad shot record row {row:?}"));
        let seed: u64 = row.get(0).ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let rec = cur.get_or_insert_with(|| ShotRecord {
            syndromes: vec![vec![false; n_stabilizers]; rounds],
            final_data_bits: Vec::new(),
            shot_seed: seed,
        });
        if row.get(1) == Some("final") {
            rec.final_data_bits = row.get(3).ok_or_else(bad)?.chars().map(|c| c == '1').collect();
            out.push(cur.take().expect("record in progress"));
        } else {
            let round: usize = row.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let k: usize = row.get(2).ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if round >= rounds || k >= n_stabilizers {
                return Err(bad());
            }
            rec.syndromes[round][k] = row.get(3) == Some("1");
        }
    }
    Ok(out)
}
