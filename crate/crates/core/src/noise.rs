//! Circuit-level noise: depolarizing channels after every op and coherent
//! over-rotation after every rotation gate.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Axis, Circuit, CircuitOp, GateKind, NoiseTag};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::pauli::Pauli;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    p: f64,
    c: f64,
}

impl NoiseParams {
    pub fn new(p: f64, c: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidNoise(format!("p = {p} outside [0, 1)")));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidNoise(format!("c = {c} must be finite and non-negative")));
        }
        let params = Self { p, c };
        if params.theta() >= std::f64::consts::PI {
            return Err(Error::InvalidNoise(format!("over-rotation angle {} ≥ π", params.theta())));
        }
        Ok(params)
    }

    pub fn noiseless() -> Self {
        Self { p: 0.0, c: 0.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Exponent of the over-rotation unitary, `c√p`.
    pub fn epsilon(&self) -> f64 {
        self.c * self.p.sqrt()
    }

    /// Over-rotation angle `θ = 2c√p`.
    pub fn theta(&self) -> f64 {
        2.0 * self.epsilon()
    }

    /// Bit-flip probability of one over-rotated quarter turn, `sin²(c√p)`.
    pub fn flip_probability(&self) -> f64 {
        self.epsilon().sin().powi(2)
    }
}

/// How CR participants are treated at CR steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrNoiseMode {
    /// Only the two-qubit channel.
    #[default]
    Replace,
    /// One-qubit channel on each participant, then the two-qubit channel.
    Stack,
}

impl FromStr for CrNoiseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replace" => Ok(CrNoiseMode::Replace),
            "stack" => Ok(CrNoiseMode::Stack),
            _ => Err(Error::Config(format!("cr_noise_mode must be replace|stack, got '{s}'"))),
        }
    }
}

impl fmt::Display for CrNoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrNoiseMode::Replace => "replace",
            CrNoiseMode::Stack => "stack",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliTerm {
    One(Pauli),
    Two(Pauli, Pauli),
}

/// Single-qubit depolarizing outcome from one uniform draw `u ∈ [0, 1)`.
pub fn depolarizing_1q_from_uniform(p: f64, u: f64) -> Pauli {
    if u >= p {
        return Pauli::I;
    }
    let k = ((u / p * 3.0) as usize).min(2);
    [Pauli::X, Pauli::Y, Pauli::Z][k]
}

/// Two-qubit depolarizing outcome `(P_first, P_second)` from one uniform draw.
pub fn depolarizing_2q_from_uniform(p: f64, u: f64) -> (Pauli, Pauli) {
    if u >= p {
        return (Pauli::I, Pauli::I);
    }
    let k = 1 + ((u / p * 15.0) as usize).min(14);
    (Pauli::ALL[k / 4], Pauli::ALL[k % 4])
}

pub fn sample_depolarizing_1q<R: Rng + ?Sized>(params: &NoiseParams, rng: &mut R) -> PauliTerm {
    PauliTerm::One(depolarizing_1q_from_uniform(params.p, rng.random::<f64>()))
}

pub fn sample_depolarizing_2q<R: Rng + ?Sized>(params: &NoiseParams, rng: &mut R) -> PauliTerm {
    let (a, b) = depolarizing_2q_from_uniform(params.p, rng.random::<f64>());
    PauliTerm::Two(a, b)
}

fn axis_matrix(axis: Axis) -> Matrix {
    match axis {
        Axis::X => Matrix::pauli_x(),
        Axis::Z => Matrix::pauli_z(),
        // operand 0 (low bit) carries Z, operand 1 carries X
        Axis::Zx => Matrix::pauli_x().kron(&Matrix::pauli_z()),
    }
}

/// Ideal unitary of a rotation gate (operand 0 = least significant bit).
pub fn gate_unitary(gate: GateKind) -> Option<Matrix> {
    let (axis, sign) = gate.rotation()?;
    Some(Matrix::pauli_exp(&axis_matrix(axis), sign * std::f64::consts::FRAC_PI_4))
}

/// `exp(-i c√p A)` with `A` the gate's signed generator.
pub fn coherent_overrotation_unitary(gate: GateKind, params: &NoiseParams) -> Result<Matrix> {
    let (axis, sign) = gate
        .rotation()
        .ok_or_else(|| Error::Unsupported(format!("{gate} carries no coherent over-rotation")))?;
    Ok(Matrix::pauli_exp(&axis_matrix(axis), sign * params.epsilon()))
}

/// Stochastic channel attached after an op.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Depol1(usize),
    Depol2(usize, usize),
}

/// Stochastic channels following `op`, in application order.
pub fn op_channels(op: &CircuitOp, mode: CrNoiseMode) -> impl Iterator<Item = Channel> {
    let q = op.qubits();
    let list: [Option<Channel>; 3] = match op.noise_tag {
        NoiseTag::TwoQubitAfterCr => match mode {
            CrNoiseMode::Replace => [Some(Channel::Depol2(q[0], q[1])), None, None],
            CrNoiseMode::Stack => {
                [Some(Channel::Depol1(q[0])), Some(Channel::Depol1(q[1])), Some(Channel::Depol2(q[0], q[1]))]
            }
        },
        NoiseTag::OneQubitStep => [Some(Channel::Depol1(q[0])), None, None],
        NoiseTag::CoherentRotation | NoiseTag::None => [None, None, None],
    };
    list.into_iter().flatten()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLocation {
    pub op_index: usize,
    pub kind: NoiseTag,
    pub qubits: Vec<usize>,
    /// Over-rotation exponent for coherent locations, 0 otherwise.
    pub epsilon: f64,
}

/// A circuit with every noise location spelled out in execution order.
#[derive(Debug, Clone)]
pub struct AnnotatedCircuit<'a> {
    pub circuit: &'a Circuit,
    pub locations: Vec<NoiseLocation>,
}

impl AnnotatedCircuit<'_> {
    /// Stochastic locations only; their positions are the fault-injection indices.
    pub fn stochastic(&self) -> impl Iterator<Item = &NoiseLocation> {
        self.locations.iter().filter(|l| l.kind != NoiseTag::CoherentRotation)
    }
}

pub fn noise_locations<'a>(circuit: &'a Circuit, params: &NoiseParams, mode: CrNoiseMode) -> AnnotatedCircuit<'a> {
    let mut locations = Vec::new();
    for (i, op) in circuit.ops.iter().enumerate() {
        if op.gate.is_rotation() && params.c > 0.0 {
            locations.push(NoiseLocation {
                op_index: i,
                kind: NoiseTag::CoherentRotation,
                qubits: op.qubits().to_vec(),
                epsilon: params.epsilon(),
            });
        }
        for ch in op_channels(op, mode) {
            let (kind, qubits) = match ch {
                Channel::Depol1(q) => (NoiseTag::OneQubitStep, vec![q]),
                Channel::Depol2(a, b) => (NoiseTag::TwoQubitAfterCr, vec![a, b]),
            };
            locations.push(NoiseLocation { op_index: i, kind, qubits, epsilon: 0.0 });
        }
    }
    AnnotatedCircuit { circuit, locations }
}

/// Matrix of a single-qubit Pauli.
pub fn pauli_matrix(p: Pauli) -> Matrix {
    match p {
        Pauli::I => Matrix::identity(2),
        Pauli::X => Matrix::pauli_x(),
        Pauli::Y => Matrix::pauli_y(),
        Pauli::Z => Matrix::pauli_z(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_validation() {
        assert!(NoiseParams::new(1.0, 0.0).is_err());
        assert!(NoiseParams::new(-0.1, 0.0).is_err());
        assert!(NoiseParams::new(0.1, -1.0).is_err());
        assert!(NoiseParams::new(0.5, 3.0).is_err());
        assert!(NoiseParams::new(0.5, 1.0).is_ok());
    }

    #[test]
    fn zero_p_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = NoiseParams::new(0.0, 0.0).unwrap();
        for _ in 0..1000 {
            assert_eq!(sample_depolarizing_1q(&params, &mut rng), PauliTerm::One(Pauli::I));
            assert_eq!(sample_depolarizing_2q(&params, &mut rng), PauliTerm::Two(Pauli::I, Pauli::I));
        }
    }

    #[test]
    fn uniform_partition_covers_all_outcomes() {
        let p = 0.6;
        let n = 15_000;
        let mut seen = std::collections::HashMap::new();
        for k in 0..n {
            let u = (k as f64 + 0.5) / n as f64 * p;
            *seen.entry(depolarizing_2q_from_uniform(p, u)).or_insert(0) += 1;
        }
        assert_eq!(seen.len(), 15);
        assert!(!seen.contains_key(&(Pauli::I, Pauli::I)));
        assert!(seen.values().all(|&c| c == 1000));
    }

    #[test]
    fn full_depolarizing_point_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = NoiseParams::new(0.75, 0.0).unwrap();
        let n = 400_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let PauliTerm::One(p) = sample_depolarizing_1q(&params, &mut rng) else { unreachable!() };
            counts[p as usize] += 1;
        }
        let sigma = (0.25f64 * 0.75 / n as f64).sqrt();
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn coherent_unitary_is_unitary_and_trivial_at_c0() {
        let params = NoiseParams::new(1e-2, 0.7).unwrap();
        for g in GateKind::ALL.into_iter().filter(|g| g.is_rotation()) {
            let u = coherent_overrotation_unitary(g, &params).unwrap();
            let id = Matrix::identity(u.dim);
            assert!(u.adjoint().mul(&u).max_abs_diff(&id) < 1e-12);
            let u0 = coherent_overrotation_unitary(g, &NoiseParams::new(1e-2, 0.0).unwrap()).unwrap();
            assert!(u0.max_abs_diff(&id) < 1e-15);
        }
        assert!(coherent_overrotation_unitary(GateKind::Wait, &params).is_err());
        assert!(coherent_overrotation_unitary(GateKind::MeasureZ, &params).is_err());
    }

    #[test]
    fn overrotation_extends_dag_gates_backwards() {
        let params = NoiseParams::new(1e-2, 1.0).unwrap();
        for (g, dag) in [(GateKind::Rx90, GateKind::Rx90Dag), (GateKind::Rzx90, GateKind::Rzx90Dag)] {
            let total = coherent_overrotation_unitary(g, &params).unwrap().mul(&gate_unitary(g).unwrap());
            let total_dag = coherent_overrotation_unitary(dag, &params).unwrap().mul(&gate_unitary(dag).unwrap());
            // the over-rotated DAG is the exact inverse of the over-rotated forward gate
            assert!(total.mul(&total_dag).max_abs_diff(&Matrix::identity(total.dim)) < 1e-12);
        }
    }
}
