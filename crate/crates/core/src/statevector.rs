//! Dense state-vector backend.
//!
//! The represented state is `g · X^fx Z^fz · ψ`, where `g` is a global phase,
//! `(fx, fz)` a Pauli frame and `ψ` the stored amplitudes. Pauli noise and
//! conditional resets only touch the frame; a rotation `exp(-iθP)` acts on
//! `ψ` with `θ` negated when the frame anticommutes with `P`.
//!
//! Measured qubits are collapsed lazily: entries of `ψ` whose `mask` bits
//! differ from `val` are stale and treated as zero, and the surviving entries
//! carry an implicit factor `scale`. The next kernel touching the vector folds
//! both in, so a measurement costs no pass of its own when the preceding
//! kernel already produced the qubit's marginal.

use num_complex::Complex64;

use crate::circuit::Axis;
use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// Largest register count accepted (2³⁰ amplitudes = 16 GiB).
pub const MAX_REGISTERS: usize = 30;

/// Norm drift tolerated before a shot is aborted.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Most registers a fused pass may touch.
pub const FUSE_LIMIT: usize = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy)]
struct Queued {
    axis: Axis,
    a: usize,
    t: usize,
    theta: f64,
}

// Amplitudes sharing a local index across a batch of outer indices, as
// separate real and imaginary lanes so the gate arithmetic vectorizes.
const LANES: usize = 16;
type Lane = [f64; LANES];

// A queued rotation in local coordinates (bit masks into the fused buffer).
#[derive(Debug, Clone, Copy)]
enum LocalGate {
    X { t: usize, c: f64, s: f64 },
    Z { t: usize, c: f64, s: f64 },
    Zx { a: usize, t: usize, c: f64, s: f64 },
}

// (c·a0 − i s·a1, −i s·a0 + c·a1) lane by lane.
#[inline(always)]
fn mix(re: &mut [Lane], im: &mut [Lane], j: usize, k: usize, c: f64, s: f64) {
    let (a0r, a0i, a1r, a1i) = (re[j], im[j], re[k], im[k]);
    for l in 0..LANES {
        re[j][l] = c * a0r[l] + s * a1i[l];
        im[j][l] = c * a0i[l] - s * a1r[l];
        re[k][l] = s * a0i[l] + c * a1r[l];
        im[k][l] = c * a1i[l] - s * a0r[l];
    }
}

impl LocalGate {
    fn apply(&self, re: &mut [Lane], im: &mut [Lane]) {
        match *self {
            LocalGate::X { t, c, s } => {
                for j in (0..re.len()).filter(|j| j & t == 0) {
                    mix(re, im, j, j | t, c, s);
                }
            }
            LocalGate::Z { t, c, s } => {
                for j in 0..re.len() {
                    let s = if j & t == 0 { s } else { -s };
                    let (r, i) = (re[j], im[j]);
                    for l in 0..LANES {
                        re[j][l] = c * r[l] + s * i[l];
                        im[j][l] = c * i[l] - s * r[l];
                    }
                }
            }
            LocalGate::Zx { a, t, c, s } => {
                for j in (0..re.len()).filter(|j| j & t == 0) {
                    mix(re, im, j, j | t, c, if j & a == 0 { s } else { -s });
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
    global: Complex64,
    fx: u64,
    fz: u64,
    mask: u64,
    val: u64,
    scale: f64,
    // (qubit, Σ|ψ|² with bit 0, with bit 1), scale included
    marginals: Vec<(usize, f64, f64)>,
    pending: Vec<Queued>,
    pending_mask: u64,
}

impl StateVector {
    /// `|0…0⟩` on `n` registers.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_REGISTERS {
            return Err(Error::TooManyRegisters(n));
        }
        let mut sv = Self {
            n,
            amps: vec![ZERO; 1 << n],
            global: Complex64::new(1.0, 0.0),
            fx: 0,
            fz: 0,
            mask: 0,
            val: 0,
            scale: 1.0,
            marginals: Vec::new(),
            pending: Vec::new(),
            pending_mask: 0,
        };
        sv.reset_all();
        Ok(sv)
    }

    /// Arbitrary normalized state (tests and small examples).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n == 0 || n > MAX_REGISTERS {
            return Err(Error::TooManyRegisters(n));
        }
        let mut sv = Self::new(n)?;
        sv.amps = amps;
        sv.mask = 0;
        sv.val = 0;
        Ok(sv)
    }

    /// Back to `|0…0⟩` without touching the bulk of the vector.
    pub fn reset_all(&mut self) {
        self.global = Complex64::new(1.0, 0.0);
        self.fx = 0;
        self.fz = 0;
        self.mask = self.full_mask();
        self.val = 0;
        self.scale = 1.0;
        self.amps[0] = Complex64::new(1.0, 0.0);
        self.marginals.clear();
        self.pending.clear();
        self.pending_mask = 0;
    }

    pub fn n_registers(&self) -> usize {
        self.n
    }

    /// Bytes held by the amplitude buffer.
    pub fn memory_bytes(&self) -> usize {
        self.amps.len() * std::mem::size_of::<Complex64>()
    }

    fn full_mask(&self) -> u64 {
        (1u64 << self.n) - 1
    }

    fn check(&self, q: usize) {
        assert!(q < self.n, "register {q} out of range for {} registers", self.n);
    }

    /// The represented state as a plain amplitude vector.
    pub fn amplitudes(&mut self) -> Vec<Complex64> {
        self.flush();
        let dim = 1usize << self.n;
        (0..dim)
            .map(|i| {
                let j = i ^ self.fx as usize;
                let sign = if (self.fz as usize & j).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                self.global * sign * self.stored(j)
            })
            .collect()
    }

    fn stored(&self, j: usize) -> Complex64 {
        if (j as u64 & self.mask) == self.val {
            self.amps[j] * self.scale
        } else {
            ZERO
        }
    }

    pub fn norm_sqr(&mut self) -> f64 {
        self.flush();
        let mut s = 0.0;
        self.for_valid(|_, a| s += a.norm_sqr());
        s * self.scale * self.scale
    }

    fn for_valid(&self, mut f: impl FnMut(usize, Complex64)) {
        if self.mask == 0 {
            for (i, a) in self.amps.iter().enumerate() {
                f(i, *a);
            }
        } else {
            let free = !self.mask & self.full_mask();
            let mut i = 0u64;
            loop {
                let idx = (i | self.val) as usize;
                f(idx, self.amps[idx]);
                if i == free {
                    break;
                }
                i = ((i | !free).wrapping_add(1)) & free;
            }
        }
    }

    /// Write zeros into stale entries and fold `scale` into the rest.
    fn materialize(&mut self) {
        if self.mask == 0 && self.scale == 1.0 {
            return;
        }
        let (mask, val, scale) = (self.mask, self.val, self.scale);
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a = if (i as u64 & mask) == val { *a * scale } else { ZERO };
        }
        self.mask = 0;
        self.val = 0;
        self.scale = 1.0;
    }

    /// `exp(-iθP)` on the represented state. Rotations are queued and applied
    /// in fused passes; see [`StateVector::flush`].
    pub fn rotate(&mut self, axis: Axis, qubits: &[usize], theta: f64) {
        for &q in qubits {
            self.check(q);
        }
        let (a, t, flip) = match axis {
            Axis::X => (qubits[0], qubits[0], self.fz >> qubits[0] & 1 == 1),
            Axis::Z => (qubits[0], qubits[0], self.fx >> qubits[0] & 1 == 1),
            Axis::Zx => {
                let (a, t) = (qubits[0], qubits[1]);
                assert_ne!(a, t, "RZX needs two distinct registers");
                (a, t, ((self.fx >> a) ^ (self.fz >> t)) & 1 == 1)
            }
        };
        let support = (1u64 << a) | (1u64 << t);
        if (self.pending_mask | support).count_ones() as usize > FUSE_LIMIT {
            self.flush();
        }
        self.pending.push(Queued { axis, a, t, theta: if flip { -theta } else { theta } });
        self.pending_mask |= support;
    }

    /// Apply all queued rotations in one pass over the valid amplitudes,
    /// folding in any pending projection and recording the marginal of every
    /// qubit the rotations touched.
    pub fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let qs: Vec<usize> = (0..self.n).filter(|&q| self.pending_mask >> q & 1 == 1).collect();
        let k = qs.len();
        let local = |q: usize| qs.iter().position(|&x| x == q).unwrap();
        let gates: Vec<LocalGate> = self
            .pending
            .iter()
            .map(|g| {
                let (c, s) = (g.theta.cos(), g.theta.sin());
                match g.axis {
                    Axis::X => LocalGate::X { t: 1 << local(g.t), c, s },
                    Axis::Z => LocalGate::Z { t: 1 << local(g.t), c, s },
                    Axis::Zx => LocalGate::Zx { a: 1 << local(g.a), t: 1 << local(g.t), c, s },
                }
            })
            .collect();

        let qbits = self.pending_mask;
        let (in_mask, in_val) = (self.mask & qbits, self.val & qbits);
        let (out_mask, out_val) = (self.mask & !qbits, self.val & !qbits);
        let dim = 1usize << k;
        let offsets: Vec<usize> =
            (0..dim).map(|j| (0..k).filter(|l| j >> l & 1 == 1).map(|l| 1usize << qs[l]).sum()).collect();
        let valid: Vec<bool> = offsets.iter().map(|&o| (o as u64 & in_mask) == in_val).collect();
        let free = !(out_mask | qbits) & self.full_mask();
        let mut lane_mask = 0u64;
        for _ in 0..LANES.trailing_zeros() {
            let rest = free & !lane_mask;
            lane_mask |= rest & rest.wrapping_neg();
        }
        let mut lane_off = [0usize; LANES];
        let mut nl = 0;
        {
            // enumerate subsets of lane_mask in increasing order
            let mut i = 0u64;
            loop {
                lane_off[nl] = i as usize;
                nl += 1;
                if i == lane_mask {
                    break;
                }
                i = ((i | !lane_mask).wrapping_add(1)) & lane_mask;
            }
        }
        let outer = free & !lane_mask;
        let scale = self.scale;
        let mut re = [[0.0f64; LANES]; 1 << FUSE_LIMIT];
        let mut im = [[0.0f64; LANES]; 1 << FUSE_LIMIT];
        let mut probs = [0.0f64; 1 << FUSE_LIMIT];
        let amps = &mut self.amps;

        let mut i = 0u64;
        loop {
            let base = (i | out_val) as usize;
            for j in 0..dim {
                if valid[j] {
                    let o = base + offsets[j];
                    for l in 0..nl {
                        let a = amps[o + lane_off[l]];
                        re[j][l] = a.re * scale;
                        im[j][l] = a.im * scale;
                    }
                } else {
                    re[j] = [0.0; LANES];
                    im[j] = [0.0; LANES];
                }
            }
            for g in &gates {
                g.apply(&mut re[..dim], &mut im[..dim]);
            }
            for j in 0..dim {
                let o = base + offsets[j];
                let mut p = 0.0;
                for l in 0..nl {
                    p += re[j][l] * re[j][l] + im[j][l] * im[j][l];
                    amps[o + lane_off[l]] = Complex64::new(re[j][l], im[j][l]);
                }
                probs[j] += p;
            }
            if i == outer {
                break;
            }
            i = ((i | !outer).wrapping_add(1)) & outer;
        }

        self.mask = out_mask;
        self.val = out_val;
        self.scale = 1.0;
        self.marginals = qs
            .iter()
            .enumerate()
            .map(|(l, &q)| {
                let (mut p0, mut p1) = (0.0, 0.0);
                for (j, p) in probs[..dim].iter().enumerate() {
                    if j >> l & 1 == 1 {
                        p1 += p;
                    } else {
                        p0 += p;
                    }
                }
                (q, p0, p1)
            })
            .collect();
        self.pending.clear();
        self.pending_mask = 0;
    }

    /// Left-multiply the represented state by a Pauli.
    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        self.check(q);
        let bit = 1u64 << q;
        let ax = self.fx & bit != 0;
        match p {
            Pauli::I => {}
            Pauli::X => self.fx ^= bit,
            Pauli::Z => {
                if ax {
                    self.global = -self.global;
                }
                self.fz ^= bit;
            }
            Pauli::Y => {
                self.global *= Complex64::new(0.0, if ax { -1.0 } else { 1.0 });
                self.fx ^= bit;
                self.fz ^= bit;
            }
        }
    }

    // (p0, p1) of ψ for qubit q, scale included.
    fn stored_marginal(&mut self, q: usize) -> (f64, f64) {
        if self.pending_mask >> q & 1 == 1 {
            self.flush();
        }
        if let Some(&(_, p0, p1)) = self.marginals.iter().find(|m| m.0 == q) {
            return (p0, p1);
        }
        let bit = 1usize << q;
        let (mut p0, mut p1) = (0.0, 0.0);
        self.for_valid(|i, a| {
            if i & bit == 0 {
                p0 += a.norm_sqr();
            } else {
                p1 += a.norm_sqr();
            }
        });
        let s2 = self.scale * self.scale;
        let m = (p0 * s2, p1 * s2);
        self.marginals.push((q, m.0, m.1));
        m
    }

    /// Probability of reading 1 on `q`.
    pub fn probability_one(&mut self, q: usize) -> f64 {
        self.check(q);
        let bit = 1u64 << q;
        let flipped = self.fx & bit != 0;
        if self.mask & bit != 0 && self.pending_mask & bit == 0 {
            return if (self.val & bit != 0) ^ flipped { 1.0 } else { 0.0 };
        }
        let (p0, p1) = self.stored_marginal(q);
        let p1_true = if flipped { p0 } else { p1 };
        p1_true / (p0 + p1)
    }

    /// Z measurement; outcome 1 iff `u < P(1)`. Norm health is checked
    /// whenever the outcome is not already fixed by an earlier collapse.
    pub fn measure(&mut self, q: usize, u: f64) -> Result<bool> {
        self.check(q);
        let bit = 1u64 << q;
        let flipped = self.fx & bit != 0;
        if self.pending_mask & bit != 0 {
            self.flush();
        }
        let b = if self.mask & bit != 0 {
            let b = self.val & bit != 0;
            let _ = u < if b ^ flipped { 1.0 } else { 0.0 };
            b
        } else {
            let (p0, p1) = self.stored_marginal(q);
            let norm = p0 + p1;
            if norm.is_nan() || (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NumericHealth { norm });
            }
            let p1_true = if flipped { p0 } else { p1 } / norm;
            let b = (u < p1_true) ^ flipped;
            let pb = if b { p1 } else { p0 };
            self.mask |= bit;
            if b {
                self.val |= bit;
            }
            self.scale /= pb.sqrt();
            self.marginals.clear();
            b
        };
        if self.fz & bit != 0 {
            if b {
                self.global = -self.global;
            }
            self.fz &= !bit;
        }
        Ok(b ^ flipped)
    }

    /// Measure, then flip to `|0⟩` in the frame.
    pub fn reset(&mut self, q: usize, u: f64) -> Result<()> {
        if self.measure(q, u)? {
            self.fx ^= 1u64 << q;
        }
        Ok(())
    }

    /// Project onto the +1 eigenspace of `X_S` (S = `qubits`) and renormalize.
    pub fn postselect_x_product(&mut self, qubits: &[usize]) -> Result<()> {
        let s: usize = qubits.iter().map(|&q| 1usize << q).fold(0, |a, b| a | b);
        if s == 0 {
            return Ok(());
        }
        self.flush();
        self.materialize();
        let sign = if (self.fz as usize & s).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        let low = s & s.wrapping_neg();
        for i in 0..self.amps.len() {
            if i & low == 0 {
                let j = i ^ s;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = (a + b * sign) * 0.5;
                self.amps[j] = (b + a * sign) * 0.5;
            }
        }
        let norm = self.norm_sqr();
        if norm < 1e-12 {
            return Err(Error::Unsupported("postselection onto a zero-probability eigenspace".into()));
        }
        self.scale = 1.0 / norm.sqrt();
        self.marginals.clear();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use crate::linalg::Matrix;
    use crate::noise::{gate_unitary, pauli_matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let v: Vec<Complex64> =
            (0..1 << n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.into_iter().map(|a| a / norm).collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn kernels_match_dense_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=4 {
            for _ in 0..20 {
                let psi = random_state(n, &mut rng);
                let mut sv = StateVector::from_amplitudes(psi.clone()).unwrap();
                let mut dense = psi;
                // sprinkle frame Paulis and rotations in a random order
                for _ in 0..12 {
                    let a = rng.random_range(0..n);
                    let mut b = rng.random_range(0..n);
                    while b == a {
                        b = rng.random_range(0..n);
                    }
                    match rng.random_range(0..4) {
                        0 => {
                            let p = Pauli::ALL[rng.random_range(0..4)];
                            sv.apply_pauli(a, p);
                            dense = pauli_matrix(p).embed(&[a], n).apply(&dense);
                        }
                        k => {
                            let g = [GateKind::Rx90Dag, GateKind::Rz90, GateKind::Rzx90][k - 1];
                            let (axis, sign) = g.rotation().unwrap();
                            let qs: Vec<usize> = if g.arity() == 2 { vec![a, b] } else { vec![a] };
                            let extra = rng.random::<f64>() * 0.1;
                            sv.rotate(axis, &qs, sign * (FRAC_PI_4 + extra));
                            let u = gate_unitary(g).unwrap();
                            let over = match axis {
                                Axis::X => Matrix::pauli_x(),
                                Axis::Z => Matrix::pauli_z(),
                                Axis::Zx => Matrix::pauli_x().kron(&Matrix::pauli_z()),
                            };
                            let full = Matrix::pauli_exp(&over, sign * extra).mul(&u);
                            dense = full.embed(&qs, n).apply(&dense);
                        }
                    }
                }
                assert!(max_diff(&sv.amplitudes(), &dense) < 1e-12);
                assert!((sv.norm_sqr() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn measurement_collapse_matches_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = 4;
            let psi = random_state(n, &mut rng);
            let mut sv = StateVector::from_amplitudes(psi.clone()).unwrap();
            sv.apply_pauli(1, Pauli::Y);
            let mut dense = pauli_matrix(Pauli::Y).embed(&[1], n).apply(&psi);
            let q = rng.random_range(0..n);
            let u = rng.random::<f64>();
            let p1: f64 = dense.iter().enumerate().filter(|(i, _)| i >> q & 1 == 1).map(|(_, a)| a.norm_sqr()).sum();
            assert!((sv.probability_one(q) - p1).abs() < 1e-12);
            let out = sv.measure(q, u).unwrap();
            assert_eq!(out, u < p1);
            let keep = if out { p1 } else { 1.0 - p1 };
            for (i, a) in dense.iter_mut().enumerate() {
                *a = if (i >> q & 1 == 1) == out { *a / keep.sqrt() } else { ZERO };
            }
            // follow with a kernel that folds the pending projection
            sv.rotate(Axis::X, &[(q + 1) % n], FRAC_PI_4);
            dense = gate_unitary(GateKind::Rx90).unwrap().embed(&[(q + 1) % n], n).apply(&dense);
            assert!(max_diff(&sv.amplitudes(), &dense) < 1e-12);
        }
    }

    #[test]
    fn basic_examples() {
        let mut sv = StateVector::new(1).unwrap();
        sv.rotate(Axis::X, &[0], FRAC_PI_4);
        assert!((sv.probability_one(0) - 0.5).abs() < 1e-15);
        let mut sv = StateVector::new(1).unwrap();
        sv.rotate(Axis::Z, &[0], FRAC_PI_4);
        assert!(sv.probability_one(0).abs() < 1e-15);
        let mut sv = StateVector::new(1).unwrap();
        sv.apply_pauli(0, Pauli::X);
        assert!(sv.measure(0, 0.999_999).unwrap());
        sv.reset(0, 0.3).unwrap();
        assert!(!sv.measure(0, 0.0).unwrap());
        sv.reset(0, 0.0).unwrap();
        assert_eq!(sv.probability_one(0), 0.0);
    }

    #[test]
    fn reset_leaves_entangled_partner_marginal() {
        let mut sv = StateVector::new(2).unwrap();
        sv.rotate(Axis::X, &[1], FRAC_PI_4);
        sv.rotate(Axis::Zx, &[1, 0], FRAC_PI_4);
        let before = sv.probability_one(1);
        sv.reset(0, 0.7).unwrap();
        assert!((sv.probability_one(1) - before).abs() < 1e-12);
        assert_eq!(sv.probability_one(0), 0.0);
    }

    #[test]
    fn inverse_pair_restores_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_state(3, &mut rng);
        let mut sv = StateVector::from_amplitudes(psi.clone()).unwrap();
        sv.rotate(Axis::Zx, &[2, 0], FRAC_PI_4);
        sv.rotate(Axis::Zx, &[2, 0], -FRAC_PI_4);
        assert!(max_diff(&sv.amplitudes(), &psi) < 1e-12);
    }

    #[test]
    fn reset_all_is_cheap_and_exact() {
        let mut sv = StateVector::new(3).unwrap();
        sv.rotate(Axis::X, &[0], 0.3);
        sv.rotate(Axis::X, &[2], 0.7);
        sv.reset_all();
        let amps = sv.amplitudes();
        assert_eq!(amps[0], Complex64::new(1.0, 0.0));
        assert!(amps[1..].iter().all(|a| *a == ZERO));
    }

    #[test]
    fn postselection_builds_x_eigenstate() {
        let mut sv = StateVector::new(2).unwrap();
        sv.postselect_x_product(&[0, 1]).unwrap();
        let h = 0.5f64.sqrt();
        let want = [h, 0.0, 0.0, h].map(|x| Complex64::new(x, 0.0));
        assert!(max_diff(&sv.amplitudes(), &want) < 1e-15);
    }
}
