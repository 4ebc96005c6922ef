//! Stabilizer tableau backend (Aaronson–Gottesman, with destabilizers).
//!
//! Rows `0..n` are destabilizers, `n..2n` stabilizers and `2n` a scratch row.
//! Each row stores bit-packed `x` and `z` vectors plus a sign bit; `(1, 1)`
//! denotes the Hermitian `Y`.

use crate::circuit::Axis;
use crate::error::{Error, Result};
use crate::pauli::Pauli;

#[derive(Debug, Clone)]
pub struct Tableau {
    n: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    r: Vec<bool>,
    last_random: bool,
}

// Exponent k (mod 4) with P1·P2 = i^k (P1 ⊕ P2), summed over packed words.
fn product_phase(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u32 {
    let (mut plus, mut minus) = (0u32, 0u32);
    for w in 0..x1.len() {
        let (a, b, c, d) = (x1[w], z1[w], x2[w], z2[w]);
        let p = (a & b & !c & d) | (a & !b & c & d) | (!a & b & c & !d);
        let m = (a & b & c & !d) | (a & !b & !c & d) | (!a & b & c & d);
        plus += p.count_ones();
        minus += m.count_ones();
    }
    (plus + 4 * x1.len() as u32 * 64 - minus) % 4
}

// g-function of a single qubit: exponent of i in P1·P2.
fn single_phase(p1: Pauli, x2: bool, z2: bool) -> i32 {
    match p1 {
        Pauli::I => 0,
        Pauli::X => {
            if z2 {
                if x2 { 1 } else { -1 }
            } else {
                0
            }
        }
        Pauli::Y => z2 as i32 - x2 as i32,
        Pauli::Z => {
            if x2 {
                if z2 { -1 } else { 1 }
            } else {
                0
            }
        }
    }
}

impl Tableau {
    /// `|0…0⟩` on `n` registers.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64);
        let rows = 2 * n + 1;
        let mut t = Self { n, words, x: vec![0; rows * words], z: vec![0; rows * words], r: vec![false; rows], last_random: false };
        t.reset_all();
        t
    }

    pub fn reset_all(&mut self) {
        self.x.fill(0);
        self.z.fill(0);
        self.r.fill(false);
        for i in 0..self.n {
            self.set_x(i, i, true);
            self.set_z(self.n + i, i, true);
        }
        self.last_random = false;
    }

    pub fn n_registers(&self) -> usize {
        self.n
    }

    /// Whether the last measurement had a random outcome.
    pub fn last_measurement_random(&self) -> bool {
        self.last_random
    }

    fn xbit(&self, row: usize, q: usize) -> bool {
        self.x[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn zbit(&self, row: usize, q: usize) -> bool {
        self.z[row * self.words + q / 64] >> (q % 64) & 1 == 1
    }

    fn set_x(&mut self, row: usize, q: usize, v: bool) {
        let w = &mut self.x[row * self.words + q / 64];
        *w = (*w & !(1 << (q % 64))) | ((v as u64) << (q % 64));
    }

    fn set_z(&mut self, row: usize, q: usize, v: bool) {
        let w = &mut self.z[row * self.words + q / 64];
        *w = (*w & !(1 << (q % 64))) | ((v as u64) << (q % 64));
    }

    fn anticommutes(&self, row: usize, p: &[(usize, Pauli)]) -> bool {
        p.iter().fold(false, |acc, &(q, pq)| {
            let (px, pz) = pq.bits();
            acc ^ ((px & self.zbit(row, q)) ^ (pz & self.xbit(row, q)))
        })
    }

    /// row h ← row i · row h.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.words;
        let k = product_phase(
            &self.x[i * w..(i + 1) * w],
            &self.z[i * w..(i + 1) * w],
            &self.x[h * w..(h + 1) * w],
            &self.z[h * w..(h + 1) * w],
        );
        let total = (2 * self.r[h] as u32 + 2 * self.r[i] as u32 + k) % 4;
        debug_assert!(total.is_multiple_of(2), "rowsum of anticommuting rows");
        self.r[h] = total == 2;
        for j in 0..w {
            self.x[h * w + j] ^= self.x[i * w + j];
            self.z[h * w + j] ^= self.z[i * w + j];
        }
    }

    /// Conjugate by `exp(-i·σ·π/4·P)` for a sparse Pauli `P`.
    pub fn rotate_quarter(&mut self, p: &[(usize, Pauli)], sigma: i32) {
        for row in 0..2 * self.n {
            if !self.anticommutes(row, p) {
                continue;
            }
            // U Q U† = -iσ P Q
            let mut k: i32 = 0;
            for &(q, pq) in p {
                k += single_phase(pq, self.xbit(row, q), self.zbit(row, q));
            }
            let e = (k - sigma).rem_euclid(4);
            debug_assert!(e % 2 == 0);
            if e == 2 {
                self.r[row] = !self.r[row];
            }
            for &(q, pq) in p {
                let (px, pz) = pq.bits();
                let (rx, rz) = (self.xbit(row, q), self.zbit(row, q));
                self.set_x(row, q, rx ^ px);
                self.set_z(row, q, rz ^ pz);
            }
        }
    }

    /// Apply a Pauli gate: flips the sign of every anticommuting row.
    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        if p == Pauli::I {
            return;
        }
        let term = [(q, p)];
        for row in 0..2 * self.n {
            if self.anticommutes(row, &term) {
                self.r[row] = !self.r[row];
            }
        }
    }

    /// Sign of `P` if it (up to sign) belongs to the stabilizer group.
    pub fn expectation(&mut self, p: &[(usize, Pauli)]) -> Option<bool> {
        if (self.n..2 * self.n).any(|row| self.anticommutes(row, p)) {
            return None;
        }
        let s = 2 * self.n;
        self.clear_row(s);
        for i in 0..self.n {
            if self.anticommutes(i, p) {
                self.rowsum(s, i + self.n);
            }
        }
        // scratch = ±P; compare Pauli content and report the sign bit
        for &(q, pq) in p {
            debug_assert_eq!((self.xbit(s, q), self.zbit(s, q)), pq.bits());
        }
        Some(self.r[s])
    }

    fn clear_row(&mut self, row: usize) {
        let w = self.words;
        self.x[row * w..(row + 1) * w].fill(0);
        self.z[row * w..(row + 1) * w].fill(0);
        self.r[row] = false;
    }

    fn set_row(&mut self, row: usize, p: &[(usize, Pauli)], sign: bool) {
        self.clear_row(row);
        for &(q, pq) in p {
            let (px, pz) = pq.bits();
            self.set_x(row, q, px);
            self.set_z(row, q, pz);
        }
        self.r[row] = sign;
    }

    fn copy_row(&mut self, dst: usize, src: usize) {
        let w = self.words;
        self.x.copy_within(src * w..(src + 1) * w, dst * w);
        self.z.copy_within(src * w..(src + 1) * w, dst * w);
        self.r[dst] = self.r[src];
    }

    /// Measure a Pauli product. `choose` picks the outcome (true = -1) when
    /// it is random; a deterministic outcome is returned unchanged.
    fn measure_pauli(&mut self, p: &[(usize, Pauli)], choose: impl FnOnce() -> bool) -> (bool, bool) {
        let n = self.n;
        match (n..2 * n).find(|&row| self.anticommutes(row, p)) {
            Some(pivot) => {
                for row in 0..2 * n {
                    if row != pivot && self.anticommutes(row, p) {
                        self.rowsum(row, pivot);
                    }
                }
                self.copy_row(pivot - n, pivot);
                let outcome = choose();
                self.set_row(pivot, p, outcome);
                (outcome, true)
            }
            None => (self.expectation(p).expect("commuting Pauli is determined"), false),
        }
    }

    /// Z measurement; a random outcome is 1 iff `u < 0.5`.
    pub fn measure(&mut self, q: usize, u: f64) -> bool {
        let (outcome, random) = self.measure_pauli(&[(q, Pauli::Z)], || u < 0.5);
        self.last_random = random;
        outcome
    }

    pub fn reset(&mut self, q: usize, u: f64) {
        if self.measure(q, u) {
            self.apply_pauli(q, Pauli::X);
        }
    }

    /// Force the +1 outcome of `X_S`.
    pub fn postselect_x_product(&mut self, qubits: &[usize]) -> Result<()> {
        let p: Vec<(usize, Pauli)> = qubits.iter().map(|&q| (q, Pauli::X)).collect();
        let (outcome, _) = self.measure_pauli(&p, || false);
        if outcome {
            return Err(Error::Unsupported("postselection onto a zero-probability eigenspace".into()));
        }
        Ok(())
    }

    /// Quarter-turn rotation `exp(-iθP)`; only `θ = ±π/4` is Clifford.
    pub fn rotate(&mut self, axis: Axis, qubits: &[usize], theta: f64) -> Result<()> {
        let q = std::f64::consts::FRAC_PI_4;
        let sigma = if (theta - q).abs() < 1e-12 {
            1
        } else if (theta + q).abs() < 1e-12 {
            -1
        } else {
            return Err(Error::Unsupported(format!("non-Clifford rotation angle {theta}")));
        };
        let p: Vec<(usize, Pauli)> = match axis {
            Axis::X => vec![(qubits[0], Pauli::X)],
            Axis::Z => vec![(qubits[0], Pauli::Z)],
            Axis::Zx => vec![(qubits[0], Pauli::Z), (qubits[1], Pauli::X)],
        };
        self.rotate_quarter(&p, sigma);
        Ok(())
    }
}
