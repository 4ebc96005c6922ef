//! Small dense complex matrices for gate definitions and brute-force checks.
//!
//! Basis ordering: operand `k` of a multi-qubit matrix is bit `k` of the
//! basis index (operand 0 least significant).

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self::from_rows(&[&[o, l], &[l, o]])
    }

    pub fn pauli_y() -> Self {
        let (o, i) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0));
        Self::from_rows(&[&[o, -i], &[i, o]])
    }

    pub fn pauli_z() -> Self {
        let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        Self::from_rows(&[&[l, o], &[o, -l]])
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Matrix {
        Matrix { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim);
        Matrix { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn adjoint(&self) -> Matrix {
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// `self ⊗ other` with `other` on the low bits: `(A ⊗ B)` acts as A on the
    /// high operand and B on the low operand.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (n, m) = (self.dim, other.dim);
        let mut out = Matrix::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = self[(i, j)] * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `exp(-i θ P)` for an involutory `P`.
    pub fn pauli_exp(p: &Matrix, theta: f64) -> Matrix {
        let id = Matrix::identity(p.dim);
        id.scale(Complex64::new(theta.cos(), 0.0)).add(&p.scale(Complex64::new(0.0, -theta.sin())))
    }

    /// Embed a 1- or 2-operand matrix acting on `qubits` into `n` qubits.
    pub fn embed(&self, qubits: &[usize], n: usize) -> Matrix {
        let k = qubits.len();
        assert_eq!(1 << k, self.dim);
        let dim = 1usize << n;
        let mut out = Matrix::zeros(dim);
        let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
        for col in 0..dim {
            let sub_col: usize = qubits.iter().enumerate().map(|(b, q)| ((col >> q) & 1) << b).sum();
            for sub_row in 0..self.dim {
                let v = self[(sub_row, sub_col)];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut row = col & !mask;
                for (b, q) in qubits.iter().enumerate() {
                    row |= ((sub_row >> b) & 1) << q;
                }
                out[(row, col)] += v;
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}
