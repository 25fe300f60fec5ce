//! Minimal dense complex linear algebra for sector-sized matrices.
//!
//! Every matrix this crate touches is a sector block or a reduced density
//! matrix of dimension at most a few thousand, and the only decomposition
//! needed is a Hermitian eigendecomposition for von Neumann entropies and
//! PSD checks. A cyclic complex Jacobi sweep covers that without linking an
//! external LAPACK, and its O(n^3)-per-sweep cost is irrelevant at these
//! sizes. Correctness is pinned by reconstruction tests against randomly
//! conjugated diagonal matrices.

use num_complex::Complex64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "ragged matrix rows");
        CMat { dim, data: rows.into_iter().flatten().collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    #[inline]
    pub fn add_assign_at(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] += v;
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch in matvec");
        let n = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMat { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude among entries off the main diagonal.
    pub fn max_abs_offdiag(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    m = m.max(self.get(i, j).norm());
                }
            }
        }
        m
    }

    /// Departure from Hermitian symmetry, max |A[i][j] - conj(A[j][i])|.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Unitary matrix whose column k is the eigenvector for `values[k]`.
    pub vectors: CMat,
}

/// Cyclic complex Jacobi eigendecomposition. The input must be Hermitian
/// within rounding; the strictly lower triangle is ignored in favor of the
/// conjugate of the upper one.
pub fn hermitian_eigen(a: &CMat) -> HermitianEigen {
    let n = a.dim();
    let mut m = a.clone();
    // Symmetrize so rounding asymmetry cannot bias the sweep.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
            m.set(i, j, avg);
            m.set(j, i, avg.conj());
        }
        let d = m.get(i, i);
        m.set(i, i, Complex64::new(d.re, 0.0));
    }
    let mut v = CMat::identity(n);
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let stop = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * m.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= stop / (n as f64) {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G differs from identity only at (p,p)=c, (p,q)=s*phase,
                // (q,p)=-s*conj(phase), (q,q)=c; update M <- G^H M G, V <- V G.
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, mkp * c - mkq * s * phase.conj());
                    m.set(k, q, mkp * s * phase + mkq * c);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, mpk * c - mqk * s * phase);
                    m.set(q, k, mpk * s * phase.conj() + mqk * c);
                }
                // The pivot is analytically zero after the rotation.
                m.set(p, q, Complex64::new(0.0, 0.0));
                m.set(q, p, Complex64::new(0.0, 0.0));
                let dp = m.get(p, p);
                let dq = m.get(q, q);
                m.set(p, p, Complex64::new(dp.re, 0.0));
                m.set(q, q, Complex64::new(dq.re, 0.0));
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * c - vkq * s * phase.conj());
                    v.set(k, q, vkp * s * phase + vkq * c);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m.get(i, i).re.partial_cmp(&m.get(j, j).re).expect("NaN eigenvalue")
    });
    let values: Vec<f64> = order.iter().map(|&i| m.get(i, i).re).collect();
    let mut vectors = CMat::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, new_col, v.get(row, old_col));
        }
    }
    HermitianEigen { values, vectors }
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    hermitian_eigen(a).values
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_unitary(dim: usize, rng: &mut StdRng) -> CMat {
        // Gram-Schmidt on a complex Ginibre sample.
        let mut cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
                    })
                    .collect()
            })
            .collect();
        for j in 0..dim {
            for k in 0..j {
                let proj: Complex64 = (0..dim)
                    .map(|i| cols[k][i].conj() * cols[j][i])
                    .sum();
                for i in 0..dim {
                    let correction = proj * cols[k][i];
                    cols[j][i] -= correction;
                }
            }
            let norm: f64 = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for i in 0..dim {
                cols[j][i] /= norm;
            }
        }
        let mut u = CMat::zeros(dim);
        for j in 0..dim {
            for i in 0..dim {
                u.set(i, j, cols[j][i]);
            }
        }
        u
    }

    #[test]
    fn jacobi_recovers_spectrum_of_conjugated_diagonal() {
        let mut rng = StdRng::seed_from_u64(7);
        for dim in [2usize, 3, 5, 8, 13] {
            let mut expected: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let u = random_unitary(dim, &mut rng);
            let mut d = CMat::zeros(dim);
            for (i, &lam) in expected.iter().enumerate() {
                d.set(i, i, Complex64::new(lam, 0.0));
            }
            let a = u.matmul(&d).matmul(&u.adjoint());
            let eig = hermitian_eigen(&a);
            expected.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (got, want) in eig.values.iter().zip(&expected) {
                assert!(
                    (got - want).abs() < 1e-12,
                    "dim {dim}: eigenvalue {got} != {want}"
                );
            }
            // Reconstruction A = V diag V^H.
            let mut d2 = CMat::zeros(dim);
            for (i, &lam) in eig.values.iter().enumerate() {
                d2.set(i, i, Complex64::new(lam, 0.0));
            }
            let rec = eig.vectors.matmul(&d2).matmul(&eig.vectors.adjoint());
            assert!(
                rec.sub(&a).frobenius_norm() < 1e-11,
                "dim {dim}: reconstruction defect {}",
                rec.sub(&a).frobenius_norm()
            );
        }
    }

    #[test]
    fn jacobi_handles_degenerate_and_zero_eigenvalues() {
        let mut rng = StdRng::seed_from_u64(11);
        let dim = 6;
        let spectrum = [0.0, 0.0, 0.0, 0.5, 0.5, 1.0];
        let u = random_unitary(dim, &mut rng);
        let mut d = CMat::zeros(dim);
        for (i, &lam) in spectrum.iter().enumerate() {
            d.set(i, i, Complex64::new(lam, 0.0));
        }
        let a = u.matmul(&d).matmul(&u.adjoint());
        let values = hermitian_eigenvalues(&a);
        for (got, want) in values.iter().zip(&spectrum) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let mut rng = StdRng::seed_from_u64(3);
        let dim = 7;
        let u = random_unitary(dim, &mut rng);
        let mut d = CMat::zeros(dim);
        for i in 0..dim {
            d.set(i, i, Complex64::new(i as f64, 0.0));
        }
        let a = u.matmul(&d).matmul(&u.adjoint());
        let eig = hermitian_eigen(&a);
        let gram = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!(gram.sub(&CMat::identity(dim)).frobenius_norm() < 1e-12);
    }
}
