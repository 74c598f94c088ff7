//! Small dense complex matrices. The representation dimensions here are a
//! handful (N ≤ 8 on tori, a few hundred for truncated cylinders), so a plain
//! row-major Vec with naive products is all that is needed.

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn diag(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.n);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry modulus over rows and columns in [lo, hi].
    pub fn max_abs_block(&self, lo: usize, hi: usize) -> f64 {
        let mut m = 0.0f64;
        for i in lo..=hi {
            for j in lo..=hi {
                m = m.max(self[(i, j)].norm());
            }
        }
        m
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjoint_and_product() {
        let mut a = CMat::zeros(2);
        a[(0, 1)] = Complex64::new(1.0, 2.0);
        a[(1, 0)] = Complex64::new(-0.5, 0.25);
        let aa = a.adjoint();
        assert_eq!(aa[(1, 0)], Complex64::new(1.0, -2.0));
        let p = a.mul(&CMat::identity(2));
        assert_eq!(p, a);
        assert!(a.commutator(&CMat::identity(2)).max_abs() == 0.0);
    }

    #[test]
    fn cyclic_shift_power() {
        // weighted cyclic shift: s^3 = (w0 w1 w2) I
        let n = 3;
        let w = [
            Complex64::new(0.5, 0.1),
            Complex64::new(-1.0, 0.3),
            Complex64::new(2.0, -0.7),
        ];
        let mut s = CMat::zeros(n);
        for k in 0..n {
            s[((k + 1) % n, k)] = w[k];
        }
        let p = s.pow(3);
        let scalar = w[0] * w[1] * w[2];
        let dev = p.sub(&CMat::identity(n).scale(scalar)).max_abs();
        assert!(dev < 1e-15);
    }
}
