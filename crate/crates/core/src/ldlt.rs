//! Dense 6×6 LDLᵀ factorization for the base articulated inertia.

use crate::error::{Error, Result};
use crate::liegroup::{Mat6, Wrench};

/// Unit lower-triangular `L` (strict part stored) and diagonal `D` with
/// `A = L·D·Lᵀ`.
#[derive(Debug, Clone)]
pub(crate) struct Ldlt6 {
    l: Mat6,
    d: [f64; 6],
}

impl Ldlt6 {
    /// Factors a symmetric matrix; pivots below `1e-14·max|A|` are reported
    /// as a singular base.
    pub(crate) fn factor(a: &Mat6) -> Result<Self> {
        let tol = 1e-14 * a.amax().max(f64::MIN_POSITIVE);
        let mut l = Mat6::identity();
        let mut d = [0.0; 6];
        for j in 0..6 {
            let mut dj = a[(j, j)];
            for k in 0..j {
                dj -= l[(j, k)] * l[(j, k)] * d[k];
            }
            if !(dj.abs() > tol) {
                return Err(Error::SingularBase);
            }
            d[j] = dj;
            for i in j + 1..6 {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)] * d[k];
                }
                l[(i, j)] = s / dj;
            }
        }
        Ok(Self { l, d })
    }

    pub(crate) fn solve(&self, b: &Wrench) -> Wrench {
        let mut x = *b;
        for i in 0..6 {
            for k in 0..i {
                x[i] -= self.l[(i, k)] * x[k];
            }
        }
        for i in 0..6 {
            x[i] /= self.d[i];
        }
        for i in (0..6).rev() {
            for k in i + 1..6 {
                x[i] -= self.l[(k, i)] * x[k];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let b = Mat6::from_fn(|i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1);
        let a = b * b.transpose() + Mat6::identity();
        let rhs = Wrench::from_fn(|i, _| i as f64 - 2.5);
        let x = Ldlt6::factor(&a).unwrap().solve(&rhs);
        assert!((a * x - rhs).amax() < 1e-13);
    }

    #[test]
    fn reports_singular() {
        assert!(matches!(Ldlt6::factor(&Mat6::zeros()), Err(Error::SingularBase)));
    }
}
