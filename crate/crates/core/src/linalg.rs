//! Small direct solvers: the Thomas algorithm for tridiagonal M-matrix
//! systems and a general banded LU with partial pivoting (LAPACK gbtrf
//! layout) for the profile Jacobians and Hessians.

use crate::error::{Error, Result};

/// Solve a tridiagonal system in place. `sub[i]` couples row `i` to `i-1`
/// (sub[0] unused), `sup[i]` couples row `i` to `i+1` (last unused).
///
/// No pivoting: intended for the diagonally dominant M-matrix systems
/// produced by the implicit diffusion steps.
pub fn tridiag_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::domain("tridiag_solve", "zero pivot at row 0"));
    }
    c[0] = sup[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom == 0.0 {
            return Err(Error::domain("tridiag_solve", format!("zero pivot at row {i}")));
        }
        c[i] = sup[i] / denom;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, stored column-major
/// in the gbtrf layout with `kl` extra rows for pivoting fill-in.
pub struct Banded {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl Banded {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Banded {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j + self.kl >= i && i + self.ku + self.kl >= j, "({i},{j}) outside band");
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    /// Factor in place (partial pivoting) and solve `A x = rhs`, overwriting
    /// `rhs` with the solution. Consumes the matrix.
    pub fn solve(mut self, rhs: &mut [f64]) -> Result<()> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        let (kl, ku, ldab) = (self.kl, self.ku, self.ldab);
        let band_top = kl + ku; // storage row of the main diagonal
        let mut pivots = vec![0usize; n];

        for j in 0..n {
            // Pivot search among rows j..=j+kl in column j.
            let reach = (j + kl).min(n - 1);
            let mut jp = j;
            let mut best = self.ab[j * ldab + band_top].abs();
            for i in j + 1..=reach {
                let v = self.ab[j * ldab + band_top + (i - j)].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            pivots[j] = jp;
            if best == 0.0 {
                return Err(Error::domain("banded_solve", format!("singular at column {j}")));
            }
            let ju = (j + ku + kl).min(n - 1);
            if jp != j {
                for c in j..=ju {
                    let a = c * ldab + (band_top + j - c);
                    let b = c * ldab + (band_top + jp - c);
                    self.ab.swap(a, b);
                }
                rhs.swap(j, jp);
            }
            let pivot = self.ab[j * ldab + band_top];
            for i in j + 1..=reach {
                let m = self.ab[j * ldab + band_top + (i - j)] / pivot;
                if m != 0.0 {
                    for c in j + 1..=ju {
                        let t = m * self.ab[c * ldab + (band_top + j - c)];
                        self.ab[c * ldab + (band_top + i - c)] -= t;
                    }
                    rhs[i] -= m * rhs[j];
                }
            }
        }

        // Back substitution with U (bandwidth ku + kl above the diagonal).
        for i in (0..n).rev() {
            let hi = (i + ku + kl).min(n - 1);
            let mut acc = rhs[i];
            for c in i + 1..=hi {
                acc -= self.ab[c * ldab + (band_top + i - c)] * rhs[c];
            }
            rhs[i] = acc / self.ab[i * ldab + band_top];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for k in 0..n {
            let (mut piv, mut best) = (k, a[k][k].abs());
            for i in k + 1..n {
                if a[i][k].abs() > best {
                    best = a[i][k].abs();
                    piv = i;
                }
            }
            if best < 1e-300 {
                return None;
            }
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                b[i] -= m * b[k];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                b[i] -= a[i][j] * b[j];
            }
            b[i] /= a[i][i];
        }
        Some(b)
    }

    #[test]
    fn thomas_matches_dense() {
        let n = 7;
        let sub = vec![0.0, -1.0, -0.5, -2.0, -1.0, -0.3, -1.1];
        let diag = vec![4.0, 5.0, 4.5, 6.0, 5.0, 4.0, 3.5];
        let sup = vec![-1.5, -0.7, -1.0, -0.2, -1.3, -0.9, 0.0];
        let mut rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            dense[i][i] = diag[i];
            if i > 0 {
                dense[i][i - 1] = sub[i];
            }
            if i + 1 < n {
                dense[i][i + 1] = sup[i];
            }
        }
        let want = dense_solve(dense, rhs.clone()).unwrap();
        tridiag_solve(&sub, &diag, &sup, &mut rhs).unwrap();
        for (a, b) in rhs.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn banded_matches_dense(seed in 0u64..400) {
            // Deterministic pseudo-random banded system, including rows that
            // force pivoting (tiny diagonal).
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let n = 12;
            let (kl, ku) = (2, 2);
            let mut band = Banded::new(n, kl, ku);
            let mut dense = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                    let mut v = next();
                    if i == j {
                        v += if i % 5 == 0 { 0.001 } else { 3.0 };
                    }
                    band.set(i, j, v);
                    dense[i][j] = v;
                }
            }
            let rhs: Vec<f64> = (0..n).map(|_| next()).collect();
            if let Some(want) = dense_solve(dense, rhs.clone()) {
                let mut got = rhs;
                band.solve(&mut got).unwrap();
                for (a, b) in got.iter().zip(want.iter()) {
                    prop_assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "{a} vs {b}");
                }
            }
        }
    }
}
