//! Minimal dense linear algebra for the 10-dimensional implicit stage
//! systems: LU factorization with partial pivoting, solve in place.

use crate::error::{Error, Result};

/// Solves `a * x = b` in place; `a` is row-major `n x n`, consumed.
pub(crate) fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    debug_assert_eq!(a.len(), n);
    for col in 0..n {
        // pivot on the largest magnitude in this column
        let mut pivot_row = col;
        let mut pivot_val = a[col][col].abs();
        for row in col + 1..n {
            let v = a[row][col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val == 0.0 || !pivot_val.is_finite() {
            return Err(Error::Domain(format!(
                "singular stage matrix (pivot {pivot_val} in column {col})"
            )));
        }
        if pivot_row != col {
            a.swap(col, pivot_row);
            b.swap(col, pivot_row);
        }
        let inv = 1.0 / a[col][col];
        for row in col + 1..n {
            let factor = a[row][col] * inv;
            if factor == 0.0 {
                continue;
            }
            a[row][col] = 0.0;
            for k in col + 1..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col][k] * b[k];
        }
        b[col] = sum / a[col][col];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_known_system() {
        let mut a = vec![
            vec![2.0, 1.0, -1.0],
            vec![-3.0, -1.0, 2.0],
            vec![-2.0, 1.0, 2.0],
        ];
        let mut b = vec![8.0, -11.0, -3.0];
        solve_dense(&mut a, &mut b).unwrap();
        assert_relative_eq!(b[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(b[1], 3.0, max_relative = 1e-12);
        assert_relative_eq!(b[2], -1.0, max_relative = 1e-12);
    }

    #[test]
    fn pivots_on_zero_diagonal() {
        let mut a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let mut b = vec![3.0, 7.0];
        solve_dense(&mut a, &mut b).unwrap();
        assert_eq!(b, vec![7.0, 3.0]);
    }

    #[test]
    fn rejects_singular() {
        let mut a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let mut b = vec![1.0, 2.0];
        assert!(solve_dense(&mut a, &mut b).is_err());
    }

    #[test]
    fn random_system_residual_small() {
        // deterministic pseudo-random fill
        let n = 10;
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        let a0: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| next()).collect()).collect();
        let x_true: Vec<f64> = (0..n).map(|_| next()).collect();
        let b0: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a0[i][j] * x_true[j]).sum())
            .collect();
        let mut a = a0.clone();
        let mut b = b0.clone();
        solve_dense(&mut a, &mut b).unwrap();
        for i in 0..n {
            assert_relative_eq!(b[i], x_true[i], max_relative = 1e-9, epsilon = 1e-10);
        }
    }
}
