//! Small dense least-squares helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ratio of the largest to the smallest singular value (`∞` if rank deficient).
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Minimum-norm least-squares solution of `a x ≈ b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let eps = 1e-14 * a.nrows().max(a.ncols()) as f64 * a.norm();
    a.clone()
        .svd(true, true)
        .solve(b, eps)
        .map_err(|e| Error::invalid(format!("least squares failed: {e}")))
}

fn solve_on(a: &DMatrix<f64>, b: &DVector<f64>, set: &[usize]) -> Result<DVector<f64>> {
    let sub = a.select_columns(set);
    let z = lstsq(&sub, b)?;
    let mut full = DVector::zeros(a.ncols());
    for (i, &j) in set.iter().enumerate() {
        full[j] = z[i];
    }
    Ok(full)
}

/// Non-negative least squares, Lawson–Hanson active set.
///
/// `start` optionally seeds the passive set with the indices where it is
/// positive.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, start: Option<&[f64]>) -> Result<DVector<f64>> {
    let n = a.ncols();
    if a.nrows() != b.len() {
        return Err(Error::invalid("nnls: row count mismatch"));
    }
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    let mut passive = vec![false; n];
    let mut x = DVector::<f64>::zeros(n);

    if let Some(s) = start {
        if s.len() != n {
            return Err(Error::invalid("nnls: start vector has wrong length"));
        }
        for j in 0..n {
            passive[j] = s[j] > 0.0;
        }
        loop {
            let set: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            if set.is_empty() {
                break;
            }
            let z = solve_on(a, b, &set)?;
            let bad: Vec<usize> = set.iter().copied().filter(|&j| z[j] <= 0.0).collect();
            if bad.is_empty() {
                x = z;
                break;
            }
            for j in bad {
                passive[j] = false;
            }
        }
    }

    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n).filter(|&j| !passive[j]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        match cand {
            Some(j) if w[j] > tol => passive[j] = true,
            _ => break,
        }
        loop {
            let set: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z = solve_on(a, b, &set)?;
            if set.iter().all(|&j| z[j] > 0.0) {
                x = z;
                break;
            }
            let step = set
                .iter()
                .filter(|&&j| z[j] <= 0.0)
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * step;
            for &j in &set {
                if x[j] <= 1e-15 {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_matches_unconstrained_when_interior() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let x0 = DVector::from_vec(vec![0.7, 0.3]);
        let b = &a * &x0;
        let x = nnls(&a, &b, None).unwrap();
        assert!((x - x0).norm() < 1e-12);
    }

    #[test]
    fn nnls_clamps_negative_direction() {
        let a = DMatrix::<f64>::identity(3, 3);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = nnls(&a, &b, None).unwrap();
        assert!((&x - DVector::from_vec(vec![1.0, 0.0, 0.5])).norm() < 1e-12);
        let seeded = nnls(&a, &b, Some(&[1.0, 1.0, 1.0])).unwrap();
        assert!((seeded - x).norm() < 1e-12);
    }

    #[test]
    fn condition_of_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 2.0, 0.5]));
        assert!((condition_number(&a) - 8.0).abs() < 1e-12);
    }
}
