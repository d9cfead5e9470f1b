//! Small dense helpers for row-major n×n tensors (n ≤ 4).

use nalgebra::DMatrix;

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

pub fn to_matrix(m: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, m)
}

/// xᵀ·M·x
#[inline]
pub fn quad_form(m: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += m[i * n + j] * x[j];
        }
        acc += x[i] * row;
    }
    acc
}

pub fn det(m: &[f64], n: usize) -> f64 {
    match n {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => to_matrix(m, n).determinant(),
    }
}

pub fn is_symmetric(m: &[f64], n: usize, tol: f64) -> bool {
    (0..n).all(|i| (0..i).all(|j| (m[i * n + j] - m[j * n + i]).abs() <= tol * (1.0 + m[i * n + j].abs())))
}

pub fn min_eigenvalue(m: &[f64], n: usize) -> f64 {
    if n == 1 {
        return m[0];
    }
    if n == 2 {
        let (a, b, d) = (m[0], 0.5 * (m[1] + m[2]), m[3]);
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        return mean - r;
    }
    let eig = nalgebra::SymmetricEigen::new(to_matrix(m, n));
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn is_spd(m: &[f64], n: usize) -> bool {
    is_symmetric(m, n, 1e-12) && min_eigenvalue(m, n) > 0.0
}

/// Lower Cholesky factor, row-major.
pub fn cholesky(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves L·y = b for lower-triangular L.
pub fn forward_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let m = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&m, 2).unwrap();
        let rec = [l[0] * l[0], l[0] * l[2], l[2] * l[0], l[2] * l[2] + l[3] * l[3]];
        for (a, b) in rec.iter().zip(m.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }

    #[test]
    fn eigen_and_det_small() {
        let m = [1.0, 0.5, 0.5, 1.0];
        assert!((min_eigenvalue(&m, 2) - 0.5).abs() < 1e-15);
        assert!((det(&m, 2) - 0.75).abs() < 1e-15);
        let m3 = [2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.5];
        assert!((min_eigenvalue(&m3, 3) - 0.5).abs() < 1e-12);
        assert!((det(&m3, 3) - 3.0).abs() < 1e-14);
        let m4 = identity(4);
        assert!((det(&m4, 4) - 1.0).abs() < 1e-14);
    }
}
