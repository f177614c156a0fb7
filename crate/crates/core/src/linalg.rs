//! Small dense helpers on top of `nalgebra` for 2x2 and 3x3 work.

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

pub fn diag(values: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_column_slice(values))
}

/// Row-major construction, `rows` must all have the same length.
pub fn from_rows(rows: &[Vec<f64>]) -> Matrix {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Matrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// `max |m - mᵀ|` divided by `max |m|` (zero for the zero matrix).
pub fn relative_asymmetry(m: &Matrix) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Matrix, rel_tol: f64) -> bool {
    m.is_square() && relative_asymmetry(m) <= rel_tol
}

/// Symmetric (to `1e-12`) and Cholesky-factorizable.
pub fn is_spd(m: &Matrix) -> bool {
    m.is_square()
        && m.iter().all(|v| v.is_finite())
        && is_symmetric(m, 1e-12)
        && symmetrize(m).cholesky().is_some()
}

/// Relative Frobenius distance `‖a - b‖ / max(‖a‖, ‖b‖)`.
pub fn relative_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

/// `true` when `m` is a positive multiple of the identity.
pub fn is_positive_scalar(m: &Matrix) -> bool {
    if !m.is_square() || m.nrows() == 0 {
        return false;
    }
    let s = m[(0, 0)];
    s > 0.0
        && (0..m.nrows()).all(|i| {
            (0..m.ncols()).all(|j| if i == j { m[(i, j)] == s } else { m[(i, j)] == 0.0 })
        })
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Plain `f64` formatting with 17 significant digits, round-trip exact.
pub fn fmt17(v: f64) -> String {
    format!("{:.16e}", v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetry_of_symmetric_is_zero() {
        let m = from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        assert_eq!(relative_asymmetry(&m), 0.0);
        assert!(is_spd(&m));
    }

    #[test]
    fn indefinite_is_not_spd() {
        let m = from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(!is_spd(&m));
    }

    #[test]
    fn fmt17_roundtrips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::f64::consts::PI] {
            assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn scalar_detection() {
        assert!(is_positive_scalar(&(identity(3) * 2.0)));
        assert!(!is_positive_scalar(&diag(&[1.0, 2.0])));
        assert!(!is_positive_scalar(&(identity(2) * -1.0)));
    }
}
