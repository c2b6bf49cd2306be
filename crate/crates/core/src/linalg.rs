//! Small dense linear algebra on row-major `n × n` matrices of reals and jets.

use crate::error::{GeometryError, Result};
use crate::jets::Jet;

/// Condition estimate above which an inversion is reported as ill-conditioned.
pub const COND_WARN: f64 = 1e10;
const COND_FAIL: f64 = 1e14;

fn norm1(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of a real matrix together with its 1-norm condition estimate.
pub fn inverse(a: &[f64], n: usize) -> Result<(Vec<f64>, f64)> {
    let mut m = a.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap_or(col);
        if m[piv * n + col] == 0.0 || !m[piv * n + col].is_finite() {
            return Err(GeometryError::Singular { cond: f64::INFINITY });
        }
        swap_rows(&mut m, n, col, piv);
        swap_rows(&mut inv, n, col, piv);
        let p = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        m[r * n + k] -= f * m[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    let cond = norm1(a, n) * norm1(&inv, n);
    if !cond.is_finite() || cond > COND_FAIL {
        return Err(GeometryError::Singular { cond });
    }
    Ok((inv, cond))
}

fn swap_rows<T>(m: &mut [T], n: usize, a: usize, b: usize) {
    if a != b {
        for k in 0..n {
            m.swap(a * n + k, b * n + k);
        }
    }
}

pub fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

/// Require every leading principal minor of a symmetric matrix to be positive.
pub fn check_positive_definite(a: &[f64], n: usize) -> Result<()> {
    let mut m = a.to_vec();
    let mut minor = 1.0;
    for k in 0..n {
        let p = m[k * n + k];
        minor *= p;
        if !(p > 0.0) {
            return Err(GeometryError::NotPositiveDefinite { minor: k + 1, value: minor });
        }
        for r in k + 1..n {
            let f = m[r * n + k] / p;
            for c in k..n {
                m[r * n + c] -= f * m[k * n + c];
            }
        }
    }
    Ok(())
}

/// Inverse of a matrix of jets by Gauss-Jordan elimination, pivoting on values.
pub fn inverse_jets(a: &[Jet], n: usize) -> Result<(Vec<Jet>, f64)> {
    let values: Vec<f64> = a.iter().map(Jet::value).collect();
    let (_, cond) = inverse(&values, n)?;
    let mut m = a.to_vec();
    let mut inv: Vec<Jet> = identity(n).into_iter().map(Jet::scalar).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].value().abs().total_cmp(&m[j * n + col].value().abs()))
            .unwrap_or(col);
        swap_rows(&mut m, n, col, piv);
        swap_rows(&mut inv, n, col, piv);
        let p = m[col * n + col].recip();
        for k in 0..n {
            m[col * n + k] = &m[col * n + k] * &p;
            inv[col * n + k] = &inv[col * n + k] * &p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col].clone();
            for k in 0..n {
                let mk = &f * &m[col * n + k];
                m[r * n + k] = &m[r * n + k] - &mk;
                let ik = &f * &inv[col * n + k];
                inv[r * n + k] = &inv[r * n + k] - &ik;
            }
        }
    }
    Ok((inv, cond))
}

/// Determinant of a matrix of jets.
pub fn det_jets(a: &[Jet], n: usize) -> Jet {
    let mut m = a.to_vec();
    let mut det = Jet::scalar(1.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i * n + col].value().abs().total_cmp(&m[j * n + col].value().abs()))
            .unwrap_or(col);
        if piv != col {
            swap_rows(&mut m, n, col, piv);
            det = -det;
        }
        let p = m[col * n + col].clone();
        det = &det * &p;
        let pinv = p.recip();
        for r in col + 1..n {
            let f = &m[r * n + col] * &pinv;
            for k in col..n {
                let d = &f * &m[col * n + k];
                m[r * n + k] = &m[r * n + k] - &d;
            }
        }
    }
    det
}

pub fn det(a: &[f64], n: usize) -> f64 {
    let jets: Vec<Jet> = a.iter().map(|&v| Jet::scalar(v)).collect();
    det_jets(&jets, n).value()
}

/// Matrix-vector product with jets.
pub fn mat_vec(a: &[Jet], v: &[Jet]) -> Vec<Jet> {
    let n = v.len();
    (0..n)
        .map(|i| (0..n).map(|j| &a[i * n + j] * &v[j]).sum())
        .collect()
}

pub fn dot(a: &[Jet], b: &[Jet]) -> Jet {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a(u, v)` for a row-major bilinear form of reals.
pub fn quad(a: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let n = u.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i * n + j] * u[i] * v[j];
        }
    }
    s
}

/// Largest entrywise difference.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m: f64, (u, v)| m.max((u - v).abs()))
}

/// Linear least squares `min ‖A c − b‖` via normal equations.
///
/// Returns coefficients and the root-mean-square residual.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = rows.first().map(Vec::len).unwrap_or(0);
    if rows.len() < k || k == 0 {
        return Err(GeometryError::Rank(format!("{} samples for {} unknowns", rows.len(), k)));
    }
    let mut ata = vec![0.0; k * k];
    let mut atb = vec![0.0; k];
    for (r, &b) in rows.iter().zip(rhs) {
        for i in 0..k {
            atb[i] += r[i] * b;
            for j in 0..k {
                ata[i * k + j] += r[i] * r[j];
            }
        }
    }
    let (inv, _) = inverse(&ata, k).map_err(|_| GeometryError::Rank("normal equations are singular".into()))?;
    let c: Vec<f64> = (0..k).map(|i| (0..k).map(|j| inv[i * k + j] * atb[j]).sum()).collect();
    let ss: f64 = rows
        .iter()
        .zip(rhs)
        .map(|(r, &b)| {
            let fit: f64 = r.iter().zip(&c).map(|(x, y)| x * y).sum();
            (fit - b).powi(2)
        })
        .sum();
    Ok((c, (ss / rows.len() as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_round_trip() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let (inv, cond) = inverse(&a, 3).unwrap();
        assert!(cond < 10.0);
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert_relative_eq!(s, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
        assert_relative_eq!(det(&a, 3), 4.0 * (6.0 - 0.04) - (2.0 - 0.1) + 0.5 * (0.2 - 1.5), epsilon = 1e-13);
    }

    #[test]
    fn singular_is_an_error() {
        assert!(matches!(inverse(&[1.0, 2.0, 2.0, 4.0], 2), Err(GeometryError::Singular { .. })));
    }

    #[test]
    fn definiteness() {
        assert!(check_positive_definite(&[2.0, 1.0, 1.0, 2.0], 2).is_ok());
        assert!(matches!(
            check_positive_definite(&[1.0, 2.0, 2.0, 1.0], 2),
            Err(GeometryError::NotPositiveDefinite { minor: 2, .. })
        ));
    }

    #[test]
    fn jet_inverse_derivative() {
        // d(A^{-1})/dt = -A^{-1} A' A^{-1} for A = [[1+t, t], [t, 2]]
        let t = Jet::variable(1, 2, 0, 0.3);
        let a = vec![&t + 1.0, t.clone(), t.clone(), t.constant_like(2.0)];
        let (inv, _) = inverse_jets(&a, 2).unwrap();
        let av = [1.3, 0.3, 0.3, 2.0];
        let (iv, _) = inverse(&av, 2).unwrap();
        let da = [1.0, 1.0, 1.0, 0.0];
        for i in 0..2 {
            for j in 0..2 {
                let mut expect = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        expect -= iv[i * 2 + k] * da[k * 2 + l] * iv[l * 2 + j];
                    }
                }
                assert_relative_eq!(inv[i * 2 + j].partial_value(&[0]), expect, epsilon = 1e-13);
            }
        }
        let d = det_jets(&a, 2);
        assert_relative_eq!(d.partial_value(&[0]), 2.0 - 2.0 * 0.3, epsilon = 1e-13);
    }

    #[test]
    fn least_squares_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let rhs: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let (c, res) = least_squares(&rows, &rhs).unwrap();
        assert_relative_eq!(c[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(c[1], 3.0, epsilon = 1e-12);
        assert!(res < 1e-12);
    }
}
