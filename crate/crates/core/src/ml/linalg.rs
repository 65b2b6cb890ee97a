//! Dense linear algebra on small row-major `p×p` matrices, run on the
//! calling thread.

use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix: values descending, `vectors` row-major
/// with eigenvector `i` in column `i`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn off_diagonal(a: &[f64], p: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                s += a[i * p + j] * a[i * p + j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi. Stops once the off-diagonal norm is at most
/// `JACOBI_TOL` times the Frobenius norm. Each eigenvector is signed so its
/// largest-magnitude component is positive.
pub fn sym_eigen(a: &[f64], p: usize) -> Result<SymEigen> {
    if a.len() != p * p {
        return Err(Error::invalid(format!("{} values do not form a {p}x{p} matrix", a.len())));
    }
    if let Some(bad) = a.iter().find(|x| !x.is_finite()) {
        return Err(Error::Numerical(format!("non-finite entry {bad} in eigen input")));
    }
    let mut m = a.to_vec();
    let mut v = vec![0.0; p * p];
    for i in 0..p {
        v[i * p + i] = 1.0;
    }
    let norm = frobenius(a);
    let mut sweeps = 0;
    while off_diagonal(&m, p) > JACOBI_TOL * norm {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Numerical(format!("Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")));
        }
        sweeps += 1;
        for r in 0..p {
            for q in r + 1..p {
                let apq = m[r * p + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * p + q] - m[r * p + r]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let (mkr, mkq) = (m[k * p + r], m[k * p + q]);
                    m[k * p + r] = c * mkr - s * mkq;
                    m[k * p + q] = s * mkr + c * mkq;
                }
                for k in 0..p {
                    let (mrk, mqk) = (m[r * p + k], m[q * p + k]);
                    m[r * p + k] = c * mrk - s * mqk;
                    m[q * p + k] = s * mrk + c * mqk;
                }
                for k in 0..p {
                    let (vkr, vkq) = (v[k * p + r], v[k * p + q]);
                    v[k * p + r] = c * vkr - s * vkq;
                    v[k * p + q] = s * vkr + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| m[j * p + j].total_cmp(&m[i * p + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * p + i]).collect();
    let mut vectors = vec![0.0; p * p];
    for (dst, &src) in order.iter().enumerate() {
        let big = (0..p)
            .max_by(|&x, &y| v[x * p + src].abs().total_cmp(&v[y * p + src].abs()).then(y.cmp(&x)))
            .unwrap_or(0);
        let sign = if p > 0 && v[big * p + src] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..p {
            vectors[k * p + dst] = sign * v[k * p + src];
        }
    }
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Gauss-Jordan inverse with partial pivoting. A pivot below
/// `1e-12·‖A‖∞` is reported as singular.
pub fn invert(a: &[f64], p: usize) -> Result<Vec<f64>> {
    if a.len() != p * p {
        return Err(Error::invalid(format!("{} values do not form a {p}x{p} matrix", a.len())));
    }
    let norm = (0..p)
        .map(|i| a[i * p..(i + 1) * p].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; p * p];
    for i in 0..p {
        inv[i * p + i] = 1.0;
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&x, &y| m[x * p + col].abs().total_cmp(&m[y * p + col].abs()).then(y.cmp(&x)))
            .unwrap();
        let pv = m[piv * p + col];
        if !(pv.abs() >= 1e-12 * norm) || norm == 0.0 {
            return Err(Error::Numerical(format!(
                "singular matrix: pivot {pv:e} in column {col} against norm {norm:e}"
            )));
        }
        if piv != col {
            for k in 0..p {
                m.swap(piv * p + k, col * p + k);
                inv.swap(piv * p + k, col * p + k);
            }
        }
        for k in 0..p {
            m[col * p + k] /= pv;
            inv[col * p + k] /= pv;
        }
        for r in 0..p {
            if r == col {
                continue;
            }
            let f = m[r * p + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..p {
                m[r * p + k] -= f * m[col * p + k];
                inv[r * p + k] -= f * inv[col * p + k];
            }
        }
    }
    Ok(inv)
}

/// Row-major `a (n×m) · b (m×p)`.
pub fn matmul(a: &[f64], b: &[f64], n: usize, m: usize, p: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * p];
    for i in 0..n {
        for k in 0..m {
            let aik = a[i * m + k];
            for j in 0..p {
                c[i * p + j] += aik * b[k * p + j];
            }
        }
    }
    c
}

pub fn transpose(a: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut t = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            t[j * n + i] = a[i * m + j];
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_exact() {
        let e = sym_eigen(&[1.0, 0.0, 0.0, 0.0, 9.0, 0.0, 0.0, 0.0, 4.0], 3).unwrap();
        assert_eq!(e.values, vec![9.0, 4.0, 1.0]);
        assert_eq!(e.sweeps, 0);
        assert_eq!(e.vectors, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two() {
        let e = sym_eigen(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0] - r).abs() < 1e-14 && (e.vectors[2] - r).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let a = [4.0, 1.0, 2.0, 1.0, 3.0, 0.5, 2.0, 0.5, 5.0];
        let inv = invert(&a, 3).unwrap();
        let id = matmul(&a, &inv, 3, 3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[i * 3 + j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_reported() {
        assert!(matches!(invert(&[1.0, 2.0, 2.0, 4.0], 2), Err(Error::Numerical(_))));
    }
}
