//! Eigenvalues of small dense matrices and Lyapunov solves.

use alloc::vec;
use alloc::vec::Vec;

use super::Mat;
use crate::error::{dim_err, Error, Result};

/// Margin used by the stability tests.
pub const EIG_MARGIN: f64 = 1e-9;

/// Eigenvalues `(re, im)` of a real square matrix, via Hessenberg reduction
/// and the Francis double-shift QR iteration.
pub fn eigenvalues(a: &Mat) -> Result<Vec<(f64, f64)>> {
    if !a.is_square() {
        return Err(dim_err("eigenvalues of non-square matrix"));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !a.is_finite() {
        return Err(Error::Numeric("non-finite matrix entries".into()));
    }
    let mut h: Vec<Vec<f64>> = a.to_rows();
    hessenberg(&mut h);
    hqr(&mut h)
}

fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    for m in 1..n - 1 {
        let mut x: f64 = 0.0;
        let mut piv = m;
        for j in m..n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                piv = j;
            }
        }
        if piv != m {
            for j in (m - 1)..n {
                let t = a[piv][j];
                a[piv][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut() {
                row.swap(piv, m);
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..n {
                        let amj = a[m][j];
                        a[i][j] -= y * amj;
                    }
                    for row in a.iter_mut() {
                        let rji = row[i];
                        row[m] += y * rji;
                    }
                }
            }
        }
    }
    for i in 2..n {
        for j in 0..i - 1 {
            a[i][j] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names)]
#[allow(unused_assignments)]
fn hqr(a: &mut [Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let n = a.len() as isize;
    let mut wr = vec![0.0; n as usize];
    let mut wi = vec![0.0; n as usize];
    let eps = f64::EPSILON;
    macro_rules! at {
        ($i:expr, $j:expr) => {
            a[($i) as usize][($j) as usize]
        };
    }
    let mut anorm = 0.0;
    for i in 0..n {
        for j in (i - 1).max(0)..n {
            anorm += at!(i, j).abs();
        }
    }
    let mut nn = n - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l > 0 {
                s = at!(l - 1, l - 1).abs() + at!(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at!(l, l - 1).abs() <= eps * s {
                    at!(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = at!(nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
            } else {
                y = at!(nn - 1, nn - 1);
                w = at!(nn, nn - 1) * at!(nn - 1, nn);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = libm::sqrt(q.abs());
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[(nn - 1) as usize] = x + z;
                        wr[nn as usize] = x + z;
                        if z != 0.0 {
                            wr[nn as usize] = x - w / z;
                        }
                        wi[(nn - 1) as usize] = 0.0;
                        wi[nn as usize] = 0.0;
                    } else {
                        wr[(nn - 1) as usize] = x + p;
                        wr[nn as usize] = x + p;
                        wi[(nn - 1) as usize] = z;
                        wi[nn as usize] = -z;
                    }
                    nn -= 2;
                } else {
                    if its == 60 {
                        return Err(Error::Numeric("QR iteration did not converge".into()));
                    }
                    if its == 10 || its == 20 {
                        t += x;
                        for i in 0..=nn {
                            at!(i, i) -= x;
                        }
                        s = at!(nn, nn - 1).abs() + at!(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    while m >= l {
                        z = at!(m, m);
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / at!(m + 1, m) + at!(m, m + 1);
                        q = at!(m + 1, m + 1) - z - r - s;
                        r = at!(m + 2, m + 1);
                        s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = at!(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs() * (at!(m - 1, m - 1).abs() + z.abs() + at!(m + 1, m + 1).abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nn - 1 {
                        at!(i + 2, i) = 0.0;
                        if i != m {
                            at!(i + 2, i - 1) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = at!(k, k - 1);
                            q = at!(k + 1, k - 1);
                            r = 0.0;
                            if k + 1 != nn {
                                r = at!(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign(libm::sqrt(p * p + q * q + r * r), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    at!(k, k - 1) = -at!(k, k - 1);
                                }
                            } else {
                                at!(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = at!(k, j) + q * at!(k + 1, j);
                                if k + 1 != nn {
                                    p += r * at!(k + 2, j);
                                    at!(k + 2, j) -= p * z;
                                }
                                at!(k + 1, j) -= p * y;
                                at!(k, j) -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * at!(i, k) + y * at!(i, k + 1);
                                if k + 1 != nn {
                                    p += z * at!(i, k + 2);
                                    at!(i, k + 2) -= p * r;
                                }
                                at!(i, k + 1) -= p * q;
                                at!(i, k) -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if !(l + 1 < nn) {
                break;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|e| libm::hypot(e.0, e.1)).fold(0.0, f64::max))
}

/// All eigenvalues have real part below `-EIG_MARGIN`.
pub fn is_hurwitz(a: &Mat) -> Result<bool> {
    if a.rows() == 0 {
        return Ok(true);
    }
    Ok(spectral_abscissa(a)? < -EIG_MARGIN)
}

/// All eigenvalues lie strictly inside the unit disc (by `EIG_MARGIN`).
pub fn is_schur(a: &Mat) -> Result<bool> {
    if a.rows() == 0 {
        return Ok(true);
    }
    Ok(spectral_radius(a)? < 1.0 - EIG_MARGIN)
}

/// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending.
pub fn symmetric_eigenvalues(a: &Mat) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(dim_err("symmetric eigenvalues of non-square matrix"));
    }
    let n = a.rows();
    let mut m = a.to_rows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| m[i][i] * m[i][i]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = sign(1.0, theta) / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    Ok(ev)
}

/// Solves `AᵀP + PA = −Q` by the Kronecker formulation (small n only).
pub fn lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    if !a.is_square() || q.shape() != a.shape() {
        return Err(dim_err("lyapunov operands"));
    }
    let n = a.rows();
    let nn = n * n;
    let mut k = Mat::zeros(nn, nn);
    let mut rhs = Mat::zeros(nn, 1);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for l in 0..n {
                k[(row, l * n + j)] += a[(l, i)];
                k[(row, i * n + l)] += a[(l, j)];
            }
            rhs[(row, 0)] = -q[(i, j)];
        }
    }
    let sol = k.solve(&rhs)?;
    let mut p = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p[(i, j)] = 0.5 * (sol[(i * n + j, 0)] + sol[(j * n + i, 0)]);
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
        v.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
        v
    }

    #[test]
    fn diagonal_and_rotation() {
        assert!(is_hurwitz(&Mat::from_diag(&[-1.0, -3.0])).unwrap());
        assert!(is_schur(&Mat::from_diag(&[0.5, -0.2])).unwrap());
        let rot = Mat::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        assert!(!is_hurwitz(&rot).unwrap());
        let ev = sorted(eigenvalues(&rot).unwrap());
        assert!((ev[0].1 + 1.0).abs() < 1e-14 && (ev[1].1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn companion_roots() {
        // (s+1)(s+2)(s+3)(s^2+2s+5)
        let c = [1.0, 8.0, 28.0, 58.0, 67.0, 30.0];
        let n = 5;
        let mut a = Mat::zeros(n, n);
        for j in 0..n {
            a[(0, j)] = -c[j + 1];
        }
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let ev = eigenvalues(&a).unwrap();
        let want = [(-3.0, 0.0), (-2.0, 0.0), (-1.0, -2.0), (-1.0, 0.0), (-1.0, 2.0)];
        for w in want {
            let hit = ev.iter().any(|g| (g.0 - w.0).abs() < 1e-9 && (g.1 - w.1).abs() < 1e-9);
            assert!(hit, "{w:?} missing from {ev:?}");
        }
    }

    #[test]
    fn lyapunov_residual() {
        let a = Mat::from_rows(&[[-1.0, 2.0, 0.0], [0.0, -3.0, 1.0], [0.5, 0.0, -2.0]]).unwrap();
        let p = lyapunov(&a, &Mat::identity(3)).unwrap();
        let res = &(&(&a.transpose() * &p) + &(&p * &a)) + &Mat::identity(3);
        assert!(res.max_abs() < 1e-12);
        let ev = symmetric_eigenvalues(&p).unwrap();
        assert!(ev[0] > 0.0);
    }

    #[test]
    fn jacobi_known() {
        let s = Mat::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        let ev = symmetric_eigenvalues(&s).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    }
}
