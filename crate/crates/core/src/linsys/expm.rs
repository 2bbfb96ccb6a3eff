use super::Mat;
use crate::error::{dim_err, Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `e^{A t}` by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &Mat, t: f64) -> Result<Mat> {
    if !a.is_square() {
        return Err(dim_err("expm of non-square matrix"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Parameter("expm time must be finite and non-negative".into()));
    }
    let n = a.rows();
    let at = a.scale(t);
    let norm = at.norm_1();
    if norm == 0.0 {
        return Ok(Mat::identity(n));
    }
    let s = if norm > THETA13 { libm::ceil(libm::log2(norm / THETA13)) as i32 } else { 0 };
    let a1 = at.scale(libm::pow(2.0, -s as f64));
    let b = &PADE13;
    let id = Mat::identity(n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> Mat {
        let mut m = a6.scale(c6);
        m = &m + &a4.scale(c4);
        m = &m + &a2.scale(c2);
        &m + &id.scale(c0)
    };
    let u_inner = &(&a6 * &lin(b[13], b[11], b[9], 0.0)) + &lin(b[7], b[5], b[3], b[1]);
    let u = &a1 * &u_inner;
    let v = &(&a6 * &lin(b[12], b[10], b[8], 0.0)) + &lin(b[6], b[4], b[2], b[0]);
    let mut r = (&v - &u).solve(&(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.is_finite() {
        return Err(Error::Numeric("matrix exponential overflowed".into()));
    }
    Ok(r)
}

/// Zero-order-hold discretization: `(e^{Am Td}, ∫₀^{Td} e^{Am τ}dτ · Bv)`.
pub fn zoh_discretize(am: &Mat, bv: &Mat, td: f64) -> Result<(Mat, Mat)> {
    if !am.is_square() || bv.rows() != am.rows() {
        return Err(dim_err("zoh operands"));
    }
    if !(td > 0.0) {
        return Err(Error::Parameter("sampling time must be positive".into()));
    }
    let (n, m) = (am.rows(), bv.cols());
    let mut aug = Mat::zeros(n + m, n + m);
    aug.set_block(0, 0, am);
    aug.set_block(0, n, bv);
    let e = expm(&aug, td)?;
    Ok((e.block(0, 0, n, n), e.block(0, n, n, m)))
}

/// `∫₀^t e^{A τ} dτ`, well conditioned for small `t` and singular `A`.
pub fn expm_integral(a: &Mat, t: f64) -> Result<Mat> {
    let n = a.rows();
    Ok(zoh_discretize(a, &Mat::identity(n), t)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::exp;

    #[test]
    fn closed_forms() {
        let z = expm(&Mat::zeros(3, 3), 1.0).unwrap();
        assert_eq!(z, Mat::identity(3));
        let d = expm(&Mat::from_diag(&[-1.0, -2.0]), 0.5).unwrap();
        assert!((d[(0, 0)] - exp(-0.5)).abs() < 1e-15);
        assert!((d[(1, 1)] - exp(-1.0)).abs() < 1e-15);
        assert!(d[(0, 1)].abs() < 1e-16);
        let nil = expm(&Mat::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap(), 2.0).unwrap();
        let want = Mat::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap();
        assert!((&nil - &want).max_abs() < 1e-15);
    }

    #[test]
    fn large_norm_uses_squaring() {
        let d = expm(&Mat::from_diag(&[-30.0, 3.0]), 1.0).unwrap();
        assert!((d[(0, 0)] / exp(-30.0) - 1.0).abs() < 1e-12);
        assert!((d[(1, 1)] / exp(3.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zoh_scalar_and_integrator() {
        let (ah, bh) = zoh_discretize(&Mat::from_diag(&[-1.0]), &Mat::from_diag(&[1.0]), 0.1).unwrap();
        assert!((ah[(0, 0)] - exp(-0.1)).abs() < 1e-15);
        assert!((bh[(0, 0)] - (1.0 - exp(-0.1))).abs() < 1e-15);
        let b = Mat::from_rows(&[[1.0, 2.0], [3.0, -1.0]]).unwrap();
        let (ah, bh) = zoh_discretize(&Mat::zeros(2, 2), &b, 0.1).unwrap();
        assert_eq!(ah, Mat::identity(2));
        assert!((&bh - &b.scale(0.1)).max_abs() < 1e-16);
    }

    #[test]
    fn tiny_interval_integral() {
        let phi = expm_integral(&Mat::from_diag(&[-10.0]), 1e-7).unwrap();
        let exact = -libm::expm1(-1e-6) / 10.0;
        assert!((phi[(0, 0)] / exact - 1.0).abs() < 1e-13);
    }
}
