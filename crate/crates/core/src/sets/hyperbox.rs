use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linsys::Mat;

/// Axis-aligned box `{z : lower ≤ z ≤ upper}`. A box with some
/// `lower[i] > upper[i]` is empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Hyperbox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Hyperbox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(dim_err("box bounds of different length"));
        }
        if lower.iter().chain(&upper).any(|v| v.is_nan()) {
            return Err(Error::Parameter("box bound is NaN".into()));
        }
        Ok(Hyperbox { lower, upper })
    }

    /// `{|z_i| ≤ half[i]}`.
    pub fn symmetric(half: &[f64]) -> Self {
        Hyperbox { lower: half.iter().map(|h| -h).collect(), upper: half.to_vec() }
    }

    /// The ∞-norm ball `Ω(ρ)` in `n` dimensions.
    pub fn ball(n: usize, rho: f64) -> Self {
        Hyperbox::symmetric(&vec![rho; n])
    }

    pub fn origin(n: usize) -> Self {
        Hyperbox::ball(n, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.iter().zip(&self.upper).any(|(l, u)| l > u)
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        z.len() == self.dim()
            && z.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    /// Interior membership with a strict margin.
    pub fn contains_interior(&self, z: &[f64]) -> bool {
        z.len() == self.dim() && z.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v > *l && *v < *u)
    }

    /// Largest `|z_i|` over the box, per coordinate.
    pub fn max_abs(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| l.abs().max(u.abs())).collect()
    }

    /// `max_{z ∈ box} ‖z‖∞`.
    pub fn norm_inf(&self) -> f64 {
        self.max_abs().into_iter().fold(0.0, f64::max)
    }

    pub fn half_width(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (u - l)).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (u + l)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| *l == -*u)
    }

    fn same_dim(&self, other: &Hyperbox) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(dim_err("boxes of different dimension"));
        }
        Ok(())
    }

    /// Pontryagin difference `self ⊖ e`. May be empty.
    pub fn pontryagin_diff(&self, e: &Hyperbox) -> Result<Hyperbox> {
        self.same_dim(e)?;
        Ok(Hyperbox {
            lower: self.lower.iter().zip(&e.lower).map(|(x, d)| x - d).collect(),
            upper: self.upper.iter().zip(&e.upper).map(|(x, d)| x - d).collect(),
        })
    }

    pub fn minkowski_sum(&self, e: &Hyperbox) -> Result<Hyperbox> {
        self.same_dim(e)?;
        Ok(Hyperbox {
            lower: self.lower.iter().zip(&e.lower).map(|(x, d)| x + d).collect(),
            upper: self.upper.iter().zip(&e.upper).map(|(x, d)| x + d).collect(),
        })
    }

    pub fn intersect(&self, e: &Hyperbox) -> Result<Hyperbox> {
        self.same_dim(e)?;
        Ok(Hyperbox {
            lower: self.lower.iter().zip(&e.lower).map(|(x, d)| x.max(*d)).collect(),
            upper: self.upper.iter().zip(&e.upper).map(|(x, d)| x.min(*d)).collect(),
        })
    }

    /// Interval hull of `{M z : z ∈ self}`.
    pub fn image_bounds(&self, m: &Mat) -> Result<Hyperbox> {
        if m.cols() != self.dim() {
            return Err(dim_err("matrix columns vs box dimension"));
        }
        let mut lo = vec![0.0; m.rows()];
        let mut hi = vec![0.0; m.rows()];
        for i in 0..m.rows() {
            for (j, &a) in m.row(i).iter().enumerate() {
                let (p, q) = (a * self.lower[j], a * self.upper[j]);
                lo[i] += p.min(q);
                hi[i] += p.max(q);
            }
        }
        Ok(Hyperbox { lower: lo, upper: hi })
    }

    /// All `2^n` vertices (intended for small `n`).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..1usize << n)
            .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { self.upper[i] } else { self.lower[i] }).collect())
            .collect()
    }
}

/// Free-function form of [`Hyperbox::pontryagin_diff`].
pub fn pontryagin_diff_box(x: &Hyperbox, e: &Hyperbox) -> Result<Hyperbox> {
    x.pontryagin_diff(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pontryagin_examples() {
        let x = Hyperbox::new(vec![-4.0], vec![4.0]).unwrap();
        let r = pontryagin_diff_box(&x, &Hyperbox::symmetric(&[0.41])).unwrap();
        assert!((r.upper[0] - 3.59).abs() < 1e-15 && (r.lower[0] + 3.59).abs() < 1e-15);
        assert_eq!(x.pontryagin_diff(&Hyperbox::origin(1)).unwrap(), x);
        let tight = Hyperbox::ball(1, 1.0).pontryagin_diff(&Hyperbox::ball(1, 2.0)).unwrap();
        assert!(tight.is_empty());
    }

    #[test]
    fn image_of_box() {
        let b = Hyperbox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        let m = Mat::from_rows(&[[1.0, -1.0]]).unwrap();
        let r = b.image_bounds(&m).unwrap();
        assert_eq!((r.lower[0], r.upper[0]), (-3.0, 1.0));
    }

    #[test]
    fn dimension_checked() {
        assert!(Hyperbox::ball(2, 1.0).pontryagin_diff(&Hyperbox::ball(3, 1.0)).is_err());
    }
}
