//! Longitudinal F-16 benchmark (actuator dynamics removed). States are
//! `[γ, q, α]` (flight-path angle, pitch rate, angle of attack), inputs
//! `[δe, δf]` (elevator, flaperon), outputs `[θ, γ]` with `θ = γ + α`.
//! Angles in degrees.

use crate::linsys::Mat;
use crate::sets::Hyperbox;

pub fn a() -> Mat {
    Mat::from_rows(&[[0.0, 0.0067, 1.34], [0.0, -0.869, 43.2], [0.0, 0.993, -1.34]]).expect("3x3")
}

pub fn b() -> Mat {
    Mat::from_rows(&[[0.169, 0.252], [-17.3, -1.58], [-0.169, -0.252]]).expect("3x2")
}

/// Output map to `[θ, γ]`.
pub fn c() -> Mat {
    Mat::from_rows(&[[1.0, 0.0, 1.0], [1.0, 0.0, 0.0]]).expect("2x3")
}

pub fn kx() -> Mat {
    Mat::from_rows(&[[3.25, 0.891, 7.12], [-6.10, -0.898, -10.0]]).expect("2x3")
}

pub fn kv() -> Mat {
    Mat::from_rows(&[[-3.93, 0.679], [2.57, 3.53]]).expect("2x2")
}

/// `|α| ≤ 4`; the other two states are effectively free.
pub fn state_constraints() -> Hyperbox {
    Hyperbox::symmetric(&[1e3, 1e3, 4.0])
}

/// `|δe| ≤ 25`, `|δf| ≤ 22`.
pub fn input_constraints() -> Hyperbox {
    Hyperbox::symmetric(&[25.0, 22.0])
}

pub fn initial_set() -> Hyperbox {
    Hyperbox::ball(3, 0.1)
}

pub const R_BOUND: f64 = 10.0;
pub const AE_DIAG: f64 = -10.0;
pub const TX_OFFDIAG: f64 = 0.01;
pub const TD: f64 = 0.005;
pub const T_PRACTICAL: f64 = 1e-3;
/// Command magnitude up to which the scaled stability condition for `α` is feasible.
pub const V_BOUND: f64 = 1.868;

/// Step schedule: `(9, 6.5)` deg up to 7.5 s, then zero.
pub fn reference(t: f64) -> [f64; 2] {
    if t <= 7.5 {
        [9.0, 6.5]
    } else {
        [0.0, 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsys::is_hurwitz;

    #[test]
    fn closed_loop_is_stable() {
        let am = &a() + &(&b() * &kx());
        assert!(is_hurwitz(&am).unwrap());
        assert!(!is_hurwitz(&a()).unwrap());
    }
}
