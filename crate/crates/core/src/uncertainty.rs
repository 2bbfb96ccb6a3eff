//! Matched uncertainty models `f(t, x)` with per-channel Lipschitz data.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::sets::Hyperbox;

/// Constants valid on a box `over`:
/// `|f_j(t,x) − f_j(τ,z)| ≤ l_state‖x − z‖∞ + l_time|t − τ|` and `|f_j(t,x)| ≤ bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzRecord {
    pub l_state: f64,
    pub l_time: f64,
    pub bound: f64,
    pub over: Hyperbox,
}

/// Channel-wise maxima of a set of records.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateBounds {
    pub l_state: f64,
    pub l_time: f64,
    pub bound: f64,
}

/// A matched uncertainty. Implementations must be deterministic.
pub trait UncertaintyModel: Send + Sync {
    /// Number of channels `m`.
    fn channels(&self) -> usize;

    fn evaluate(&self, t: f64, x: &[f64], out: &mut [f64]);

    /// One record per channel, valid for all `x ∈ z` and all `t ≥ 0`.
    fn channel_meta(&self, z: &Hyperbox) -> Vec<LipschitzRecord>;

    fn eval_vec(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.channels()];
        self.evaluate(t, x, &mut out);
        out
    }
}

/// Maximum over channels of each constant.
pub fn aggregate_bounds(records: &[LipschitzRecord]) -> Result<AggregateBounds> {
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.over != first.over) {
            return Err(Error::Parameter("records cover different boxes".into()));
        }
    }
    Ok(records.iter().fold(AggregateBounds { l_state: 0.0, l_time: 0.0, bound: 0.0 }, |acc, r| AggregateBounds {
        l_state: acc.l_state.max(r.l_state),
        l_time: acc.l_time.max(r.l_time),
        bound: acc.bound.max(r.bound),
    }))
}

/// `f ≡ 0`.
#[derive(Clone, Debug)]
pub struct ZeroUncertainty {
    pub m: usize,
}

impl UncertaintyModel for ZeroUncertainty {
    fn channels(&self) -> usize {
        self.m
    }

    fn evaluate(&self, _t: f64, _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }

    fn channel_meta(&self, z: &Hyperbox) -> Vec<LipschitzRecord> {
        (0..self.m).map(|_| LipschitzRecord { l_state: 0.0, l_time: 0.0, bound: 0.0, over: z.clone() }).collect()
    }
}

/// The flight-control benchmark uncertainty, angle of attack `α = x₃` in degrees:
/// `f = [−0.8 sin(0.4πt) − 0.1α², 0.1 − 0.2α]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct F16Uncertainty;

pub fn f16_uncertainty() -> F16Uncertainty {
    F16Uncertainty
}

impl UncertaintyModel for F16Uncertainty {
    fn channels(&self) -> usize {
        2
    }

    fn evaluate(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let alpha = x[2];
        out[0] = -0.8 * libm::sin(0.4 * core::f64::consts::PI * t) - 0.1 * alpha * alpha;
        out[1] = 0.1 - 0.2 * alpha;
    }

    fn channel_meta(&self, z: &Hyperbox) -> Vec<LipschitzRecord> {
        let a = z.lower[2].abs().max(z.upper[2].abs());
        vec![
            LipschitzRecord {
                l_state: 0.2 * a,
                l_time: 0.8 * 0.4 * core::f64::consts::PI,
                bound: 0.8 + 0.1 * a * a,
                over: z.clone(),
            },
            LipschitzRecord { l_state: 0.2, l_time: 0.0, bound: 0.1 + 0.2 * a, over: z.clone() },
        ]
    }
}

/// One channel of [`SinePolynomial`]:
/// `a·sin(ωt + φ) + c₀ + c₁ x_k + c₂ x_k²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTerm {
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub state: usize,
}

/// Tabulated uncertainty whose channels each depend on one state through a
/// quadratic plus a sinusoid in time. Constants are exact interval maxima.
#[derive(Clone, Debug, PartialEq)]
pub struct SinePolynomial {
    terms: Vec<ChannelTerm>,
}

impl SinePolynomial {
    pub fn new(terms: Vec<ChannelTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Parameter("uncertainty needs at least one channel".into()));
        }
        for t in &terms {
            let vals = [t.amplitude, t.omega, t.phase, t.c0, t.c1, t.c2];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter("non-finite uncertainty coefficient".into()));
            }
        }
        Ok(SinePolynomial { terms })
    }

    pub fn terms(&self) -> &[ChannelTerm] {
        &self.terms
    }

    /// Checks that every referenced state exists in an `n`-dimensional plant.
    pub fn check_states(&self, n: usize) -> Result<()> {
        match self.terms.iter().find(|t| t.state >= n) {
            Some(t) => Err(dim_err(&format!("uncertainty references state {} of {n}", t.state))),
            None => Ok(()),
        }
    }
}

impl UncertaintyModel for SinePolynomial {
    fn channels(&self) -> usize {
        self.terms.len()
    }

    fn evaluate(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.terms) {
            let s = x[c.state];
            *o = c.amplitude * libm::sin(c.omega * t + c.phase) + c.c0 + c.c1 * s + c.c2 * s * s;
        }
    }

    fn channel_meta(&self, z: &Hyperbox) -> Vec<LipschitzRecord> {
        self.terms
            .iter()
            .map(|c| {
                let (lo, hi) = (z.lower[c.state], z.upper[c.state]);
                let p = |s: f64| c.c0 + c.c1 * s + c.c2 * s * s;
                let dp = |s: f64| c.c1 + 2.0 * c.c2 * s;
                let mut pmax = p(lo).abs().max(p(hi).abs());
                if c.c2 != 0.0 {
                    let v = -c.c1 / (2.0 * c.c2);
                    if v > lo && v < hi {
                        pmax = pmax.max(p(v).abs());
                    }
                }
                LipschitzRecord {
                    l_state: dp(lo).abs().max(dp(hi).abs()),
                    l_time: c.amplitude.abs() * c.omega.abs(),
                    bound: c.amplitude.abs() + pmax,
                    over: z.clone(),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_box() -> Hyperbox {
        Hyperbox::symmetric(&[1e3, 1e3, 4.0])
    }

    #[test]
    fn f16_values() {
        let f = f16_uncertainty();
        assert_eq!(f.eval_vec(0.0, &[0.0, 0.0, 0.0]), vec![0.0, 0.1]);
        let v = f.eval_vec(1.25, &[0.0, 0.0, 2.0]);
        assert!((v[0] + 1.2).abs() < 1e-15 && (v[1] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn f16_meta_on_constraint_box() {
        let recs = f16_uncertainty().channel_meta(&x_box());
        assert!((recs[0].bound - 2.4).abs() < 1e-15);
        assert!((recs[1].bound - 0.9).abs() < 1e-15);
        let agg = aggregate_bounds(&recs).unwrap();
        assert!((agg.l_state - 0.8).abs() < 1e-15);
        assert!((agg.bound - 2.4).abs() < 1e-15);
        assert!((recs[0].l_time - 0.32 * core::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn aggregate_trivia() {
        let z = x_box();
        let zero = ZeroUncertainty { m: 2 }.channel_meta(&z);
        let a = aggregate_bounds(&zero).unwrap();
        assert_eq!((a.l_state, a.l_time, a.bound), (0.0, 0.0, 0.0));
        let one = &f16_uncertainty().channel_meta(&z)[..1];
        assert_eq!(aggregate_bounds(one).unwrap().bound, one[0].bound);
        let mut mixed = f16_uncertainty().channel_meta(&z);
        mixed[1].over = Hyperbox::ball(3, 1.0);
        assert!(aggregate_bounds(&mixed).is_err());
    }

    #[test]
    fn tabulated_matches_builtin_on_symmetric_boxes() {
        let tab = SinePolynomial::new(vec![
            ChannelTerm {
                amplitude: -0.8,
                omega: 0.4 * core::f64::consts::PI,
                phase: 0.0,
                c0: 0.0,
                c1: 0.0,
                c2: -0.1,
                state: 2,
            },
            ChannelTerm { amplitude: 0.0, omega: 0.0, phase: 0.0, c0: 0.1, c1: -0.2, c2: 0.0, state: 2 },
        ])
        .unwrap();
        let z = Hyperbox::symmetric(&[1.0, 1.0, 3.0]);
        for (a, b) in tab.channel_meta(&z).iter().zip(f16_uncertainty().channel_meta(&z)) {
            assert!((a.l_state - b.l_state).abs() < 1e-15);
            assert!((a.l_time - b.l_time).abs() < 1e-15);
            assert!((a.bound - b.bound).abs() < 1e-15);
        }
        let x = [0.3, -2.0, 1.7];
        for (a, b) in tab.eval_vec(0.9, &x).iter().zip(f16_uncertainty().eval_vec(0.9, &x)) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
