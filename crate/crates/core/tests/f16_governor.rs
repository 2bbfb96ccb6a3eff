use l1rg_core::f16;
use l1rg_core::l1ac::L1Config;
use l1rg_core::l1rg::{design, DesignOptions, L1RGController, ProblemSpec};
use l1rg_core::linsys::{expm, Mat};
use l1rg_core::refgov::{
    inter_sample_margin, nominal_model_step, rg_step, tighten_for_sampling, transient_factor, GovernorState,
};
use l1rg_core::sets::Hyperbox;
use l1rg_core::uncertainty::f16_uncertainty;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn controller() -> L1RGController {
    let cfg = L1Config { ae: Mat::identity(3).scale(f16::AE_DIAG), kf: vec![200.0; 2], t: 1e-5, gamma1: 0.01 };
    let opts = DesignOptions { offdiag: f16::TX_OFFDIAG, t_runtime: Some(f16::T_PRACTICAL), ..Default::default() };
    design(&ProblemSpec::f16(), &cfg, &opts, &f16_uncertainty()).unwrap()
}

/// Hit-and-run walk inside the admissible set, started at the origin.
fn hit_and_run(c: &L1RGController, samples: usize, thin: usize, seed: u64) -> Vec<Vec<f64>> {
    let p = &c.gov.oinf;
    let d = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = vec![0.0; d];
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        for _ in 0..thin {
            let mut dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nrm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
            dir.iter_mut().for_each(|x| *x /= nrm);
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..p.len() {
                let a = p.normal(i);
                let ad: f64 = a.iter().zip(&dir).map(|(x, y)| x * y).sum();
                let slack = p.offset(i) - a.iter().zip(&z).map(|(x, y)| x * y).sum::<f64>();
                if ad > 0.0 {
                    hi = hi.min(slack / ad);
                } else if ad < 0.0 {
                    lo = lo.max(slack / ad);
                }
            }
            let t = rng.gen_range(lo..=hi);
            for (zi, di) in z.iter_mut().zip(&dir) {
                *zi += t * di;
            }
        }
        out.push(z.clone());
    }
    out
}

#[test]
fn admissible_set_is_positively_invariant() {
    let c = controller();
    let m = c.m();
    let samples = hit_and_run(&c, 10_000, 5, 11);
    let mut spread = vec![0.0f64; c.gov.oinf.dim()];
    for z in &samples {
        assert!(c.gov.oinf.contains(z, 1e-9));
        let st = GovernorState::new(&z[..m], &z[m..]);
        let next = nominal_model_step(&c.gov, &st, &z[..m]);
        assert!(c.gov.admits(&next.v_prev, &next.xn, 1e-9), "left the set from {z:?}");
        for (s, v) in spread.iter_mut().zip(z) {
            *s = s.max(v.abs());
        }
    }
    // the walk explores the set rather than sitting near the origin
    assert!(spread[0] > 1.0 && spread[1] > 1.0, "{spread:?}");
}

#[test]
fn first_step_matches_bisection() {
    let c = controller();
    let st = GovernorState::new(&[0.0, 0.0], &[0.0; 3]);
    let r = f16::reference(0.0);
    let s = rg_step(&c.gov, &st, &r).unwrap();
    assert!(s.kappa < 1.0 && s.binding_row.is_some());
    let member = |k: f64| {
        let v: Vec<f64> = r.iter().map(|ri| k * ri).collect();
        c.gov.admits(&v, &st.xn, 0.0)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if member(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((s.kappa - lo).abs() <= 1e-9, "κ = {} vs bisection {lo}", s.kappa);
}

#[test]
fn margin_grid_refinement() {
    let c = controller();
    let td = f16::TD;
    let coarse = transient_factor(&c.plant.am, td, 1000).unwrap();
    let fine = transient_factor(&c.plant.am, td, 10_000).unwrap();
    assert!((coarse - fine).abs() <= 1e-8);
    // the refined maximum dominates a brute-force grid
    let id = Mat::identity(3);
    let brute = (0..=20_000)
        .map(|i| (&expm(&c.plant.am, td * i as f64 / 20_000.0).unwrap() - &id).norm_inf())
        .fold(0.0, f64::max);
    assert!(coarse >= brute - 1e-12);
    let v = Hyperbox::ball(2, f16::R_BOUND);
    let nu = inter_sample_margin(&c.plant.am, &c.plant.bv, &c.xn, &v, td).unwrap();
    assert!(nu > 0.0 && nu.is_finite());
}

#[test]
fn sampling_tightening() {
    let c = controller();
    let v = Hyperbox::ball(2, f16::R_BOUND);
    let nu = inter_sample_margin(&c.plant.am, &c.plant.bv, &c.xn, &v, f16::TD).unwrap();
    // the wide γ and q constraints make ν larger than the α half-width
    assert!(tighten_for_sampling(&c.xn, &c.un, &f16::kx(), nu).is_err());
    let small = 1e-3;
    let (xh, uh) = tighten_for_sampling(&c.xn, &c.un, &f16::kx(), small).unwrap();
    let ku = f16::kx().norm_inf() * small;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let p: Vec<f64> = (0..3).map(|i| rng.gen_range(xh.lower[i]..=xh.upper[i])).collect();
        let d: Vec<f64> = (0..3).map(|_| rng.gen_range(-small..=small)).collect();
        let z: Vec<f64> = p.iter().zip(&d).map(|(a, b)| a + b).collect();
        assert!(c.xn.contains(&z, 1e-12));
        let q: Vec<f64> = (0..2).map(|i| rng.gen_range(uh.lower[i]..=uh.upper[i])).collect();
        let w: Vec<f64> = q.iter().map(|a| a + rng.gen_range(-ku..=ku)).collect();
        assert!(c.un.contains(&w, 1e-12));
    }
}
