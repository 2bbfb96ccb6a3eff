use l1rg_core::f16;
use l1rg_core::l1ac::{L1Config, PlantMatrices};
use l1rg_core::l1rg::{design, DesignOptions, L1RGController, ProblemSpec};
use l1rg_core::linsys::{l1_norm, realize_cascade, Cascade, Mat};
use l1rg_core::simkit::{max_state_gap, simulate_l1rg, simulate_nominal, SimOptions};
use l1rg_core::uncertainty::{f16_uncertainty, ZeroUncertainty};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn controller(t_runtime: f64) -> L1RGController {
    let cfg = L1Config { ae: Mat::identity(3).scale(f16::AE_DIAG), kf: vec![200.0; 2], t: 1e-5, gamma1: 0.01 };
    let opts = DesignOptions { offdiag: f16::TX_OFFDIAG, t_runtime: Some(t_runtime), ..Default::default() };
    design(&ProblemSpec::f16(), &cfg, &opts, &f16_uncertainty()).unwrap()
}

fn r(t: f64) -> Vec<f64> {
    f16::reference(t).to_vec()
}

/// `∫|y_i|` of the impulse response by RK4 and the trapezoid rule.
fn impulse_l1_rows(a: &Mat, b: &Mat, c: &Mat, h: f64, horizon: f64) -> Vec<f64> {
    let steps = (horizon / h) as usize;
    let mut rows = vec![0.0; c.rows()];
    for j in 0..b.cols() {
        let mut x = b.col(j);
        let mut prev = c.mul_vec(&x);
        for _ in 0..steps {
            let k1 = a.mul_vec(&x);
            let t: Vec<f64> = x.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
            let k2 = a.mul_vec(&t);
            let t: Vec<f64> = x.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
            let k3 = a.mul_vec(&t);
            let t: Vec<f64> = x.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
            let k4 = a.mul_vec(&t);
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let y = c.mul_vec(&x);
            for i in 0..rows.len() {
                rows[i] += 0.5 * h * (prev[i].abs() + y[i].abs());
            }
            prev = y;
        }
    }
    rows
}

#[test]
fn gxm_norm_matches_impulse_oracle() {
    let p = PlantMatrices::from_gains(&f16::a(), &f16::b(), &f16::kx(), &f16::kv()).unwrap();
    let kf = [200.0, 200.0];
    let sys = realize_cascade(Cascade::Gxm { am: &p.am, b: &p.b, kf: &kf }).unwrap();
    let norm = l1_norm(&sys).unwrap();
    let oracle = impulse_l1_rows(&sys.a, &sys.b, &sys.c, 1e-5, 30.0);
    for (got, want) in norm.per_row.iter().zip(&oracle) {
        assert!((got - want).abs() <= 1e-4 * want, "{got} vs {want}");
    }
}

#[test]
fn zero_uncertainty_equivalence() {
    let c = controller(f16::T_PRACTICAL);
    let x0 = [0.0; 3];
    let tr = simulate_l1rg(&c, &ZeroUncertainty { m: 2 }, &r, &x0, &SimOptions::new(15.0, 2e-4)).unwrap();
    let nom = simulate_nominal(&c, &tr, &x0).unwrap();
    let gap = max_state_gap(&tr, &nom).unwrap();
    assert!(gap.iter().all(|g| *g <= 1e-6), "{gap:?}");
    // the logged nominal input is the baseline law on the nominal state
    for k in 0..nom.len() {
        let un = c.baseline_input(nom.x.row(k), nom.v.row(k));
        for (a, b) in un.iter().zip(nom.u.row(k)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn rk4_fourth_order() {
    let c = controller(f16::T_PRACTICAL);
    let unc = f16_uncertainty();
    let x0 = [0.05, 0.0, -0.05];
    let end = |h: f64| {
        let tr = simulate_l1rg(&c, &unc, &r, &x0, &SimOptions::new(1.0, h)).unwrap();
        tr.x.row(tr.len() - 1).to_vec()
    };
    let (a, b, d) = (end(5e-4), end(2.5e-4), end(1.25e-4));
    let diff = |p: &[f64], q: &[f64]| p.iter().zip(q).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let (e1, e2) = (diff(&a, &b), diff(&b, &d));
    // a fourth-order method shrinks the difference 16x per halving
    assert!(e1 / e2 > 8.0, "observed ratio {} ({e1:e}, {e2:e})", e1 / e2);
}

#[test]
fn sigma2_shrinks_with_sample_time() {
    let unc = f16_uncertainty();
    let x0 = [0.0; 3];
    let peak = |ae: &[f64], t: f64| {
        let cfg = L1Config { ae: Mat::from_diag(ae), kf: vec![200.0; 2], t: 1e-5, gamma1: 0.01 };
        let opts = DesignOptions { offdiag: f16::TX_OFFDIAG, t_runtime: Some(t), ..Default::default() };
        let c = design(&ProblemSpec::f16(), &cfg, &opts, &unc).unwrap();
        let tr = simulate_l1rg(&c, &unc, &r, &x0, &SimOptions::new(3.0, t.min(2e-4))).unwrap();
        tr.sigma2.max_abs(0)
    };
    // with Ae = aI the unmatched estimate only carries rounding residue
    assert!(peak(&[-10.0; 3], 1e-3) < 1e-9);
    let ae = [-10.0, -15.0, -20.0];
    let (coarse, fine) = (peak(&ae, 1e-3), peak(&ae, 1e-4));
    assert!(coarse > 1e-6 && fine < coarse, "{fine} vs {coarse}");
}

#[test]
fn uncertainty_estimate_tracks_truth() {
    let c = controller(f16::T_PRACTICAL);
    let tr = simulate_l1rg(&c, &f16_uncertainty(), &r, &[0.0; 3], &SimOptions::new(7.0, 2e-4)).unwrap();
    let (i0, i1) = (tr.index_at(1.0).unwrap(), tr.index_at(7.0).unwrap());
    for j in 0..2 {
        let mean = (i0..=i1).map(|k| (tr.sigma1.row(k)[j] - tr.f.row(k)[j]).abs()).sum::<f64>() / (i1 - i0 + 1) as f64;
        assert!(mean <= 0.1, "channel {j}: {mean}");
    }
}

#[test]
fn tightened_boxes_fit_inside_constraints() {
    let c = controller(f16::T_PRACTICAL);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let x: Vec<f64> = (0..3)
            .map(|i| {
                rng.gen_range(c.xn.lower[i]..=c.xn.upper[i]) + rng.gen_range(c.tilde_x.lower[i]..=c.tilde_x.upper[i])
            })
            .collect();
        assert!(c.spec.x.contains(&x, 1e-12));
        let u: Vec<f64> = (0..2)
            .map(|j| {
                rng.gen_range(c.un.lower[j]..=c.un.upper[j]) + rng.gen_range(c.tilde_u.lower[j]..=c.tilde_u.upper[j])
            })
            .collect();
        assert!(c.spec.u.contains(&u, 1e-12));
    }
}
