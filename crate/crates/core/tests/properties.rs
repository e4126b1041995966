use meva_core::agg::{mea_weights, mva_weights, rotated_weights, softmax_weights, CovarianceModel, SecondMoments};
use meva_core::kernels::{krr_fit, meea_closed_form, Kernel, KernelFamily, KernelSpec};
use meva_core::linalg::{Matrix, Vector};
use meva_core::pde::{
    burgers_solve, fft_in_place, laplace_fdm, laplace_spectral, sample_burgers_ic, sample_laplace_pair, BurgersScheme,
    Grading, BURGERS_NU,
};
use meva_core::rng;
use meva_core::tabular::Standardizer;
use meva_core::theory::{closed_forms, true_loss, TheoremCase};
use meva_core::train::{fit_meea, fit_meva_sharp, ErrorSamples};
use num_complex::Complex64;
use proptest::collection::vec;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn spd(n: usize, seed: u64) -> Matrix {
    let mut r = rng::seeded(seed);
    let g = Matrix::from_fn(n, n, |_, _| r.sample::<f64, _>(StandardNormal));
    &g * g.transpose() + Matrix::identity(n, n) * 0.1
}

fn quad(a: &Matrix, w: &Vector) -> f64 {
    (w.transpose() * a * w)[(0, 0)]
}

fn samples(seed: u64, n: usize, nm: usize) -> ErrorSamples {
    let mut r = rng::seeded(seed);
    let inputs: Vec<Vec<f64>> = (0..n).map(|_| vec![r.random_range(-1.0..1.0)]).collect();
    let y: Vec<f64> = inputs.iter().map(|x| (3.0 * x[0]).sin()).collect();
    let m = Matrix::from_fn(n, nm, |i, k| y[i] + (k as f64 + 1.0) * 0.1 * r.sample::<f64, _>(StandardNormal));
    ErrorSamples::new(inputs, m, y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn softmax_is_shift_invariant(l in vec(-20.0f64..20.0, 1..8), c in -50.0f64..50.0) {
        let a = softmax_weights(&l).unwrap();
        let shifted: Vec<f64> = l.iter().map(|v| v + c).collect();
        let b = softmax_weights(&shifted).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn identity_rotation_is_softmax(l in vec(-10.0f64..10.0, 1..8)) {
        let a = softmax_weights(&l).unwrap();
        let b = rotated_weights(&CovarianceModel::diagonal(l.clone()).unwrap()).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn mva_is_optimal_among_affine_weights(n in 2usize..7, seed in any::<u64>(), d in vec(-1.0f64..1.0, 6)) {
        let a = spd(n, seed);
        let w = Vector::from_vec(mva_weights(&a).unwrap().into_inner());
        prop_assert!((w.sum() - 1.0).abs() <= 1e-10);
        let mut v = Vector::from_iterator(n, d.into_iter().take(n));
        let shift = v.sum() / n as f64;
        v.add_scalar_mut(-shift);
        let other = &w + v;
        prop_assert!(quad(&a, &w) <= quad(&a, &other) + 1e-12);
    }

    #[test]
    fn mea_solves_normal_equations(n in 1usize..7, seed in any::<u64>(), g in vec(-2.0f64..2.0, 6)) {
        let c = spd(n, seed);
        let gamma = Vector::from_iterator(n, g.into_iter().take(n));
        let alpha = Vector::from_vec(mea_weights(&SecondMoments::new(c.clone(), gamma.clone()).unwrap()).unwrap());
        prop_assert!((&c * alpha - &gamma).norm() <= 1e-8 * gamma.norm().max(1e-300));
    }

    #[test]
    fn kernels_are_bounded_and_symmetric(u in vec(-3.0f64..3.0, 3), v in vec(-3.0f64..3.0, 3), rho in 0.05f64..5.0) {
        for fam in [KernelFamily::Matern32, KernelFamily::Rbf] {
            let k = KernelSpec::new(fam, rho).unwrap();
            let kuv = k.eval(&u, &v).unwrap();
            prop_assert_eq!(kuv, k.eval(&v, &u).unwrap());
            prop_assert!((k.eval(&u, &u).unwrap() - 1.0).abs() <= 1e-15);
            prop_assert!(kuv.abs() <= 1.0);
        }
        let k = KernelSpec::new(KernelFamily::ExpSin2, rho).unwrap();
        let (a, b) = ([u[0]], [v[0]]);
        prop_assert_eq!(k.eval(&a, &b).unwrap(), k.eval(&b, &a).unwrap());
        prop_assert!((k.eval(&a, &a).unwrap() - 1.0).abs() <= 1e-15);
        prop_assert!(k.eval(&a, &b).unwrap().abs() <= 1.0);
    }

    #[test]
    fn krr_interpolates_without_regularization(seed in any::<u64>(), n in 2usize..12) {
        let mut r = rng::seeded(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64 + 0.01 * r.random::<f64>()]).collect();
        let y = Matrix::from_fn(n, 1, |_, _| r.random_range(-1.0..1.0));
        let k = KernelSpec::matern32(0.3).unwrap();
        let m = krr_fit(&xs, &y, &k, 0.0).unwrap();
        let res: f64 = xs.iter().enumerate().map(|(i, x)| (m.predict(x).unwrap()[0] - y[(i, 0)]).powi(2)).sum::<f64>().sqrt();
        prop_assert!(res <= 1e-8 * y.norm());
    }

    #[test]
    // the transformed Gram scales by c^2, so the ridge term must too
    fn meea_is_homogeneous(seed in any::<u64>(), c in 0.1f64..10.0) {
        let s = samples(seed, 8, 2);
        let k = KernelSpec::rbf(0.5).unwrap();
        let mv: Vec<Vec<f64>> = (0..s.len()).map(|i| s.model_row(i)).collect();
        let base = meea_closed_form(s.inputs(), s.targets(), &mv, &k, 1e-3).unwrap();
        let ys: Vec<f64> = s.targets().iter().map(|v| c * v).collect();
        let ms: Vec<Vec<f64>> = mv.iter().map(|r| r.iter().map(|v| c * v).collect()).collect();
        let scaled = meea_closed_form(s.inputs(), &ys, &ms, &k, 1e-3 * c * c).unwrap();
        let x = [0.3];
        let m0 = [0.2, -0.4];
        let m1 = [0.2 * c, -0.4 * c];
        let (p, q) = (base.predict(&x, &m0).unwrap(), scaled.predict(&x, &m1).unwrap());
        prop_assert!((c * p - q).abs() <= 1e-10 * (1.0 + q.abs()));
    }

    #[test]
    fn meva_is_permutation_equivariant_and_convex(seed in any::<u64>(), x in -1.0f64..1.0) {
        let s = samples(seed, 20, 3);
        let k = KernelSpec::matern32(0.4).unwrap();
        let agg = fit_meva_sharp(&s, &k, 1e-3, None).unwrap();
        let perm = [2usize, 0, 1];
        let mp = Matrix::from_fn(s.len(), 3, |i, j| s.model_values()[(i, perm[j])]);
        let sp = ErrorSamples::new(s.inputs().to_vec(), mp, s.targets().to_vec()).unwrap();
        let aggp = fit_meva_sharp(&sp, &k, 1e-3, None).unwrap();
        let vals = [0.5, -1.0, 2.0];
        let valsp: Vec<f64> = perm.iter().map(|&p| vals[p]).collect();
        let (w, pred) = agg.predict(&[x], &vals).unwrap();
        let (_, predp) = aggp.predict(&[x], &valsp).unwrap();
        prop_assert!((pred - predp).abs() <= 1e-10);
        prop_assert!((w.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!((-1.0 - 1e-12..=2.0 + 1e-12).contains(&pred));
    }

    #[test]
    fn meva_ignores_common_shift(seed in any::<u64>(), c in -5.0f64..5.0) {
        let s = samples(seed, 15, 2);
        let k = KernelSpec::rbf(0.3).unwrap();
        let ys: Vec<f64> = s.targets().iter().map(|v| v + c).collect();
        let ms = s.model_values().add_scalar(c);
        let t = ErrorSamples::new(s.inputs().to_vec(), ms, ys).unwrap();
        let a = fit_meva_sharp(&s, &k, 1e-2, None).unwrap().weights(&[0.1]).unwrap();
        let b = fit_meva_sharp(&t, &k, 1e-2, None).unwrap().weights(&[0.1]).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((p - q).abs() <= 1e-10);
        }
    }

    #[test]
    fn laplace_solvers_are_linear(seed in any::<u64>(), c in -3.0f64..3.0) {
        let mut r = rng::seeded(seed);
        let a = sample_laplace_pair(&mut r, 17, 17).f;
        let b = sample_laplace_pair(&mut r, 17, 17).f;
        let sum = a.with_values(a.values().iter().zip(b.values()).map(|(p, q)| p + c * q).collect()).unwrap();
        let solvers: [&dyn Fn(&meva_core::pde::GridFunction) -> meva_core::pde::GridFunction; 2] =
            [&|f| laplace_fdm(f, Grading::Uniform).field, &|f| laplace_spectral(f).field];
        for s in solvers {
            let (ua, ub, us) = (s(&a), s(&b), s(&sum));
            let scale = us.values().iter().fold(1e-300f64, |m, v| m.max(v.abs()));
            for i in 0..us.len() {
                prop_assert!((us.values()[i] - ua.values()[i] - c * ub.values()[i]).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn riemann_creates_no_new_extrema(seed in any::<u64>()) {
        let u0 = sample_burgers_ic(&mut rng::seeded(seed), 64);
        let (lo, hi) = u0.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        let out = burgers_solve(&u0, BurgersScheme::Riemann, BURGERS_NU, 32);
        for v in out.field.values() {
            prop_assert!(*v >= lo - 1e-10 && *v <= hi + 1e-10);
        }
    }

    #[test]
    fn fft_matches_rustfft(re in vec(-1.0f64..1.0, 64), im in vec(-1.0f64..1.0, 64), log2 in 0u32..7) {
        let n = 1usize << log2;
        let mut ours: Vec<Complex64> = (0..n).map(|i| Complex64::new(re[i], im[i])).collect();
        let mut theirs: Vec<rustfft::num_complex::Complex<f64>> =
            (0..n).map(|i| rustfft::num_complex::Complex::new(re[i], im[i])).collect();
        fft_in_place(&mut ours);
        rustfft::FftPlanner::new().plan_fft_forward(n).process(&mut theirs);
        for (a, b) in ours.iter().zip(&theirs) {
            prop_assert!((a.re - b.re).abs() <= 1e-12 * n as f64 && (a.im - b.im).abs() <= 1e-12 * n as f64);
        }
    }

    #[test]
    fn closed_form_optima(seed in any::<u64>(), n in 2usize..6, rho in 0.0f64..0.9, d in vec(-1.0f64..1.0, 5)) {
        let case = TheoremCase::random(&mut rng::seeded(seed), n, 1.0, 0.1, rho).unwrap();
        let f = closed_forms(&case).unwrap();
        prop_assert!((0.0..=1.0).contains(&f.mix_lambda));
        let dir = Vector::from_iterator(n, d.into_iter().take(n));
        let any = &f.alpha_star + &dir;
        prop_assert!(true_loss(&f.alpha_star, &case) <= true_loss(&any, &case) + 1e-12);
        let mut flat = dir.clone();
        let shift = flat.sum() / n as f64;
        flat.add_scalar_mut(-shift);
        let affine = &f.alpha_v + flat;
        prop_assert!(true_loss(&f.alpha_v, &case) <= true_loss(&affine, &case) + 1e-12);
    }

    #[test]
    fn standardized_training_columns(seed in any::<u64>(), rows in 3usize..40) {
        let mut r = rng::seeded(seed);
        let x = Matrix::from_fn(rows, 4, |_, j| (j as f64 + 1.0) * r.sample::<f64, _>(StandardNormal) + 3.0 * j as f64);
        let z = Standardizer::fit(&x).unwrap().apply_matrix(&x);
        for j in 0..4 {
            let c = z.column(j);
            let mean = c.sum() / rows as f64;
            let std = (c.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rows as f64).sqrt();
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!((std - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn meea_interpolates_and_meva_does_not() {
    let s = samples(5, 12, 2);
    let k = KernelSpec::rbf(0.2).unwrap();
    let meea = fit_meea(&s, &k, 1e-12).unwrap();
    let meva = fit_meva_sharp(&s, &k, 1e-3, None).unwrap();
    let mut meva_gap = 0.0f64;
    for i in 0..s.len() {
        let x = &s.inputs()[i];
        let m = s.model_row(i);
        assert!((meea.predict(x, &m).unwrap() - s.targets()[i]).abs() < 1e-6);
        meva_gap = meva_gap.max((meva.predict(x, &m).unwrap().1 - s.targets()[i]).abs());
    }
    assert!(meva_gap > 1e-3);
}
