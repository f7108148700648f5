use proptest::prelude::*;

use mfz_core::dynamics::{self, SystemId, TakoudisParams, Trajectory};
use mfz_core::embeddings::{self, AlternatingOptions, JsfOptions};
use mfz_core::kernels;
use mfz_core::linalg::{self, Matrix};
use mfz_core::pipeline::ExperimentConfig;
use mfz_core::regression::{self, GhOptions};
use mfz_core::selection::{self, LlrOptions};
use mfz_core::sensors::{self, ChannelSpec, MixingMatrix, TrajectorySet};

fn cloud(n: usize, d: usize) -> impl Strategy<Value = Matrix> {
    proptest::collection::vec(-1.0..1.0f64, n * d).prop_map(move |v| Matrix::from_fn(n, d, |i, j| v[i * d + j]))
}

fn distinct(x: &Matrix) -> bool {
    let d2 = linalg::pairwise_sq_distances(x);
    (0..x.nrows()).all(|i| (0..i).all(|j| d2[(i, j)] > 1e-6))
}

fn max_abs(a: &Matrix, b: &Matrix) -> f64 {
    (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (a[(i, j)] - b[(i, j)]).abs())
        .fold(0.0, f64::max)
}

fn traj_set(n: usize, seed: &[f64]) -> TrajectorySet {
    let mut set = TrajectorySet::new();
    for (k, id) in [SystemId::X, SystemId::Y].into_iter().enumerate() {
        let states = (0..n)
            .map(|i| vec![seed[(i + k) % seed.len()], seed[(2 * i + k + 1) % seed.len()]])
            .collect();
        set.insert(
            id,
            Trajectory {
                times: (0..n).map(|i| i as f64).collect(),
                states,
                dt: 1.0,
            },
        );
    }
    set
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn takoudis_stays_in_simplex(a in 0.0..1.0f64, frac in 0.0..1.0f64) {
        let b = (1.0 - a) * frac;
        let p = TakoudisParams::default();
        let tr = dynamics::integrate(
            |_t, s: &[f64], out: &mut [f64]| out.copy_from_slice(&dynamics::takoudis_rhs([s[0], s[1]], &p)),
            &[a, b],
            0.0,
            300.0,
            0.1,
        ).unwrap();
        for s in &tr.states {
            prop_assert!(s[0] >= -1e-9 && s[1] >= -1e-9 && s[0] + s[1] <= 1.0 + 1e-9, "{s:?}");
        }
    }

    #[test]
    fn integration_is_bit_deterministic(x in -5.0..5.0f64, y in -5.0..5.0f64, z in 10.0..30.0f64) {
        let sys = SystemId::Z.system();
        let a = dynamics::integrate_system(sys.as_ref(), &[x, y, z], 2.0, 0.005).unwrap();
        let b = dynamics::integrate_system(sys.as_ref(), &[x, y, z], 2.0, 0.005).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kernel_is_exactly_symmetric_and_monotone_in_sigma(x in cloud(12, 3), s in 0.1..2.0f64, grow in 1.0..3.0f64) {
        let k = kernels::gaussian_affinity(&x, s).unwrap();
        let wider = kernels::gaussian_affinity(&x, s * grow).unwrap();
        for i in 0..12 {
            prop_assert_eq!(k.w[(i, i)], 1.0);
            for j in 0..12 {
                prop_assert_eq!(k.w[(i, j)].to_bits(), k.w[(j, i)].to_bits());
                if i != j {
                    prop_assert!(wider.w[(i, j)] >= k.w[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn operator_columns_sum_to_one_and_spectrum_is_real(x in cloud(15, 2), s in 0.2..1.5f64) {
        let p = kernels::column_normalize(&kernels::gaussian_affinity(&x, s).unwrap()).unwrap();
        for j in 0..15 {
            let sum: f64 = p.p.col_as_slice(j).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
        let eig = p.p.eigen().unwrap();
        let vals = eig.S().column_vector();
        for i in 0..15 {
            prop_assert!(vals[i].im.abs() < 1e-10, "imaginary part {}", vals[i].im);
            prop_assert!(vals[i].re.abs() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn spectra_are_bounded_by_one(x in cloud(20, 2), y in cloud(20, 2)) {
        prop_assume!(distinct(&x) && distinct(&y));
        let op = |m: &Matrix| kernels::column_normalize(&kernels::median_affinity(m, 0.7).unwrap().0).unwrap();
        let (p1, p2) = (op(&x), op(&y));
        let dm = embeddings::diffusion_maps(&p1, 6).unwrap();
        prop_assert!(dm.eigenvalues.iter().all(|l| l.abs() <= 1.0 + 1e-10));
        let opts = AlternatingOptions { complex_floor: 1.0, ..AlternatingOptions::default() };
        let ad = embeddings::alternating_diffusion(&p1, &p2, 4, &opts).unwrap();
        prop_assert!(ad.eigenvalues.iter().all(|l| l.abs() <= 1.0 + 1e-10));
    }

    #[test]
    fn embeddings_are_repeatable(x in cloud(25, 2)) {
        prop_assume!(distinct(&x));
        let op = kernels::column_normalize(&kernels::median_affinity(&x, 0.5).unwrap().0).unwrap();
        let a = embeddings::diffusion_maps(&op, 5).unwrap();
        let b = embeddings::diffusion_maps(&op, 5).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn jsf_functions_are_orthonormal(x in cloud(30, 2), y in cloud(30, 3)) {
        prop_assume!(distinct(&x) && distinct(&y));
        let opts = JsfOptions { per_sensor: 6, count: 8, ..JsfOptions::default() };
        let set = embeddings::jsf(&[&x, &y], &opts).unwrap();
        let g = set.functions.transpose() * &set.functions;
        prop_assert!(max_abs(&g, &Matrix::identity(8, 8)) < 1e-8);
        prop_assert!(set.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn llr_residual_is_scale_invariant(x in cloud(40, 2), c in prop_oneof![-50.0..-0.1f64, 0.1..50.0f64]) {
        prop_assume!(distinct(&x));
        let target: Vec<f64> = (0..40).map(|i| (3.0 * x[(i, 0)]).sin() + x[(i, 1)] * x[(i, 1)]).collect();
        let scaled: Vec<f64> = target.iter().map(|t| c * t).collect();
        let opts = LlrOptions::default();
        let r1 = selection::llr_residual(&target, &x, &opts).unwrap();
        let r2 = selection::llr_residual(&scaled, &x, &opts).unwrap();
        prop_assert!((r1 - r2).abs() < 1e-10, "{r1} vs {r2}");
    }

    #[test]
    fn target_among_predictors_is_explained(x in cloud(40, 2)) {
        prop_assume!(distinct(&x));
        let target: Vec<f64> = (0..40).map(|i| (5.0 * x[(i, 0)]).cos() * x[(i, 1)]).collect();
        let mut cols = vec![linalg::column(&x, 0), linalg::column(&x, 1)];
        cols.push(target.clone());
        let p = linalg::from_columns(&cols).unwrap();
        let r = selection::llr_residual(&target, &p, &LlrOptions::default()).unwrap();
        prop_assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn knn_hits_training_points_exactly(x in cloud(30, 3), k in 1usize..6) {
        prop_assume!(distinct(&x));
        let y = Matrix::from_fn(30, 2, |i, j| (i * (j + 1)) as f64 * 0.37);
        let model = regression::knn_fit(&x, &y, k).unwrap();
        prop_assert_eq!(model.predict(&x).unwrap(), y);
    }

    #[test]
    fn gh_restriction_matches_training_projection(x in cloud(25, 2), s in 0.3..1.0f64) {
        prop_assume!(distinct(&x));
        let f = Matrix::from_fn(25, 1, |i, _| x[(i, 0)] - 2.0 * x[(i, 1)] * x[(i, 1)]);
        let model = regression::gh_fit(&x, &f, 25, s, 1e-8).unwrap();
        prop_assert!(max_abs(&model.predict(&x).unwrap(), &model.training_projection()) < 1e-8);
    }

    #[test]
    fn predictions_ignore_training_order(x in cloud(20, 2), q in cloud(5, 2), perm in Just((0..20).collect::<Vec<usize>>()).prop_shuffle()) {
        prop_assume!(distinct(&x));
        let y = Matrix::from_fn(20, 1, |i, _| (2.0 * x[(i, 0)]).sin() + x[(i, 1)]);
        let (xp, yp) = (linalg::select_rows(&x, &perm), linalg::select_rows(&y, &perm));
        let a = regression::knn_fit(&x, &y, 4).unwrap().predict(&q).unwrap();
        let b = regression::knn_fit(&xp, &yp, 4).unwrap().predict(&q).unwrap();
        prop_assert!(max_abs(&a, &b) < 1e-12);
        let opts = GhOptions { standardize: false, bandwidth_scale: 0.5, ..GhOptions::default() };
        let a = regression::gh_fit_auto(&x, &y, &opts).unwrap().predict(&q).unwrap();
        let b = regression::gh_fit_auto(&xp, &yp, &opts).unwrap().predict(&q).unwrap();
        prop_assert!(max_abs(&a, &b) < 1e-6 * (1.0 + max_abs(&a, &Matrix::zeros(5, 1))));
    }

    #[test]
    fn mixing_then_inverse_recovers_stream(seed in proptest::collection::vec(-1.0..1.0f64, 7), m in proptest::collection::vec(-1.0..1.0f64, 4)) {
        let mm = MixingMatrix::new(2, m);
        prop_assume!(mm.as_ref().map(|m| m.condition_number().unwrap() < 1e6).unwrap_or(false));
        let mm = mm.unwrap();
        let set = traj_set(20, &seed);
        let s = sensors::assemble(&set, &[ChannelSpec::new(SystemId::X, 0, 0), ChannelSpec::new(SystemId::Y, 1, 0)]).unwrap();
        let back = sensors::apply_mixing(&sensors::apply_mixing(&s, &mm).unwrap(), &mm.inverse().unwrap()).unwrap();
        let scale = max_abs(&s.data, &Matrix::zeros(20, 2)).max(1e-300);
        prop_assert!(max_abs(&back.data, &s.data) / scale < 1e-8);
        prop_assert_eq!(back.sample_index, s.sample_index);
    }

    #[test]
    fn zero_offset_assembly_is_idempotent(seed in proptest::collection::vec(-1.0..1.0f64, 7), pick in proptest::collection::vec(0usize..4, 1..5)) {
        let set = traj_set(15, &seed);
        let all = [
            ChannelSpec::new(SystemId::X, 0, 0),
            ChannelSpec::new(SystemId::X, 1, 0),
            ChannelSpec::new(SystemId::Y, 0, 0),
            ChannelSpec::new(SystemId::Y, 1, 0),
        ];
        let specs: Vec<ChannelSpec> = pick.iter().map(|&k| all[k]).collect();
        let once = sensors::assemble(&set, &specs).unwrap();
        let twice = sensors::assemble(&set, &specs).unwrap().with_columns(&(0..specs.len()).collect::<Vec<_>>());
        prop_assert_eq!(&once.data, &twice.data);
        prop_assert_eq!(once.labels(), twice.labels());
    }

    #[test]
    fn aligned_streams_share_the_clock(seed in proptest::collection::vec(-1.0..1.0f64, 7), d in 1i64..4, s in 0i64..4) {
        let set = traj_set(30, &seed);
        let lists = vec![
            vec![ChannelSpec::new(SystemId::X, 0, 0), ChannelSpec::new(SystemId::X, 0, -d)],
            vec![ChannelSpec::new(SystemId::Y, 1, s)],
        ];
        let out = sensors::assemble_aligned(&set, &lists).unwrap();
        prop_assert_eq!(out[0].len(), out[1].len());
        prop_assert_eq!(&out[0].sample_index, &out[1].sample_index);
        let w = sensors::whiten(&out[0]).unwrap();
        prop_assert_eq!(&w.sample_index, &out[0].sample_index);
    }

    #[test]
    fn config_roundtrips(seed in any::<u64>(), n in 250usize..5000, scale in 0.05..2.0f64, thr in 0.1..0.9f64) {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = seed;
        cfg.n_samples = n;
        cfg.bandwidth_scales = [scale, scale * 1.5];
        cfg.selection.threshold = thr;
        cfg.tau = Some(scale * 100.0);
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
