//! Property tests of the module invariants through the public API.

use nalgebra::DMatrix;
use proptest::prelude::*;
use sdmom_core::{
    apply_attack, bucket_means, empirical_h, estimate_scatter, generate_clean, median, median_with, momad,
    partition_blocks, psd_project, quantile_w, sdo_eval, solve_rstar, tail_h, AttackKind, AttackSpec, BucketedMeans,
    DataModel, Dataset, DirectionSet, EmpiricalTail, MedianConvention, ModelKind, Provenance, RstarBudget, TailModel,
};

fn values(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![(-4i32..=4).prop_map(f64::from), -100.0..100.0f64], 1..max_len)
}

fn rows(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, d), n)
}

fn upper_middle(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[s.len() / 2]
}

proptest! {
    #[test]
    fn median_shift_and_scale(v in values(20), c in -50.0..50.0f64, a in 0.0..20.0f64) {
        let m = median(&v).unwrap();
        // small integers and dyadic shifts keep the arithmetic exact
        let c = c.round();
        let a = a.round();
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let scaled: Vec<f64> = v.iter().map(|x| a * x).collect();
        prop_assert_eq!(median(&shifted).unwrap(), m + c);
        prop_assert_eq!(median(&scaled).unwrap(), a * m);
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        prop_assert_eq!(median(&neg).unwrap(), -upper_middle(&v));
    }

    #[test]
    fn median_is_permutation_invariant(mut v in values(20), seed in any::<u64>()) {
        let m = median(&v).unwrap();
        let len = v.len();
        v.rotate_left((seed as usize) % len);
        v.reverse();
        prop_assert_eq!(median(&v).unwrap(), m);
        prop_assert!(median_with(&v, MedianConvention::Midpoint).unwrap() >= m);
    }

    #[test]
    fn quantile_and_tail(v in values(20), p in 0.001..0.999f64, q in 0.001..0.999f64) {
        let tail = EmpiricalTail::new(v.clone()).unwrap();
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(quantile_w(&tail, lo).unwrap() >= quantile_w(&tail, hi).unwrap());
        prop_assert!(empirical_h(&tail, quantile_w(&tail, p).unwrap()) >= p);
        // one jump per distinct value
        let mut distinct = v.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let mut probes: Vec<f64> = distinct.iter().flat_map(|x| [x - 1e-9, *x]).collect();
        probes.push(distinct[distinct.len() - 1] + 1.0);
        let hs: Vec<f64> = probes.iter().map(|&r| empirical_h(&tail, r)).collect();
        prop_assert!(hs.windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(hs.windows(2).filter(|w| w[0] > w[1]).count(), distinct.len());
        prop_assert_eq!(empirical_h(&tail, f64::NEG_INFINITY), 1.0);
        prop_assert_eq!(empirical_h(&tail, f64::INFINITY), 0.0);
    }

    #[test]
    fn bucket_means_are_affine(pts in rows(12..40, 3), k in 1usize..6, a in -4i32..4, b in rows(1..2, 3)) {
        let n = pts.len() - pts.len() % k;
        let data = Dataset::from_rows(&pts[..n]).unwrap();
        let part = partition_blocks(n, k, 0, false).unwrap();
        let means = bucket_means(&data, &part).unwrap();
        let a = f64::from(a) * 0.5;
        let mapped = data.map_affine(&(DMatrix::identity(3, 3) * a), &b[0]).unwrap();
        let mapped_means = bucket_means(&mapped, &part).unwrap();
        for j in 0..k {
            let block: Vec<&[f64]> = part.blocks[j].iter().map(|&i| data.row(i)).collect();
            for c in 0..3 {
                let direct = block.iter().map(|r| r[c]).sum::<f64>() / block.len() as f64;
                prop_assert!((means.mean(j)[c] - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
                let expect = a * means.mean(j)[c] + b[0][c];
                prop_assert!((mapped_means.mean(j)[c] - expect).abs() <= 1e-11 * (1.0 + expect.abs()));
            }
        }
    }

    #[test]
    fn momad_symmetric_and_nonnegative(pts in rows(2..25, 2), v in rows(1..2, 2)) {
        let means = BucketedMeans::from_points(&pts).unwrap();
        let neg: Vec<f64> = v[0].iter().map(|x| -x).collect();
        let m = momad(&means, &v[0]).unwrap();
        prop_assert!(m >= 0.0);
        prop_assert_eq!(m, momad(&means, &neg).unwrap());
    }

    #[test]
    fn sdo_eval_one_dim_minimizer_is_median(pts in prop::collection::vec(-10.0..10.0f64, 1..12)) {
        // odd K
        let pts = if pts.len() % 2 == 0 { &pts[1..] } else { &pts[..] };
        prop_assume!(!pts.is_empty());
        let rows: Vec<Vec<f64>> = pts.iter().map(|&x| vec![x]).collect();
        let means = BucketedMeans::from_points(&rows).unwrap();
        let dirs = DirectionSet::from_vectors(1, &[vec![1.0]], Provenance::Canonical).unwrap();
        let med = median(pts).unwrap();
        let at_med = sdo_eval(&[med], &means, &dirs).unwrap();
        prop_assert_eq!(at_med, 0.0);
        for i in 0..=200 {
            let x = -12.0 + 24.0 * f64::from(i) / 200.0;
            prop_assert!(sdo_eval(&[x], &means, &dirs).unwrap() >= at_med);
        }
    }

    #[test]
    fn scatter_symmetric_scale_equivariant(seed in 0u64..1000, lam in 0.25..4.0f64) {
        let model = DataModel::standard(ModelKind::Gaussian, 3).unwrap();
        let data = generate_clean(&model, 60, seed).unwrap();
        let est = estimate_scatter(&data, 20).unwrap();
        prop_assert_eq!(&est.matrix, &est.matrix.transpose());
        let scaled = data.map_affine(&(DMatrix::identity(3, 3) * lam), &[0.0; 3]).unwrap();
        let est2 = estimate_scatter(&scaled, 20).unwrap();
        for (x, y) in est.matrix.iter().zip(est2.matrix.iter()) {
            prop_assert!((lam * lam * x - y).abs() <= 1e-10 * (1.0 + y.abs()));
        }
        let means = bucket_means(&data, &partition_blocks(60, 20, 0, false).unwrap()).unwrap();
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            let diag = 3.0 * momad(&means, &e).unwrap().powi(2);
            prop_assert!((est.matrix[(i, i)] - diag).abs() <= 1e-12 * (1.0 + diag));
        }
        let p = psd_project(&est).unwrap();
        prop_assert!(p.matrix.clone().symmetric_eigenvalues().iter().all(|&e| e >= -1e-10));
    }

    #[test]
    fn tail_models_are_monotone_and_symmetric(r in -6.0..6.0f64, dr in 0.0..3.0f64, d in 4usize..12) {
        for m in [TailModel::Gaussian, TailModel::MarkovBound, TailModel::elliptical(d).unwrap()] {
            let (a, b) = (tail_h(&m, r), tail_h(&m, r + dr));
            prop_assert!((0.0..=1.0).contains(&a) && b <= a);
        }
        for m in [TailModel::Gaussian, TailModel::elliptical(d).unwrap()] {
            prop_assert!((tail_h(&m, -r) - (1.0 - tail_h(&m, r))).abs() <= 1e-9);
            prop_assert!((tail_h(&m, 0.0) - 0.5).abs() <= 1e-12);
        }
    }

    #[test]
    fn rstar_resubstitutes_and_is_monotone(d in 1usize..20, k in 50usize..5000, u in 0.0..5.0f64, frac in 0.0..0.2f64, c0 in 0.05..0.5f64) {
        let h = |r: f64| TailModel::MarkovBound.h(r);
        let b = RstarBudget { d, k, u, n_out: (frac * k as f64) as usize, c0 };
        prop_assume!(b.constant_part() < 0.45);
        let r = solve_rstar(h, &b).unwrap();
        prop_assert!(b.lhs(&h, r) < 0.5);
        let more_k = solve_rstar(h, &RstarBudget { k: 2 * k, ..b }).unwrap();
        prop_assert!(more_k <= r + 1e-9);
        if let Ok(r2) = solve_rstar(h, &RstarBudget { u: u + 1.0, d: d + 1, n_out: b.n_out + 1, ..b }) {
            prop_assert!(r2 >= r - 1e-9);
        }
    }

    #[test]
    fn attacks_change_exactly_n_out_rows(seed in 0u64..500, n_out in 0usize..30, which in 0usize..4) {
        let model = DataModel::standard(ModelKind::Gaussian, 2).unwrap();
        let data = generate_clean(&model, 100, seed).unwrap();
        let kind = [
            AttackKind::RelocateFar,
            AttackKind::LargestNormReplace,
            AttackKind::ClusterShift,
            AttackKind::BlockPoison { k: 10, partition_seed: seed, shuffle: true },
        ][which];
        let out = apply_attack(&data, &AttackSpec { kind, n_out, magnitude: 1e3, seed }).unwrap();
        let changed = (0..100).filter(|&i| out.row(i) != data.row(i)).count();
        prop_assert_eq!(changed, n_out);
        prop_assert_eq!(out.oracle.as_ref().unwrap().outlier_indices.len(), n_out);
        prop_assert_eq!(generate_clean(&model, 100, seed).unwrap(), data.clone());
        prop_assert_ne!(generate_clean(&model, 100, seed + 1).unwrap(), data);
    }
}
