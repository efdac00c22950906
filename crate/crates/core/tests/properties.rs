//! Property tests for the clustering, noise and field invariants.

use proptest::prelude::*;

use ronfa_core::embedding::{generate_synthetic, SynthSpec};
use ronfa_core::episode::{sample_episode, EpisodeSpec, SupportItem, TrueLabel};
use ronfa_core::field::{
    activation_radius, adapt_scale, dog_profile, field_response, predict, FieldConfig,
    Termination,
};
use ronfa_core::noise::{apply_noise, NoiseKind, NoiseSpec, OutlierPool};
use ronfa_core::prototype::{
    run_clustering, soft_assign, ClusterConfig, ClusterMode, PrototypeSet,
};

fn points(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, d), n)
}

/// Support items where the first `m` carry labels 0..m and the rest are arbitrary.
fn support(m: usize) -> impl Strategy<Value = Vec<SupportItem>> {
    (1usize..5).prop_flat_map(move |d| {
        (points(m..m + 10, d), proptest::collection::vec(0..m, 10)).prop_map(move |(xs, extra)| {
            xs.into_iter()
                .enumerate()
                .map(|(i, features)| {
                    let c = if i < m { i } else { extra[i - m] };
                    SupportItem {
                        features,
                        given_label: c,
                        true_label: TrueLabel::Class(c),
                        corrupted: false,
                    }
                })
                .collect()
        })
    })
}

fn brute_nearest(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut d: Vec<(f64, usize)> = centers
        .iter()
        .enumerate()
        .map(|(c, p)| (p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), c))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    (d[0].1, d[1].0 / d[0].0)
}

proptest! {
    #[test]
    fn soft_rows_are_stochastic(
        xs in points(1..15, 3),
        cs in points(1..6, 3),
        tau in 1e-3f64..1e3,
    ) {
        let w = soft_assign(&xs, &cs, tau);
        for i in 0..w.rows() {
            let row = w.row(i);
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn centers_stay_in_the_bounding_box(s in support(3), hard in any::<bool>()) {
        let config = ClusterConfig {
            mode: if hard { ClusterMode::Hard } else { ClusterMode::Soft },
            ..ClusterConfig::default()
        };
        let p = run_clustering(&s, 3, &config).unwrap();
        let d = s[0].features.len();
        for c in &p.centers {
            for k in 0..d {
                let lo = s.iter().map(|x| x.features[k]).fold(f64::INFINITY, f64::min);
                let hi = s.iter().map(|x| x.features[k]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(c[k] >= lo - 1e-12 && c[k] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn translation_moves_centers_by_the_same_offset(s in support(3), t in -50.0f64..50.0) {
        let config = ClusterConfig::default();
        let base = run_clustering(&s, 3, &config).unwrap();
        let moved: Vec<SupportItem> = s
            .iter()
            .map(|x| SupportItem {
                features: x.features.iter().map(|v| v + t).collect(),
                ..x.clone()
            })
            .collect();
        let shifted = run_clustering(&moved, 3, &config).unwrap();
        prop_assert_eq!(base.iterations_used, shifted.iterations_used);
        for (a, b) in base.centers.iter().zip(&shifted.centers) {
            for (va, vb) in a.iter().zip(b) {
                prop_assert!((va + t - vb).abs() < 1e-9, "{} vs {}", va + t, vb);
            }
        }
    }

    #[test]
    fn relabeling_permutes_centers(s in support(3), rot in 1usize..3) {
        let config = ClusterConfig::default();
        let base = run_clustering(&s, 3, &config).unwrap();
        let relabeled: Vec<SupportItem> = s
            .iter()
            .map(|x| SupportItem {
                given_label: (x.given_label + rot) % 3,
                ..x.clone()
            })
            .collect();
        let perm = run_clustering(&relabeled, 3, &config).unwrap();
        for c in 0..3 {
            for (a, b) in base.centers[c].iter().zip(&perm.centers[(c + rot) % 3]) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cold_soft_matches_hard(s in support(2)) {
        let hard = ClusterConfig { mode: ClusterMode::Hard, ..ClusterConfig::default() };
        let cold = ClusterConfig { temperature: 1e-6, ..ClusterConfig::default() };
        // skip inputs where some point is (nearly) equidistant from two centers
        let mut centers = ronfa_core::prototype::init_centers(&s, 2).unwrap();
        let feats: Vec<Vec<f64>> = s.iter().map(|x| x.features.clone()).collect();
        for _ in 0..100 {
            for x in &feats {
                let d0: f64 = x.iter().zip(&centers[0]).map(|(a, b)| (a - b).powi(2)).sum();
                let d1: f64 = x.iter().zip(&centers[1]).map(|(a, b)| (a - b).powi(2)).sum();
                prop_assume!((d0 - d1).abs() > 1e-3);
            }
            let w = ronfa_core::prototype::hard_assign(&feats, &centers);
            if (0..2).any(|c| w.column_sum(c) == 0.0) {
                break;
            }
            centers = ronfa_core::prototype::update_centers(&feats, &w).unwrap();
        }
        let a = run_clustering(&s, 2, &hard).unwrap();
        let b = run_clustering(&s, 2, &cold).unwrap();
        for (ca, cb) in a.centers.iter().zip(&b.centers) {
            for (va, vb) in ca.iter().zip(cb) {
                prop_assert!((va - vb).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn active_set_is_the_firing_ball(
        rho in proptest::collection::vec(0.0f64..10.0, 2..8),
        sigma in 0.01f64..20.0,
        h_u in 0.05f64..0.95,
    ) {
        let config = FieldConfig { h_u, ..FieldConfig::default() };
        let r_h = activation_radius(&config).unwrap();
        let protos = PrototypeSet::from_centers(rho.iter().map(|&r| vec![r]).collect());
        let state = field_response(&[0.0], &protos, sigma, &config).unwrap();
        for (c, &r) in rho.iter().enumerate() {
            let boundary = sigma * r_h;
            if (r - boundary).abs() > 1e-9 * boundary.max(1.0) {
                prop_assert_eq!(state.u[c] > 0.0, r < boundary);
            }
        }
        let bigger = field_response(&[0.0], &protos, sigma * 1.5, &config).unwrap();
        prop_assert!(bigger.n_active >= state.n_active);
    }

    #[test]
    fn adaptive_prediction_is_the_nearest_prototype(
        centers in points(2..8, 4),
        x in proptest::collection::vec(-5.0f64..5.0, 4),
    ) {
        let (nearest, ratio) = brute_nearest(&x, &centers);
        prop_assume!(ratio > 1.0 + 1e-6);
        let r = adapt_scale(&x, &PrototypeSet::from_centers(centers), &FieldConfig::default()).unwrap();
        prop_assert_eq!(r.terminated, Termination::SingleActivation);
        prop_assert!(r.trace.len() <= 100);
        prop_assert_eq!(r.predicted, nearest);
    }

    #[test]
    fn prediction_is_isometry_invariant(
        centers in points(2..6, 2),
        x in proptest::collection::vec(-5.0f64..5.0, 2),
        angle in 0.0f64..std::f64::consts::TAU,
        shift in proptest::collection::vec(-10.0f64..10.0, 2),
    ) {
        let (_, ratio) = brute_nearest(&x, &centers);
        prop_assume!(ratio > 1.0 + 1e-6);
        let map = |p: &[f64]| {
            let (s, c) = angle.sin_cos();
            vec![c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]]
        };
        let config = FieldConfig::default();
        let a = predict(&x, &PrototypeSet::from_centers(centers.clone()), &config).unwrap();
        let moved: Vec<Vec<f64>> = centers.iter().map(|p| map(p)).collect();
        let b = predict(&map(&x), &PrototypeSet::from_centers(moved), &config).unwrap();
        prop_assert_eq!(a.predicted, b.predicted);
        prop_assert_eq!(a.trace.len(), b.trace.len());
        for ((sa, na), (sb, nb)) in a.trace.iter().zip(&b.trace) {
            prop_assert!((sa - sb).abs() < 1e-9 * sa.max(1.0));
            prop_assert_eq!(na, nb);
        }
    }

    #[test]
    fn corruption_count_is_exact(k in 1usize..8, rate in 0.0f64..0.99, kind_ix in 0usize..3, seed in any::<u64>()) {
        let kind = [NoiseKind::Symmetric, NoiseKind::Pair, NoiseKind::Outlier][kind_ix];
        let noise = NoiseSpec::new(kind, rate).unwrap();
        let per_class = (rate * k as f64).round() as usize;
        prop_assume!(per_class < k);
        let set = generate_synthetic(&SynthSpec {
            n_classes: 6, per_class: 10, dim: 2, center_radius: 3.0, within_std: 1.0,
        }, 0).unwrap();
        let ep = sample_episode(&set, &EpisodeSpec::new(3, k, 1).unwrap(), seed).unwrap();
        let pool = OutlierPool::excluding(&set, &ep.class_map);
        let noisy = apply_noise(&ep, &noise, Some(&pool), seed.wrapping_add(1)).unwrap();
        for c in 0..3 {
            let n = noisy.support[c * k..(c + 1) * k].iter().filter(|s| s.corrupted).count();
            prop_assert_eq!(n, per_class);
        }
        for s in &noisy.support {
            prop_assert_eq!(s.corrupted, s.true_label != TrueLabel::Class(s.given_label));
        }
        prop_assert_eq!(&noisy.query, &ep.query);
        let again = apply_noise(&ep, &noise, Some(&pool), seed.wrapping_add(1)).unwrap();
        prop_assert_eq!(noisy, again);
    }
}

#[test]
fn kernel_shape() {
    let (a, b) = (1.5, 0.5);
    let phi = |r: f64| dog_profile(r, 1.0, a, b).unwrap();
    let deriv = |r: f64| r * (-a * (-r * r / 2.0).exp() + b / 9.0 * (-r * r / 18.0).exp());
    let trough = 1.5 * (3.0 * 3f64.ln()).sqrt();
    let mut sign_changes = 0;
    let mut prev = phi(0.0);
    let mut inf = f64::INFINITY;
    for i in 1..=200_000 {
        let r = i as f64 * 1e-4;
        let v = phi(r);
        if r < trough - 1e-4 {
            assert!(v < prev, "not decreasing at {r}");
            assert!(deriv(r) < 0.0);
        } else if r > trough + 1e-4 {
            assert!(deriv(r) > 0.0, "derivative at {r}");
        }
        if (v < 0.0) != (prev < 0.0) {
            sign_changes += 1;
        }
        inf = inf.min(v);
        prev = v;
    }
    assert_eq!(sign_changes, 1);
    assert!(inf > -b);
}

#[test]
fn scaling_law() {
    for &(rho, sigma) in &[(0.3, 0.7), (2.0, 3.0), (10.0, 0.5)] {
        let lhs = dog_profile(rho, sigma, 1.5, 0.5).unwrap();
        let rhs = dog_profile(rho / sigma, 1.0, 1.5, 0.5).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }
}

#[test]
fn firing_radius_oracle() {
    // independent bisection on φ1(r) = 0.5 over (0, 1.5)
    let f = |r: f64| 1.5 * (-r * r / 2.0).exp() - 0.5 * (-r * r / 18.0).exp() - 0.5;
    let (mut lo, mut hi) = (0.0f64, 1.5f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    let r_h = activation_radius(&FieldConfig::default()).unwrap();
    assert!((r_h - lo).abs() < 1e-12);
    assert!((r_h - 0.926_299_39).abs() < 1e-8, "{r_h}");
}
