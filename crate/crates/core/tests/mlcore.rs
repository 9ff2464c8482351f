mod oracles;

use fraudaware_core::mlcore::*;
use proptest::prelude::*;

fn fixture_dims(seed: u64) -> (usize, usize) {
    let n = 3 + (seed % 6) as usize;
    let d = 1 + (seed / 6 % 3) as usize;
    (n, d)
}

#[test]
fn standardize_examples() {
    let x = FeatureMatrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]], None).unwrap();
    let (z, s) = standardize(&x).unwrap();
    let want = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
    for (i, w) in want.iter().enumerate() {
        assert!((z.get(i, 0) - w).abs() < 1e-12);
        assert_eq!(z.get(i, 1), 0.0);
    }
    assert_eq!(s.scale[1], 1.0);
    let (again, _) = standardize(&z).unwrap();
    for (a, b) in again.values().iter().zip(z.values()) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(standardize(&x.select_rows(&[0])).is_err());
}

#[test]
fn kmeans_matches_exhaustive_partitions() {
    for seed in 0..60 {
        let (n, d) = fixture_dims(seed);
        let x = oracles::random_matrix(seed, n.max(2), d, if seed % 2 == 0 { Some(4) } else { None }, None);
        let m = kmeans_fit(&x, 2, seed).unwrap();
        let best = oracles::kmeans2_optimum(&x);
        assert!((m.inertia - best).abs() <= 1e-9 * best.max(1.0), "seed {seed}: {} vs {best}", m.inertia);
    }
}

#[test]
fn kmeans_single_cluster_is_the_mean() {
    let x = oracles::random_matrix(3, 40, 3, None, None);
    let m = kmeans_fit(&x, 1, 0).unwrap();
    for j in 0..3 {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / 40.0;
        assert!((m.centroids[0][j] - mean).abs() < 1e-12);
    }
    let total: f64 = (0..3)
        .map(|j| {
            let col = x.column(j);
            let mean = col.iter().sum::<f64>() / 40.0;
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum();
    assert!((m.inertia - total).abs() < 1e-9);
    assert!(kmeans_fit(&x, 41, 0).is_err());
}

#[test]
fn kmeans_recovers_blobs_and_reaches_a_fixed_point() {
    let x = oracles::two_blobs(0, 50, 2, 8.0);
    let m = kmeans_fit(&x, 2, 0).unwrap();
    let mut centroids = m.centroids.clone();
    centroids.sort_by(|a, b| a[0].total_cmp(&b[0]));
    for (c, want) in centroids.iter().zip([-4.0, 4.0]) {
        for v in c {
            assert!((v - want).abs() < 0.5, "{c:?}");
        }
    }
    assert!(m.inertia_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    let again = kmeans_from_centroids(&x, m.centroids.clone(), DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
    assert_eq!(again.labels(&x), m.labels(&x));
}

#[test]
fn elbow_on_blobs_and_cube() {
    let blobs = oracles::two_blobs(1, 40, 3, 10.0);
    let e = elbow_select(&blobs, 1..=8, 7).unwrap();
    assert_eq!(e.chosen_k, 2);
    let cube = oracles::random_matrix(11, 200, 3, None, None);
    let e = elbow_select(&cube, 1..=8, 7).unwrap();
    assert_eq!(e.curve.len(), 8);
    assert!(e.curve.windows(2).all(|w| w[1].1 <= w[0].1));
    assert!(elbow_select(&cube, 1..=2, 0).is_err());
}

#[test]
fn tree_matches_greedy_reference_and_never_beats_the_optimum() {
    for seed in 0..300 {
        let n = 4 + (seed % 9) as usize;
        let d = 1 + (seed % 2) as usize;
        let x = oracles::random_matrix(seed, n, d, Some(6), Some(2));
        for depth in 1..=2 {
            let t = tree_fit(&x, Some(depth), 1).unwrap();
            let acc = accuracy(|r| t.predict(r), &x).unwrap();
            assert_eq!(acc, oracles::greedy_tree_accuracy(&x, depth), "seed {seed} depth {depth}");
            assert!(acc <= oracles::best_tree_accuracy(&x, depth) + 1e-12);
        }
    }
}

#[test]
fn tree_examples() {
    let xor = FeatureMatrix::from_rows(
        &[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]],
        Some(vec![0, 1, 1, 0]),
    )
    .unwrap();
    let t = tree_fit(&xor, Some(2), 1).unwrap();
    assert_eq!(accuracy(|r| t.predict(r), &xor).unwrap(), 1.0);
    let single = FeatureMatrix::from_rows(&[vec![1.0], vec![2.0]], Some(vec![3, 3])).unwrap();
    let t = tree_fit(&single, None, 1).unwrap();
    assert_eq!(t.n_leaves(), 1);
    assert_eq!(t.predict_with_confidence(&[9.0]), (3, 1.0));
}

#[test]
fn gbt_loss_is_monotone_on_fixtures() {
    for seed in 0..20 {
        let x = oracles::random_matrix(seed, 30, 3, None, Some(2));
        let m = gbt_fit(&x, &GbtParams::default()).unwrap();
        assert_eq!(m.loss_history.len(), 101);
        assert!(m.loss_history.windows(2).all(|w| w[1] <= w[0] + 1e-12), "seed {seed}");
    }
}

#[test]
fn gbt_examples() {
    let x = oracles::two_blobs(2, 20, 2, 6.0);
    let m = gbt_fit(&x, &GbtParams { n_rounds: 50, ..Default::default() }).unwrap();
    assert_eq!(accuracy(|r| m.predict(r), &x).unwrap(), 1.0);

    let skewed = x.select_rows(&(0..26).collect::<Vec<_>>());
    let m = gbt_fit(&skewed, &GbtParams { learning_rate: 0.0, ..Default::default() }).unwrap();
    assert!(skewed.row_iter().all(|r| m.predict(r) == 0));

    let one = x.select_rows(&[0, 1, 2]);
    let m = gbt_fit(&one, &GbtParams::default()).unwrap();
    assert_eq!(m.predict_with_confidence(&[100.0, 100.0]), (0, 1.0));
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let x = oracles::random_matrix(5, 5, 3, None, Some(2));
    for activation in [Activation::Relu, Activation::Tanh] {
        let net = Mlp::init(3, vec![0, 1], &MlpParams { activation, seed: 4, ..Default::default() });
        let err = oracles::mlp_gradient_error(&net, &x, 1e-5);
        assert!(err < 1e-4, "{activation:?}: {err}");
    }
}

#[test]
fn mlp_separates_blobs() {
    let x = oracles::two_blobs(3, 40, 2, 6.0);
    let split = stratified_split(x.labels().unwrap(), 0.7, 0).unwrap();
    let (train, test) = split.apply(&x);
    let m = mlp_fit(&train, &MlpParams::default()).unwrap();
    assert_eq!(accuracy(|r| m.predict(r), &test).unwrap(), 1.0);
    assert!(m.loss_history[500] < m.loss_history[0]);
}

#[test]
fn pca_matches_power_iteration() {
    for seed in 0..10 {
        let raw = oracles::random_matrix(seed, 60, 5, None, None);
        // Correlate the columns so the spectrum is well separated.
        let x = raw
            .map_rows(|r| vec![r[0], r[0] * 2.0 + r[1] * 0.5, r[2] - r[0], r[3] * 0.3 + r[1], r[4] * 0.1])
            .unwrap();
        let model = pca_fit(&x, 3).unwrap();
        let (z, _) = standardize(&x).unwrap();
        let reference = oracles::power_iteration(oracles::covariance(&z), 3, 5000);
        for (c, (lambda, v)) in model.components.iter().zip(&reference) {
            let cos: f64 = c.iter().zip(v).map(|(a, b)| a * b).sum();
            assert!(cos.abs() > 0.999, "seed {seed}: cos {cos}");
            let ev = model.explained_variance[model.components.iter().position(|k| k == c).unwrap()];
            assert!((ev - lambda).abs() < 1e-6 * lambda.max(1.0));
        }
    }
}

#[test]
fn pca_examples() {
    let line: Vec<Vec<f64>> = (0..10).map(|i| vec![f64::from(i), f64::from(i)]).collect();
    let m = pca_fit(&FeatureMatrix::from_rows(&line, None).unwrap(), 2).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((m.components[0][0] - h).abs() < 1e-9 && (m.components[0][1] - h).abs() < 1e-9);
    assert!(m.explained_variance[1].abs() < 1e-9);

    let rank1: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, 2.0, 3.0, f64::from(i), 0.5]).collect();
    let x = FeatureMatrix::from_rows(&rank1, None).unwrap();
    let m = pca_fit(&x, 1).unwrap();
    assert_eq!(pca_top_features(&m, 1).unwrap(), vec!["x3".to_string()]);

    let x = oracles::random_matrix(8, 30, 6, None, None);
    let mut errs = Vec::new();
    for k in 1..=6 {
        let m = pca_fit(&x, k).unwrap();
        for a in 0..k {
            for b in 0..k {
                let dot: f64 = m.components[a].iter().zip(&m.components[b]).map(|(p, q)| p * q).sum();
                assert!((dot - f64::from(u8::from(a == b))).abs() < 1e-8);
            }
        }
        assert!(m.explained_variance.windows(2).all(|w| w[1] <= w[0]));
        errs.push(m.reconstruction_error(&x));
        if k == 6 {
            let mut all = pca_top_features(&m, 6).unwrap();
            all.sort();
            assert_eq!(all, x.col_names().to_vec());
        }
    }
    assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{errs:?}");
    assert!(pca_fit(&x, 0).is_err() && pca_fit(&x, 7).is_err());
}

#[test]
fn artifacts_round_trip_byte_identically() {
    let x = oracles::two_blobs(4, 15, 3, 4.0);
    for kind in ClassifierKind::ALL {
        let model = ClassifierParams::default_for(kind).fit(&x).unwrap();
        let json = ModelArtifact::new(x.col_names().to_vec(), model).to_json();
        let back = ModelArtifact::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
        assert_eq!(back.model.kind(), kind);
    }
    assert!(ModelArtifact::from_json("{\"format_version\":2}").is_err());
}

#[test]
fn feature_matrix_csv_round_trip() {
    let x = oracles::random_matrix(6, 12, 4, None, Some(2));
    let mut buf = Vec::new();
    x.write_csv(&mut buf).unwrap();
    assert_eq!(FeatureMatrix::read_csv(buf.as_slice()).unwrap(), x);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fits_are_deterministic(seed in 0u64..1000) {
        let x = oracles::random_matrix(seed, 20, 3, None, Some(2));
        prop_assert_eq!(kmeans_fit(&x, 3, seed).unwrap(), kmeans_fit(&x, 3, seed).unwrap());
        let p = MlpParams { epochs: 20, seed, ..Default::default() };
        prop_assert_eq!(mlp_fit(&x, &p).unwrap(), mlp_fit(&x, &p).unwrap());
    }

    #[test]
    fn unbounded_tree_memorizes_distinct_rows(seed in 0u64..1000, n in 2usize..30) {
        let x = oracles::random_matrix(seed, n, 2, None, Some(3));
        let t = tree_fit(&x, None, 1).unwrap();
        prop_assert_eq!(accuracy(|r| t.predict(r), &x).unwrap(), 1.0);
    }

    #[test]
    fn tree_accuracy_ignores_monotone_rescaling(seed in 0u64..1000, col in 0usize..2) {
        let x = oracles::random_matrix(seed, 15, 2, Some(5), Some(2));
        let y = x.map_rows(|r| {
            let mut r = r.to_vec();
            r[col] = (r[col] * 0.7).exp() - 3.0;
            r
        }).unwrap();
        let a = tree_fit(&x, Some(3), 1).unwrap();
        let b = tree_fit(&y, Some(3), 1).unwrap();
        prop_assert_eq!(accuracy(|r| a.predict(r), &x).unwrap(), accuracy(|r| b.predict(r), &y).unwrap());
    }

    #[test]
    fn stratified_split_partitions(seed in 0u64..1000, a in 2usize..20, b in 2usize..20, ratio in 0.05f64..0.95) {
        let labels: Vec<usize> = (0..a + b).map(|i| usize::from(i >= a)).collect();
        let s = stratified_split(&labels, ratio, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..a + b).collect::<Vec<_>>());
        for class in 0..2 {
            prop_assert!(s.train.iter().any(|&i| labels[i] == class));
            prop_assert!(s.test.iter().any(|&i| labels[i] == class));
        }
    }
}
