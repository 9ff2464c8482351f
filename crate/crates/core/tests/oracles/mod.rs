//! Independent reference implementations used to check the learners.

#![allow(dead_code)]

use fraudaware_core::mlcore::FeatureMatrix;

/// Minimum within-cluster sum of squares over every split of the rows into two
/// non-empty groups.
pub fn kmeans2_optimum(x: &FeatureMatrix) -> f64 {
    let n = x.rows();
    assert!((2..=16).contains(&n));
    let mut best = f64::INFINITY;
    // Row 0 is pinned to group A so each partition is visited once.
    for mask in 0u32..(1 << (n - 1)) {
        let in_b = |i: usize| i > 0 && mask & (1 << (i - 1)) != 0;
        if (0..n).all(|i| !in_b(i)) {
            continue;
        }
        let sse = |pick: bool| {
            let rows: Vec<&[f64]> = (0..n).filter(|&i| in_b(i) == pick).map(|i| x.row(i)).collect();
            let d = x.cols();
            let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect();
            rows.iter().map(|r| r.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum::<f64>()
        };
        best = best.min(sse(false) + sse(true));
    }
    best
}

fn majority_hits(rows: &[usize], labels: &[usize]) -> usize {
    let mut counts = std::collections::BTreeMap::new();
    for &i in rows {
        *counts.entry(labels[i]).or_insert(0usize) += 1;
    }
    counts.values().copied().max().unwrap_or(0)
}

fn midpoints(x: &FeatureMatrix, f: usize) -> Vec<f64> {
    let mut v = x.column(f);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect()
}

/// Best training accuracy reachable by any tree of depth at most `depth` whose
/// splits use midpoints of the full training set and whose leaves predict the
/// majority class of the rows reaching them.
pub fn best_tree_accuracy(x: &FeatureMatrix, depth: usize) -> f64 {
    let labels = x.labels().expect("labels");
    let all: Vec<usize> = (0..x.rows()).collect();
    let thresholds: Vec<Vec<f64>> = (0..x.cols()).map(|f| midpoints(x, f)).collect();
    best_hits(x, labels, &thresholds, &all, depth) as f64 / x.rows() as f64
}

fn best_hits(x: &FeatureMatrix, labels: &[usize], thresholds: &[Vec<f64>], rows: &[usize], depth: usize) -> usize {
    let mut best = majority_hits(rows, labels);
    if depth == 0 {
        return best;
    }
    for (f, ts) in thresholds.iter().enumerate() {
        for &t in ts {
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, f) <= t);
            if l.is_empty() || r.is_empty() {
                continue;
            }
            let hits = best_hits(x, labels, thresholds, &l, depth - 1) + best_hits(x, labels, thresholds, &r, depth - 1);
            best = best.max(hits);
        }
    }
    best
}

/// Dominant eigenvectors of a symmetric matrix by power iteration with deflation.
pub fn power_iteration(mut a: Vec<Vec<f64>>, k: usize, iters: usize) -> Vec<(f64, Vec<f64>)> {
    let d = a.len();
    let mut out = Vec::new();
    for c in 0..k {
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + ((i * 7 + c * 3) % 5) as f64 * 0.1).collect();
        let mut lambda = 0.0;
        for _ in 0..iters {
            let w: Vec<f64> = (0..d).map(|i| (0..d).map(|j| a[i][j] * v[j]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            lambda = norm;
            v = w.into_iter().map(|x| x / norm).collect();
        }
        for i in 0..d {
            for j in 0..d {
                a[i][j] -= lambda * v[i] * v[j];
            }
        }
        out.push((lambda, v));
    }
    out
}

/// Sample covariance (divisor n - 1) of the columns of `x`.
pub fn covariance(x: &FeatureMatrix) -> Vec<Vec<f64>> {
    let (n, d) = (x.rows(), x.cols());
    let means: Vec<f64> = (0..d).map(|j| x.column(j).iter().sum::<f64>() / n as f64).collect();
    (0..d)
        .map(|a| {
            (0..d)
                .map(|b| (0..n).map(|i| (x.get(i, a) - means[a]) * (x.get(i, b) - means[b])).sum::<f64>() / (n - 1) as f64)
                .collect()
        })
        .collect()
}

fn gini_of(rows: &[usize], labels: &[usize]) -> f64 {
    let mut counts = std::collections::BTreeMap::new();
    for &i in rows {
        *counts.entry(labels[i]).or_insert(0usize) += 1;
    }
    let n = rows.len() as f64;
    1.0 - counts.values().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Training accuracy of the greedy Gini tree, re-derived by scoring every
/// (feature, midpoint) pair at every node from scratch. Ties keep the first
/// candidate in (feature, threshold) order.
pub fn greedy_tree_accuracy(x: &FeatureMatrix, depth: usize) -> f64 {
    let labels = x.labels().expect("labels");
    let all: Vec<usize> = (0..x.rows()).collect();
    greedy_hits(x, labels, &all, depth) as f64 / x.rows() as f64
}

fn greedy_hits(x: &FeatureMatrix, labels: &[usize], rows: &[usize], depth: usize) -> usize {
    let pure = rows.iter().all(|&i| labels[i] == labels[rows[0]]);
    if depth == 0 || pure || rows.len() < 2 {
        return majority_hits(rows, labels);
    }
    let parent = gini_of(rows, labels);
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for f in 0..x.cols() {
        let mut v: Vec<f64> = rows.iter().map(|&i| x.get(i, f)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        for w in v.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, f) <= t);
            let n = rows.len() as f64;
            let child = (l.len() as f64 * gini_of(&l, labels) + r.len() as f64 * gini_of(&r, labels)) / n;
            let dec = parent - child;
            if best.as_ref().is_none_or(|b| dec > b.0 + 1e-12) {
                best = Some((dec, l, r));
            }
        }
    }
    match best {
        Some((_, l, r)) => greedy_hits(x, labels, &l, depth - 1) + greedy_hits(x, labels, &r, depth - 1),
        None => majority_hits(rows, labels),
    }
}

/// Seeded random matrix. `levels = Some(m)` draws integers in `0..m` so ties occur;
/// `classes` attaches uniformly drawn labels in `0..classes`.
pub fn random_matrix(seed: u64, n: usize, d: usize, levels: Option<u32>, classes: Option<usize>) -> FeatureMatrix {
    use rand::Rng;
    let mut r = fraudaware_core::rng::seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| match levels {
                    Some(m) => f64::from(r.random_range(0..m)),
                    None => r.random_range(-1.0..1.0),
                })
                .collect()
        })
        .collect();
    let labels = classes.map(|c| (0..n).map(|_| r.random_range(0..c)).collect());
    FeatureMatrix::from_rows(&rows, labels).expect("valid fixture")
}

/// Two Gaussian blobs of `per_blob` rows each, centred at -`gap`/2 and +`gap`/2 on
/// every axis, labelled 0 and 1.
pub fn two_blobs(seed: u64, per_blob: usize, d: usize, gap: f64) -> FeatureMatrix {
    let mut r = fraudaware_core::rng::seeded(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in [(0usize, -gap / 2.0), (1, gap / 2.0)] {
        for _ in 0..per_blob {
            rows.push((0..d).map(|_| centre + fraudaware_core::rng::standard_normal(&mut r)).collect());
            labels.push(c);
        }
    }
    FeatureMatrix::from_rows(&rows, Some(labels)).expect("valid fixture")
}

/// Largest relative discrepancy between analytic and central-difference gradients.
pub fn mlp_gradient_error(net: &fraudaware_core::mlcore::Mlp, x: &FeatureMatrix, eps: f64) -> f64 {
    let analytic = net.gradient(x).expect("gradient");
    let base = net.params();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] = base[i] + eps;
        probe.set_params(&p);
        let up = probe.loss(x).expect("loss");
        p[i] = base[i] - eps;
        probe.set_params(&p);
        let down = probe.loss(x).expect("loss");
        let numeric = (up - down) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}
