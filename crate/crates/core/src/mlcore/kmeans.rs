//! Lloyd's k-means with k-means++ seeding, and elbow selection of k.

use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::sq_dist;
use super::{FeatureMatrix, MlError};
use crate::rng;

pub const DEFAULT_MAX_ITER: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;
/// Independent k-means++ restarts per fit; the lowest-inertia run is kept.
pub const DEFAULT_N_INIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Sum over rows of the squared distance to the nearest centroid.
    pub inertia: f64,
    pub n_iter: usize,
    /// Inertia after each assignment step of the winning run.
    pub inertia_history: Vec<f64>,
}

impl KMeansModel {
    pub fn predict(&self, row: &[f64]) -> usize {
        nearest(row, &self.centroids).0
    }

    pub fn labels(&self, x: &FeatureMatrix) -> Vec<usize> {
        x.row_iter().map(|r| self.predict(r)).collect()
    }
}

fn nearest(row: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(c, mu)| (c, sq_dist(row, mu)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn inertia_of(x: &FeatureMatrix, centroids: &[Vec<f64>]) -> f64 {
    x.row_iter().map(|r| nearest(r, centroids).1).sum()
}

fn plus_plus_init(x: &FeatureMatrix, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut centroids = vec![x.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = x.row_iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = x.row(pick).to_vec();
        for (i, r) in x.row_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Runs Lloyd iterations from the given centroids, then Hartigan transfers until no
/// single-point move lowers the inertia.
pub fn kmeans_from_centroids(
    x: &FeatureMatrix,
    init: Vec<Vec<f64>>,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansModel, MlError> {
    let (n, d, k) = (x.rows(), x.cols(), init.len());
    if k == 0 || k > n {
        return Err(MlError::OutOfRange(format!("k = {k} must lie in [1, n = {n}]")));
    }
    if init.iter().any(|c| c.len() != d) {
        return Err(MlError::InvalidInput("centroid dimension mismatch".into()));
    }
    let mut centroids = init;
    let mut assign = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut n_iter = 0;
    while n_iter < max_iter {
        n_iter += 1;
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for (i, r) in x.row_iter().enumerate() {
            let (c, dd) = nearest(r, &centroids);
            changed |= assign[i] != c;
            assign[i] = c;
            dist[i] = dd;
        }
        repair_empty(&mut assign, &mut dist, k);
        history.push(dist.iter().sum());
        if !changed && n_iter > 1 {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, r) in x.row_iter().enumerate() {
            counts[assign[i]] += 1;
            sums[assign[i]].iter_mut().zip(r).for_each(|(s, v)| *s += v);
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            let next: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&next, &centroids[c]).sqrt());
            centroids[c] = next;
        }
        if shift < tol {
            break;
        }
    }
    let mut dist = vec![0.0; n];
    for (i, r) in x.row_iter().enumerate() {
        (assign[i], dist[i]) = nearest(r, &centroids);
    }
    repair_empty(&mut assign, &mut dist, k);
    centroids = means(x, &assign, k);
    if hartigan_transfers(x, &mut assign, &mut centroids, max_iter) {
        history.push(inertia_of(x, &centroids));
    }
    let inertia = inertia_of(x, &centroids);
    Ok(KMeansModel { k, centroids, inertia, n_iter, inertia_history: history })
}

fn means(x: &FeatureMatrix, assign: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; x.cols()]; k];
    let mut counts = vec![0usize; k];
    for (i, r) in x.row_iter().enumerate() {
        counts[assign[i]] += 1;
        sums[assign[i]].iter_mut().zip(r).for_each(|(s, v)| *s += v);
    }
    sums.into_iter().zip(counts).map(|(s, c)| s.into_iter().map(|v| v / c.max(1) as f64).collect()).collect()
}

/// Hartigan single-point transfers: moves a point to another cluster whenever that
/// strictly lowers the within-cluster sum of squares, counting the centroid shift.
/// Returns whether anything moved.
fn hartigan_transfers(x: &FeatureMatrix, assign: &mut [usize], centroids: &mut Vec<Vec<f64>>, max_pass: usize) -> bool {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    assign.iter().for_each(|&a| counts[a] += 1);
    let mut moved_any = false;
    for _ in 0..max_pass {
        let mut moved = false;
        for (i, r) in x.row_iter().enumerate() {
            let a = assign[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let removal = na / (na - 1.0) * sq_dist(r, &centroids[a]);
            let (b, addition) = (0..k)
                .filter(|&b| b != a)
                .map(|b| {
                    let nb = counts[b] as f64;
                    (b, nb / (nb + 1.0) * sq_dist(r, &centroids[b]))
                })
                .fold((a, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            if addition < removal - 1e-12 * (1.0 + removal) {
                let nb = counts[b] as f64;
                for j in 0..r.len() {
                    centroids[a][j] = (na * centroids[a][j] - r[j]) / (na - 1.0);
                    centroids[b][j] = (nb * centroids[b][j] + r[j]) / (nb + 1.0);
                }
                counts[a] -= 1;
                counts[b] += 1;
                assign[i] = b;
                moved = true;
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
        *centroids = means(x, assign, k);
    }
    moved_any
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(assign: &mut [usize], dist: &mut [f64], k: usize) {
    let mut counts = vec![0usize; k];
    assign.iter().for_each(|&a| counts[a] += 1);
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let donor = (0..assign.len())
            .filter(|&i| counts[assign[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dist[b] >= dist[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = donor {
            counts[assign[i]] -= 1;
            assign[i] = empty;
            counts[empty] = 1;
            dist[i] = 0.0;
        }
    }
}

pub fn kmeans_fit(x: &FeatureMatrix, k: usize, seed: u64) -> Result<KMeansModel, MlError> {
    kmeans_fit_with(x, k, seed, DEFAULT_MAX_ITER, DEFAULT_TOL, DEFAULT_N_INIT)
}

/// Best of `n_init` k-means++ seeded runs (restart `r` uses ChaCha stream `r` of `seed`).
pub fn kmeans_fit_with(
    x: &FeatureMatrix,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
    n_init: usize,
) -> Result<KMeansModel, MlError> {
    if k == 0 || k > x.rows() {
        return Err(MlError::OutOfRange(format!("k = {k} must lie in [1, n = {}]", x.rows())));
    }
    let mut best: Option<KMeansModel> = None;
    for restart in 0..n_init.max(1) {
        let mut r = rng::stream(seed, restart as u64);
        let model = kmeans_from_centroids(x, plus_plus_init(x, k, &mut r), max_iter, tol)?;
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowResult {
    pub chosen_k: usize,
    /// `(k, inertia)` for every k in the range.
    pub curve: Vec<(usize, f64)>,
    pub models: Vec<KMeansModel>,
}

impl ElbowResult {
    /// Two-column text table (`k,inertia,chosen`) for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,inertia,chosen\n");
        for (k, inertia) in &self.curve {
            out.push_str(&format!("{k},{inertia},{}\n", u8::from(*k == self.chosen_k)));
        }
        out
    }
}

/// Fits k-means for every k in `k_range` and picks the k with the largest second
/// difference `I(k-1) - 2 I(k) + I(k+1)` of the inertia curve (lowest k on ties).
///
/// Each fit after the first also tries a warm start from the previous centroids plus
/// the worst-served point, keeping whichever is lower, so the curve never increases.
pub fn elbow_select(x: &FeatureMatrix, k_range: RangeInclusive<usize>, seed: u64) -> Result<ElbowResult, MlError> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo == 0 || hi > x.rows() || hi < lo {
        return Err(MlError::OutOfRange(format!("k range {lo}..={hi} must lie within [1, {}]", x.rows())));
    }
    if hi - lo + 1 < 3 {
        return Err(MlError::OutOfRange("elbow needs at least three k values".into()));
    }
    let mut models: Vec<KMeansModel> = Vec::new();
    for k in k_range {
        let mut model = kmeans_fit(x, k, rng::derive_seed(seed, k as u64))?;
        if let Some(prev) = models.last() {
            let mut init = prev.centroids.clone();
            let d2: Vec<f64> = x.row_iter().map(|r| nearest(r, &prev.centroids).1).collect();
            let worst = (0..d2.len()).fold(0, |b, i| if d2[i] > d2[b] { i } else { b });
            init.push(x.row(worst).to_vec());
            let warm = kmeans_from_centroids(x, init, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
            if warm.inertia < model.inertia {
                model = warm;
            }
        }
        models.push(model);
    }
    let curve: Vec<(usize, f64)> = models.iter().map(|m| (m.k, m.inertia)).collect();
    let mut chosen_k = curve[1].0;
    let mut best = f64::NEG_INFINITY;
    for w in curve.windows(3) {
        let second = w[0].1 - 2.0 * w[1].1 + w[2].1;
        if second > best {
            best = second;
            chosen_k = w[1].0;
        }
    }
    Ok(ElbowResult { chosen_k, curve, models })
}
