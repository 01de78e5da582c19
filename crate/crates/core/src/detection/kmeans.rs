//! Lloyd's K-means in the plane with k-means++ seeding and restarts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{dist2, Point};

/// Where events are placed when there are no detections to cluster.
pub const PLANE_CENTER: Point = [0.5, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once no centroid moves more than this.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            restarts: 10,
            max_iters: 300,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    pub centroids: Vec<Point>,
    /// Within-cluster sum of squares of the final centroids.
    pub inertia: f64,
    /// Inertia after each assignment step.
    pub trace: Vec<f64>,
}

fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(j, c)| (j, dist2(p, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus<R: Rng + ?Sized>(points: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut d2: Vec<f64> = points.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    chosen = i;
                    break;
                }
                u -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(dist2(p, &c));
        }
    }
    centroids
}

/// One seeded Lloyd run. Requires `points.len() >= k >= 1`.
pub fn kmeans_single<R: Rng + ?Sized>(points: &[Point], k: usize, options: &KMeansOptions, rng: &mut R) -> KMeansRun {
    assert!(k >= 1 && points.len() >= k, "need at least k points");
    let mut centroids = plus_plus(points, k, rng);
    let mut assign = vec![0usize; points.len()];
    let mut trace = Vec::new();
    for _ in 0..options.max_iters.max(1) {
        let mut inertia = 0.0;
        for (a, p) in assign.iter_mut().zip(points) {
            let (j, d) = nearest(p, &centroids);
            *a = j;
            inertia += d;
        }
        trace.push(inertia);

        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(points) {
            sums[a][0] += p[0];
            sums[a][1] += p[1];
            counts[a] += 1;
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            if counts[j] > 0 {
                let c = [sums[j][0] / counts[j] as f64, sums[j][1] / counts[j] as f64];
                shift = shift.max(dist2(&c, &centroids[j]).sqrt());
                centroids[j] = c;
            }
        }
        if shift < options.tol {
            break;
        }
    }
    let inertia = points.iter().map(|p| nearest(p, &centroids).1).sum();
    KMeansRun {
        centroids,
        inertia,
        trace,
    }
}

/// Best of `restarts` runs. With fewer points than clusters every point is
/// its own centroid and the surplus sits at the plane centre.
pub fn kmeans_cluster_with<R: Rng + ?Sized>(
    points: &[Point],
    k: usize,
    options: &KMeansOptions,
    rng: &mut R,
) -> Vec<Point> {
    if k == 0 {
        return Vec::new();
    }
    if points.len() < k {
        let mut out = points.to_vec();
        out.resize(k, PLANE_CENTER);
        return out;
    }
    let mut best: Option<KMeansRun> = None;
    for _ in 0..options.restarts.max(1) {
        let run = kmeans_single(points, k, options, rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.expect("at least one restart").centroids
}

pub fn kmeans_cluster<R: Rng + ?Sized>(points: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    kmeans_cluster_with(points, k, &KMeansOptions::default(), rng)
}
