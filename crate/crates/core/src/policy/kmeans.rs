//! Lloyd's k-means on ground positions.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use crate::geometry::Position;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KMeansError {
    #[error("cannot form {k} clusters from {points} points")]
    DegenerateInput { k: usize, points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<Position>,
    /// Centroid index of each input point.
    pub assignments: Vec<usize>,
    /// Update rounds performed.
    pub iterations: usize,
    /// Objective after initialization and after every round.
    pub wcss_history: Vec<f64>,
}

impl Clustering {
    pub fn wcss(&self) -> f64 {
        *self.wcss_history.last().expect("at least the initial value")
    }
}

fn squared(a: Position, b: Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// Within-cluster sum of squared distances.
pub fn wcss(points: &[Position], centroids: &[Position], assignments: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignments)
        .map(|(p, &c)| squared(*p, centroids[c]))
        .sum()
}

fn assign(points: &[Position], centroids: &[Position], out: &mut [usize]) {
    for (p, slot) in points.iter().zip(out.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in centroids.iter().enumerate() {
            let d = squared(*p, *c);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        *slot = best;
    }
}

/// Centroids of `k` clusters over `points`. See [`kmeans_detailed`].
pub fn kmeans<R: Rng + ?Sized>(
    points: &[Position],
    k: usize,
    iters: usize,
    rng: &mut R,
) -> Result<Vec<Position>, KMeansError> {
    kmeans_detailed(points, k, iters, rng).map(|c| c.centroids)
}

/// Lloyd's algorithm from `k` distinct input points drawn uniformly.
///
/// Runs at most `iters` update rounds and stops early once assignments no
/// longer change. A cluster left empty is re-seeded at the point farthest
/// from its own centroid.
pub fn kmeans_detailed<R: Rng + ?Sized>(
    points: &[Position],
    k: usize,
    iters: usize,
    rng: &mut R,
) -> Result<Clustering, KMeansError> {
    if k == 0 || points.is_empty() || k > points.len() {
        return Err(KMeansError::DegenerateInput {
            k,
            points: points.len(),
        });
    }
    let mut centroids: Vec<Position> = rand::seq::index::sample(rng, points.len(), k)
        .into_iter()
        .map(|i| points[i])
        .collect();
    let mut assignments = vec![0; points.len()];
    assign(points, &centroids, &mut assignments);
    let mut history = vec![wcss(points, &centroids, &assignments)];
    let mut next = vec![0; points.len()];
    let mut iterations = 0;

    while iterations < iters {
        iterations += 1;
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (p, &c) in points.iter().zip(&assignments) {
            sums[c].0 += p.x;
            sums[c].1 += p.y;
            sums[c].2 += 1;
        }
        let mut taken: Vec<usize> = Vec::new();
        for (c, &(sx, sy, n)) in sums.iter().enumerate() {
            if n > 0 {
                centroids[c] = Position::new(sx / n as f64, sy / n as f64);
            }
        }
        for c in 0..k {
            if sums[c].2 > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|i| !taken.contains(i))
                .max_by(|&a, &b| {
                    squared(points[a], centroids[assignments[a]])
                        .total_cmp(&squared(points[b], centroids[assignments[b]]))
                        .then(b.cmp(&a))
                })
                .expect("k <= number of points");
            taken.push(far);
            centroids[c] = points[far];
        }
        assign(points, &centroids, &mut next);
        history.push(wcss(points, &centroids, &next));
        let stable = next == assignments;
        core::mem::swap(&mut assignments, &mut next);
        if stable {
            break;
        }
    }

    Ok(Clustering {
        centroids,
        assignments,
        iterations,
        wcss_history: history,
    })
}
