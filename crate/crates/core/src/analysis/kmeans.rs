use chrono::NaiveDate;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::scalar::{count, Scalar};

/// One row of per-asset conditions per day, columns in canonical asset order.
#[derive(Debug, Clone, PartialEq)]
pub struct DayFeatureMatrix<T> {
    dates: Vec<NaiveDate>,
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> DayFeatureMatrix<T> {
    pub fn new(dates: Vec<NaiveDate>, rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::param("features", "no days"));
        }
        if dates.len() != rows.len() {
            return Err(Error::param("features", "one date per row required"));
        }
        let width = rows[0].len();
        if width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(Error::param("features", "rows must be non-empty and equally long"));
        }
        Ok(DayFeatureMatrix { dates, rows })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows[0].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering<T> {
    pub k: usize,
    /// Cluster id per day (row).
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<T>>,
    /// Row index of the member nearest each centroid; `None` for an empty cluster.
    pub representatives: Vec<Option<usize>>,
    pub sizes: Vec<usize>,
    pub inertia: T,
    /// Inertia after the initial assignment and after every Lloyd iteration.
    pub inertia_history: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> Clustering<T> {
    pub fn representative_dates(&self, features: &DayFeatureMatrix<T>) -> Vec<Option<NaiveDate>> {
        self.representatives
            .iter()
            .map(|r| r.map(|i| features.dates[i]))
            .collect()
    }

    pub fn is_representative(&self, row: usize) -> bool {
        self.representatives[self.assignments[row]] == Some(row)
    }
}

fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid per row (ties to the lower cluster id) and the total cost.
fn assign<T: Scalar>(rows: &[Vec<T>], centroids: &[Vec<T>]) -> (Vec<usize>, T) {
    let mut total = T::zero();
    let labels = rows
        .iter()
        .map(|r| {
            let mut best = 0;
            let mut best_d = dist2(r, &centroids[0]);
            for (c, centroid) in centroids.iter().enumerate().skip(1) {
                let d = dist2(r, centroid);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            total = total + best_d;
            best
        })
        .collect();
    (labels, total)
}

/// k-means++ seeding driven by `rng`.
fn seed_centroids<T: Scalar>(rows: &[Vec<T>], k: usize, rng: &mut impl Rng) -> Vec<Vec<T>> {
    let n = rows.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![rows[first].clone()];
    let mut d2: Vec<f64> = rows
        .iter()
        .map(|r| dist2(r, &rows[first]).to_f64().unwrap_or(0.0))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` just short of `target`.
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive weight"))
        } else {
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[next] = true;
        for (i, r) in rows.iter().enumerate() {
            let d = dist2(r, &rows[next]).to_f64().unwrap_or(0.0);
            if d < d2[i] {
                d2[i] = d;
            }
        }
        centroids.push(rows[next].clone());
    }
    centroids
}

/// Member means; an empty cluster is re-seeded on the point farthest from its
/// own centroid.
fn update<T: Scalar>(rows: &[Vec<T>], labels: &[usize], centroids: &[Vec<T>]) -> Vec<Vec<T>> {
    let k = centroids.len();
    let width = rows[0].len();
    let mut sums = vec![vec![T::zero(); width]; k];
    let mut sizes = vec![0usize; k];
    for (r, &c) in rows.iter().zip(labels) {
        sizes[c] += 1;
        for (s, &x) in sums[c].iter_mut().zip(r) {
            *s = *s + x;
        }
    }
    let mut next: Vec<Vec<T>> = sums
        .into_iter()
        .zip(&sizes)
        .zip(centroids)
        .map(|((s, &n), old)| {
            if n == 0 {
                old.clone()
            } else {
                s.into_iter().map(|x| x / count::<T>(n)).collect()
            }
        })
        .collect();

    let mut taken = vec![false; rows.len()];
    for c in (0..k).filter(|&c| sizes[c] == 0) {
        let far = (0..rows.len())
            .filter(|&i| !taken[i])
            .map(|i| (i, dist2(&rows[i], &centroids[labels[i]])))
            .fold(None, |best: Option<(usize, T)>, (i, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((i, d)),
            });
        if let Some((i, _)) = far {
            taken[i] = true;
            next[c] = rows[i].clone();
        }
    }
    next
}

/// Lloyd's algorithm with k-means++ seeding and Euclidean distance.
pub fn kmeans_days<T: Scalar>(
    features: &DayFeatureMatrix<T>,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Clustering<T>> {
    let rows = features.rows();
    let n = rows.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let mut rng = substream(seed, Purpose::Clustering, &[], 0);
    let mut centroids = seed_centroids(rows, k, &mut rng);
    let (mut labels, mut inertia) = assign(rows, &centroids);
    let mut history = vec![inertia];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        centroids = update(rows, &labels, &centroids);
        let (next, cost) = assign(rows, &centroids);
        history.push(cost);
        inertia = cost;
        if next == labels {
            break;
        }
        labels = next;
    }

    let mut sizes = vec![0usize; k];
    let mut representatives: Vec<Option<(usize, T)>> = vec![None; k];
    for (i, (&c, r)) in labels.iter().zip(rows).enumerate() {
        sizes[c] += 1;
        let d = dist2(r, &centroids[c]);
        match representatives[c] {
            Some((_, best)) if best <= d => {}
            _ => representatives[c] = Some((i, d)),
        }
    }

    Ok(Clustering {
        k,
        assignments: labels,
        centroids,
        representatives: representatives.into_iter().map(|r| r.map(|(i, _)| i)).collect(),
        sizes,
        inertia,
        inertia_history: history,
        iterations,
    })
}
