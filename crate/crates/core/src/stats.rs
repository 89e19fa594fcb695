//! Batch means and Kolmogorov–Smirnov distances.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Streaming batch-means accumulator for a series of known length.
///
/// The series is cut into `batches` consecutive pieces of equal length
/// (the last absorbs the remainder); the standard error is that of the mean
/// of batch means.
#[derive(Debug, Clone)]
pub struct BatchMeans {
    per_batch: usize,
    batches: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
    seen: usize,
}

impl BatchMeans {
    pub fn new(total: usize, batches: usize) -> Self {
        let batches = batches.clamp(1, total.max(1));
        Self {
            per_batch: (total / batches).max(1),
            batches,
            sums: vec![0.0; batches],
            counts: vec![0; batches],
            seen: 0,
        }
    }

    pub fn push(&mut self, x: f64) {
        let b = (self.seen / self.per_batch).min(self.batches - 1);
        self.sums[b] += x;
        self.counts[b] += 1;
        self.seen += 1;
    }

    pub fn count(&self) -> usize {
        self.seen
    }

    pub fn means(&self) -> Vec<f64> {
        self.sums.iter().zip(&self.counts).filter(|(_, &c)| c > 0).map(|(s, &c)| s / c as f64).collect()
    }

    /// Overall mean (sum over all samples / count) with the batch-means SE.
    pub fn finish(&self) -> MeanSe {
        let mean = self.sums.iter().sum::<f64>() / self.seen.max(1) as f64;
        MeanSe { mean, se: mean_se(&self.means()).se }
    }
}

/// Sample mean and its standard error `sd/√n`.
pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return MeanSe { mean, se: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    MeanSe { mean, se: (var / n as f64).sqrt() }
}

/// Batch means of a stored series.
pub fn batch_means(xs: &[f64], batches: usize) -> MeanSe {
    let mut acc = BatchMeans::new(xs.len(), batches);
    xs.iter().for_each(|&x| acc.push(x));
    acc.finish()
}

/// Kolmogorov–Smirnov distance between the weighted empirical distribution
/// of `xs` and the uniform law on `[lo, hi)`.
pub fn ks_uniform_weighted(xs: &[f64], weights: &[f64], lo: f64, hi: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = xs.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = weights.iter().sum();
    let mut cdf = 0.0;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < pairs.len() {
        let x = pairs[i].0;
        let u = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
        d = d.max((u - cdf).abs());
        while i < pairs.len() && pairs[i].0 == x {
            cdf += pairs[i].1 / total;
            i += 1;
        }
        d = d.max((cdf - u).abs());
    }
    d
}

pub fn ks_uniform(xs: &[f64], lo: f64, hi: f64) -> f64 {
    ks_uniform_weighted(xs, &vec![1.0; xs.len()], lo, hi)
}

/// Two-sample Kolmogorov–Smirnov distance between unweighted samples.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
