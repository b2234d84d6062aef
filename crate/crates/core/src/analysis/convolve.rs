use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::LosDistribution;

pub const DEFAULT_BINS: usize = 200;
const SNAP: f64 = 1e-9;

/// Probability mass on the grid `0, w, 2w, ...`.
///
/// Samples between grid points split their mass linearly between the two
/// neighbours, which keeps the mean of the binned distribution equal to the
/// sample mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    bin_width: f64,
    masses: Vec<f64>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], bin_width: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if !(bin_width > 0.0) || !bin_width.is_finite() {
            return Err(Error::param("bin_width", format!("{bin_width} must be positive")));
        }
        let w = 1.0 / samples.len() as f64;
        let mut masses: Vec<f64> = Vec::new();
        let mut add = |k: usize, m: f64| {
            if masses.len() <= k {
                masses.resize(k + 1, 0.0);
            }
            masses[k] += m;
        };
        for &x in samples {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::param("samples", format!("{x} is not a non-negative number")));
            }
            let pos = x / bin_width;
            let mut k = pos.floor();
            let mut frac = pos - k;
            if frac < SNAP {
                frac = 0.0;
            } else if frac > 1.0 - SNAP {
                k += 1.0;
                frac = 0.0;
            }
            let k = k as usize;
            add(k, w * (1.0 - frac));
            if frac > 0.0 {
                add(k + 1, w * frac);
            }
        }
        Ok(Histogram { bin_width, masses })
    }

    pub fn delta(value: f64, bin_width: f64) -> Result<Self> {
        Self::from_samples(&[value], bin_width)
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn value(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_width
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(k, m)| self.value(k) * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.masses
            .iter()
            .enumerate()
            .map(|(k, m)| (self.value(k) - mu).powi(2) * m)
            .sum()
    }

    /// Smallest grid value whose cumulative mass reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut acc = 0.0;
        for (k, m) in self.masses.iter().enumerate() {
            acc += m;
            if acc >= q - 1e-12 {
                return self.value(k);
            }
        }
        self.value(self.masses.len().saturating_sub(1))
    }

    /// `true` when all mass sits at zero.
    pub fn is_zero(&self) -> bool {
        self.masses.iter().skip(1).all(|&m| m == 0.0)
    }

    /// Distribution of the sum of two independent variables.
    pub fn convolve(&self, other: &Histogram) -> Result<Histogram> {
        same_grid(self.bin_width, other.bin_width)?;
        let mut out = vec![0.0; self.masses.len() + other.masses.len() - 1];
        for (i, &a) in self.masses.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.masses.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        while out.len() > 1 && out.last() == Some(&0.0) {
            out.pop();
        }
        Ok(Histogram {
            bin_width: self.bin_width,
            masses: out,
        })
    }
}

fn same_grid(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
        return Err(Error::BinMismatch(a, b));
    }
    Ok(())
}

/// Bin width giving `bins` bins up to the largest sample of any distribution.
pub fn common_bin_width(distributions: &[&LosDistribution], bins: usize) -> f64 {
    let max = distributions
        .iter()
        .flat_map(|d| d.samples.iter().copied())
        .fold(0.0, f64::max);
    if max > 0.0 {
        max / bins.max(1) as f64
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualLos {
    pub year: i32,
    pub distribution: Histogram,
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Total LOS over a year: each day's distribution raised to its day count by
/// repeated convolution, and all of them convolved together.
pub fn convolve_annual(year: i32, day_distributions: &[(usize, &Histogram)]) -> Result<AnnualLos> {
    let width = match day_distributions.first() {
        Some((_, h)) => h.bin_width,
        None => 1.0,
    };
    let mut total = Histogram {
        bin_width: width,
        masses: vec![1.0],
    };
    for &(count, h) in day_distributions {
        same_grid(width, h.bin_width)?;
        if count == 0 {
            return Err(Error::param("count", "day counts must be at least 1"));
        }
        if h.is_zero() {
            continue;
        }
        for _ in 0..count {
            total = total.convolve(h)?;
        }
    }
    Ok(AnnualLos {
        year,
        mean: total.mean(),
        q05: total.quantile(0.05),
        q95: total.quantile(0.95),
        distribution: total,
    })
}
