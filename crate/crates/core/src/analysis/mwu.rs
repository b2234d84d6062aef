use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::erfc;

/// Largest combined sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 16;
/// Reports show p-values below this floor as the floor.
pub const P_VALUE_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MwuMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Pairs `(a, b)` with `a > b`, counting ties as one half.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: MwuMethod,
}

/// Midranks of the pooled sample plus the tie term `sum(t^3 - t)`.
fn midranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && pooled[order[j]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Number of arrangements giving each U value, for samples of size `m` and `n`.
fn exact_counts(m: usize, n: usize) -> Vec<f64> {
    // table[i][j][u]: arrangements of i a's and j b's with statistic u.
    let mut table = vec![vec![Vec::<f64>::new(); n + 1]; m + 1];
    for i in 0..=m {
        for j in 0..=n {
            let mut f = vec![0.0; i * j + 1];
            if i == 0 || j == 0 {
                f[0] = 1.0;
            } else {
                // The largest value belongs either to a (beats all j b's) or to b.
                for (u, v) in table[i - 1][j].iter().enumerate() {
                    f[u + j] += v;
                }
                for (u, v) in table[i][j - 1].iter().enumerate() {
                    f[u] += v;
                }
            }
            table[i][j] = f;
        }
    }
    std::mem::take(&mut table[m][n])
}

/// Exact two-sided p-value for an untied statistic `u`.
pub fn mann_whitney_exact_p(u: f64, m: usize, n: usize) -> f64 {
    let counts = exact_counts(m, n);
    let total: f64 = counts.iter().sum();
    let u = u.round().clamp(0.0, (m * n) as f64) as usize;
    let lower: f64 = counts[..=u].iter().sum::<f64>() / total;
    let upper: f64 = counts[u..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Normal approximation with tie and continuity corrections.
pub fn mann_whitney_normal_p(u: f64, m: usize, n: usize, tie_term: f64) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    let big_n = mf + nf;
    let mean = mf * nf / 2.0;
    let correction = if big_n > 1.0 {
        tie_term / (big_n * (big_n - 1.0))
    } else {
        0.0
    };
    let var = mf * nf / 12.0 * ((big_n + 1.0) - correction);
    if !(var > 0.0) {
        return 1.0;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z * std::f64::consts::FRAC_1_SQRT_2).min(1.0)
}

/// Two-sided Mann-Whitney U test of `a` against `b`.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(Error::param("sample", "NaN in sample"));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let (m, n) = (a.len(), b.len());
    let rank_sum: f64 = ranks[..m].iter().sum();
    let u = rank_sum - (m * (m + 1)) as f64 / 2.0;
    let (p_value, method) = if m + n <= EXACT_LIMIT && ties == 0.0 {
        (mann_whitney_exact_p(u, m, n), MwuMethod::Exact)
    } else {
        (mann_whitney_normal_p(u, m, n, ties), MwuMethod::Normal)
    };
    Ok(MannWhitney { u, p_value, method })
}

/// p-value as shown in reports.
pub fn format_p_value(p: f64) -> f64 {
    p.max(P_VALUE_FLOOR)
}
