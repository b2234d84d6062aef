//! Representative-day clustering, annual aggregation, strategy statistics and
//! trend smoothing.

mod convolve;
mod kmeans;
mod mwu;
mod savgol;

pub use convolve::{common_bin_width, convolve_annual, AnnualLos, Histogram, DEFAULT_BINS};
pub use kmeans::{kmeans_days, Clustering, DayFeatureMatrix};
pub use mwu::{
    format_p_value, mann_whitney_exact_p, mann_whitney_normal_p, mann_whitney_u, MannWhitney, MwuMethod,
    EXACT_LIMIT, P_VALUE_FLOOR,
};
pub use savgol::{savitzky_golay, savitzky_golay_weights};

/// Linearly interpolated quantile of an ascending sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
