use crate::error::{Error, Result};
use crate::scalar::{count, Scalar};

fn check(window: usize, poly_order: usize, len: usize) -> Result<()> {
    if window % 2 == 0 {
        return Err(Error::InvalidFilter(format!("window {window} must be odd")));
    }
    if window <= poly_order {
        return Err(Error::InvalidFilter(format!(
            "window {window} must exceed polynomial order {poly_order}"
        )));
    }
    if window > len {
        return Err(Error::InvalidFilter(format!(
            "window {window} longer than series of {len}"
        )));
    }
    Ok(())
}

/// Least-squares projection matrix for one window: row `j` holds the weights
/// that evaluate the fitted polynomial at window position `j`.
pub fn savitzky_golay_weights<T: Scalar>(window: usize, poly_order: usize) -> Result<Vec<Vec<T>>> {
    check(window, poly_order, window)?;
    let half = window / 2;
    let scale = count::<T>(half.max(1));
    let xs: Vec<T> = (0..window)
        .map(|i| (count::<T>(i) - count::<T>(half)) / scale)
        .collect();

    // Orthonormal basis of the polynomial columns by modified Gram-Schmidt.
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(poly_order + 1);
    for p in 0..=poly_order {
        let mut col: Vec<T> = xs.iter().map(|&x| x.powi(p as i32)).collect();
        for q in &basis {
            let dot: T = col.iter().zip(q).map(|(&a, &b)| a * b).sum();
            col.iter_mut().zip(q).for_each(|(a, &b)| *a = *a - dot * b);
        }
        // Second pass keeps the columns orthogonal to working precision.
        for q in &basis {
            let dot: T = col.iter().zip(q).map(|(&a, &b)| a * b).sum();
            col.iter_mut().zip(q).for_each(|(a, &b)| *a = *a - dot * b);
        }
        let norm = col.iter().map(|&a| a * a).sum::<T>().sqrt();
        col.iter_mut().for_each(|a| *a = *a / norm);
        basis.push(col);
    }

    Ok((0..window)
        .map(|j| {
            (0..window)
                .map(|i| basis.iter().map(|q| q[j] * q[i]).sum())
                .collect()
        })
        .collect())
}

/// Savitzky-Golay smoothing. Interior points take the centre value of the
/// local polynomial fit; the first and last `window / 2` points are evaluated
/// on the fit of the nearest full window.
pub fn savitzky_golay<T: Scalar>(series: &[T], window: usize, poly_order: usize) -> Result<Vec<T>> {
    check(window, poly_order, series.len())?;
    let h = savitzky_golay_weights::<T>(window, poly_order)?;
    let n = series.len();
    let half = window / 2;
    let apply = |row: &[T], start: usize| -> T {
        row.iter().zip(&series[start..start + window]).map(|(&w, &y)| w * y).sum()
    };
    Ok((0..n)
        .map(|i| {
            if i < half {
                apply(&h[i], 0)
            } else if i + half >= n {
                apply(&h[i + window - n], n - window)
            } else {
                apply(&h[half], i - half)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_polynomials_up_to_order() {
        let quad: Vec<f64> = (0..20).map(|i| 0.3 * (i * i) as f64 - 2.0 * i as f64 + 7.0).collect();
        let out = savitzky_golay(&quad, 5, 2).unwrap();
        for (a, b) in quad.iter().zip(&out) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let ramp: Vec<f64> = (0..9).map(|i| 1.5 * i as f64 - 4.0).collect();
        for (w, p) in [(3, 1), (5, 1), (7, 3), (9, 2)] {
            let out = savitzky_golay(&ramp, w, p).unwrap();
            assert!(ramp.iter().zip(&out).all(|(a, b)| (a - b).abs() < 1e-9));
        }
        assert_eq!(savitzky_golay(&[4.0f64; 6], 5, 0).unwrap().len(), 6);
        assert!(savitzky_golay(&[4.0f64; 6], 5, 0).unwrap().iter().all(|v| (v - 4.0).abs() < 1e-12));
    }

    #[test]
    fn known_five_point_quadratic_weights() {
        // Classic (-3, 12, 17, 12, -3) / 35 smoothing kernel.
        let h = savitzky_golay_weights::<f64>(5, 2).unwrap();
        let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
        for (a, b) in h[2].iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_filters() {
        let s = [1.0f64; 5];
        assert!(matches!(savitzky_golay(&s, 4, 1), Err(Error::InvalidFilter(_))));
        assert!(matches!(savitzky_golay(&s, 3, 3), Err(Error::InvalidFilter(_))));
        assert!(matches!(savitzky_golay(&s, 7, 2), Err(Error::InvalidFilter(_))));
    }

    #[test]
    fn single_precision() {
        let ramp: Vec<f32> = (0..7).map(|i| i as f32).collect();
        let out = savitzky_golay(&ramp, 5, 2).unwrap();
        assert!(ramp.iter().zip(&out).all(|(a, b)| (a - b).abs() < 1e-4));
    }

    proptest! {
        #[test]
        fn filter_is_linear(
            xs in proptest::collection::vec(-100.0f64..100.0, 11),
            ys in proptest::collection::vec(-100.0f64..100.0, 11),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let mix: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| a * x + b * y).collect();
            let fx = savitzky_golay(&xs, 7, 2).unwrap();
            let fy = savitzky_golay(&ys, 7, 2).unwrap();
            let fm = savitzky_golay(&mix, 7, 2).unwrap();
            for i in 0..11 {
                prop_assert!((fm[i] - (a * fx[i] + b * fy[i])).abs() < 1e-9);
            }
        }
    }
}
