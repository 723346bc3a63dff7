//! Small descriptive-statistics helpers.

use crate::scalar::Scalar;

/// Arithmetic mean, `None` for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::count(xs.len()))
}

/// Percentile of an ascending-sorted slice by linear interpolation between
/// closest ranks: rank `h = (n - 1) p`, value `x[⌊h⌋] + (h - ⌊h⌋)(x[⌊h⌋+1] - x[⌊h⌋])`.
///
/// `p` is clamped to `[0, 1]`.
pub fn percentile_sorted<T: Scalar>(sorted: &[T], p: T) -> Option<T> {
    let n = sorted.len();
    if n == 0 {
        return None;
    }
    let p = p.max(T::zero()).min(T::one());
    let h = T::count(n - 1) * p;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(n - 1);
    if i + 1 >= n {
        return Some(sorted[n - 1]);
    }
    let frac = h - lo;
    Some(sorted[i] + frac * (sorted[i + 1] - sorted[i]))
}

/// Sorts a copy of `xs` (NaNs last) and returns it.
pub fn sorted<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Greater));
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    // Brute-force oracle: walk the ranks explicitly.
    fn oracle(xs: &[f64], p: f64) -> f64 {
        let mut v = xs.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = (v.len() - 1) as f64 * p;
        let mut below = 0;
        for (i, _) in v.iter().enumerate() {
            if (i as f64) <= pos {
                below = i;
            }
        }
        let above = (below + 1).min(v.len() - 1);
        let w = pos - below as f64;
        v[below] * (1.0 - w) + v[above] * w
    }

    #[test]
    fn tenths_percentiles_match_oracle() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let s = sorted(&xs);
        for &p in &[0.0, 0.25, 0.5, 0.95, 0.99, 1.0] {
            let got = percentile_sorted(&s, p).unwrap();
            assert!((got - oracle(&xs, p)).abs() < 1e-12, "p={p}");
        }
        // h = 4.5 -> halfway between 0.5 and 0.6
        assert!((percentile_sorted(&s, 0.5).unwrap() - 0.55).abs() < 1e-12);
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(percentile_sorted::<f64>(&[], 0.5), None);
        assert_eq!(percentile_sorted(&[3.0f32], 0.99), Some(3.0));
        assert_eq!(mean::<f64>(&[]), None);
    }
}
