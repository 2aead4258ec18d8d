use std::cmp::Ordering;
use std::collections::HashSet;
use std::hash::Hash;

use crate::error::{Error, Result};

fn check_lengths(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two observations".into(),
        ));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in input".into()));
    }
    Ok(())
}

fn cmp(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

/// Number of pairs within runs of equal values in a sorted slice.
fn tied_pairs<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sorts `v` by `cmp` with a merge sort and returns the number of inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps =
        merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if cmp(v[j], v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall's tau-b, `(C - D) / sqrt((C + D + Tx)(C + D + Ty))`, where `Tx`
/// and `Ty` count pairs tied only in `x` or only in `y`. Uses Knight's
/// O(n log n) pair counting.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| cmp(a.0, b.0).then(cmp(a.1, b.1)));
    let tied_x = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let tied_xy = tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; ys.len()];
    let discordant = merge_count(&mut ys, &mut buf);
    let tied_y = tied_pairs(&ys, |a, b| a == b);

    let denom_x = n0 - tied_x;
    let denom_y = n0 - tied_y;
    if denom_x == 0 || denom_y == 0 {
        return Err(Error::Undefined("Kendall's tau with a constant input"));
    }
    // n0 - tied_x - tied_y + tied_xy = C + D
    let numerator = (n0 + tied_xy) as i64 - (tied_x + tied_y) as i64 - 2 * discordant as i64;
    Ok(numerator as f64 / ((denom_x as f64) * (denom_y as f64)).sqrt())
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| cmp(values[a], values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of the average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = rx.len() as f64;
    // Mean of 1..n is (n + 1) / 2 regardless of ties.
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("Spearman's rho with a constant input"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Extrapolated rank-biased overlap of two complete rankings of the same
/// items.
///
/// With equal item sets the agreement at full depth is 1, and the
/// extrapolated form reduces to `1 - Σ_d (1 - p) p^(d-1) (1 - X_d / d)`,
/// where `X_d` is the overlap of the depth-`d` prefixes. This form is exactly
/// symmetric and yields exactly 1 for identical rankings.
pub fn rbo<T: Eq + Hash>(a: &[T], b: &[T], p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "RBO persistence {p} outside (0, 1)"
        )));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("rankings differ in length".into()));
    }
    let set_a: HashSet<&T> = a.iter().collect();
    let set_b: HashSet<&T> = b.iter().collect();
    if set_a.len() != a.len() || set_b.len() != b.len() {
        return Err(Error::InvalidArgument("ranking contains duplicates".into()));
    }
    if set_a != set_b {
        return Err(Error::InvalidArgument(
            "rankings cover different items".into(),
        ));
    }
    if a.is_empty() {
        return Err(Error::Empty("ranking"));
    }

    let mut seen_a: HashSet<&T> = HashSet::with_capacity(a.len());
    let mut seen_b: HashSet<&T> = HashSet::with_capacity(b.len());
    let mut overlap = 0usize;
    let mut weight = 1.0 - p;
    let mut shortfall = 0.0;
    for (d, (x, y)) in a.iter().zip(b).enumerate() {
        if x == y {
            overlap += 1;
        } else {
            if seen_b.contains(x) {
                overlap += 1;
            }
            if seen_a.contains(y) {
                overlap += 1;
            }
        }
        seen_a.insert(x);
        seen_b.insert(y);
        let depth = d + 1;
        if overlap < depth {
            shortfall += weight * (1.0 - overlap as f64 / depth as f64);
        }
        weight *= p;
    }
    Ok((1.0 - shortfall).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_cases() {
        assert_eq!(
            kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
        assert_eq!(
            kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
        let t = kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tau_errors() {
        assert!(matches!(
            kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Undefined(_))
        ));
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn tau_with_ties() {
        // pairs: (0,1) tx; (0,2) C; (0,3) D; (1,2) ty; (1,3) D; (2,3) D
        // C=1, D=3, Tx=1, Ty=1 -> (1-3)/sqrt(5*5) = -0.4
        let t = kendall_tau(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 0.0]).unwrap();
        assert!((t + 0.4).abs() < 1e-15);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 10.0, 5.0]),
            [2.5, 4.0, 2.5, 1.0]
        );
    }

    #[test]
    fn rho_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman_rho(&x, &x).unwrap(), 1.0);
        assert_eq!(spearman_rho(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((spearman_rho(&x, &[1.0, 2.0, 4.0, 3.0]).unwrap() - 0.8).abs() < 1e-15);
        assert!(matches!(
            spearman_rho(&x, &[2.0; 4]),
            Err(Error::Undefined(_))
        ));
    }

    #[test]
    fn rbo_cases() {
        assert_eq!(rbo(&["s1", "s2"], &["s2", "s1"], 0.9).unwrap(), 0.9);
        let a = ["a", "b", "c", "d"];
        assert_eq!(rbo(&a, &a, 0.9).unwrap(), 1.0);
        assert!(rbo(&["a", "b"], &["a", "c"], 0.9).is_err());
        assert!(rbo(&["a", "a"], &["a", "a"], 0.9).is_err());
        assert!(rbo(&a, &a, 1.0).is_err());
    }

    #[test]
    fn rbo_symmetric() {
        let a = ["a", "b", "c", "d", "e"];
        let b = ["c", "a", "e", "b", "d"];
        assert_eq!(rbo(&a, &b, 0.9).unwrap(), rbo(&b, &a, 0.9).unwrap());
    }
}
