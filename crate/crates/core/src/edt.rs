//! Exact squared Euclidean distance transform on cell centers.
//!
//! Two separable passes: a linear scan along the last axis, then the lower
//! envelope of parabolas along the first axis. All values are integers in
//! units of cells squared.

/// Squared distance from every cell to the nearest feature cell, or
/// `u64::MAX` when the grid has no feature.
pub(crate) fn squared_edt(feature: &[bool], shape: [usize; 2]) -> Vec<u64> {
    let [rows, cols] = shape;
    debug_assert_eq!(feature.len(), rows * cols);
    const INF: u64 = u64::MAX;

    // Pass 1: distance along each row to the nearest feature.
    let mut along = vec![INF; rows * cols];
    for r in 0..rows {
        let line = &feature[r * cols..(r + 1) * cols];
        let out = &mut along[r * cols..(r + 1) * cols];
        let mut last: Option<usize> = None;
        for c in 0..cols {
            if line[c] {
                last = Some(c);
            }
            if let Some(l) = last {
                out[c] = (c - l) as u64;
            }
        }
        let mut next: Option<usize> = None;
        for c in (0..cols).rev() {
            if line[c] {
                next = Some(c);
            }
            if let Some(n) = next {
                out[c] = out[c].min((n - c) as u64);
            }
        }
    }
    if rows == 1 {
        return along.into_iter().map(|d| if d == INF { INF } else { d * d }).collect();
    }

    // Pass 2: lower envelope of parabolas (q - k)^2 + along[k]^2 down each column.
    let mut out = vec![INF; rows * cols];
    let mut sites: Vec<usize> = Vec::with_capacity(rows);
    let mut bounds: Vec<f64> = Vec::with_capacity(rows + 1);
    for c in 0..cols {
        sites.clear();
        bounds.clear();
        let height = |k: usize| -> f64 {
            let g = along[k * cols + c] as f64;
            g * g + (k * k) as f64
        };
        for k in 0..rows {
            if along[k * cols + c] == INF {
                continue;
            }
            loop {
                match sites.last() {
                    None => {
                        sites.push(k);
                        bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&v) => {
                        // Abscissa where parabola k overtakes parabola v.
                        let s = (height(k) - height(v)) / (2.0 * (k as f64 - v as f64));
                        if s <= *bounds.last().unwrap() {
                            sites.pop();
                            bounds.pop();
                        } else {
                            sites.push(k);
                            bounds.push(s);
                            break;
                        }
                    }
                }
            }
        }
        if sites.is_empty() {
            continue;
        }
        let mut j = 0;
        for q in 0..rows {
            while j + 1 < sites.len() && bounds[j + 1] < q as f64 {
                j += 1;
            }
            let v = sites[j];
            let g = along[v * cols + c];
            let dq = q.abs_diff(v) as u64;
            out[q * cols + c] = dq * dq + g * g;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(feature: &[bool], shape: [usize; 2]) -> Vec<u64> {
        let [rows, cols] = shape;
        let mut out = vec![u64::MAX; rows * cols];
        for a in 0..rows * cols {
            for b in 0..rows * cols {
                if feature[b] {
                    let dr = (a / cols).abs_diff(b / cols) as u64;
                    let dc = (a % cols).abs_diff(b % cols) as u64;
                    out[a] = out[a].min(dr * dr + dc * dc);
                }
            }
        }
        out
    }

    #[test]
    fn matches_brute_force() {
        let mut state = 12345u64;
        for trial in 0..40 {
            let shape = if trial % 2 == 0 { [1, 57] } else { [23, 31] };
            let n = shape[0] * shape[1];
            let density = [0.01, 0.05, 0.3][trial % 3];
            let feature: Vec<bool> = (0..n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) < density
                })
                .collect();
            assert_eq!(squared_edt(&feature, shape), brute(&feature, shape));
        }
    }

    #[test]
    fn no_feature_is_infinite() {
        assert!(squared_edt(&[false; 12], [3, 4]).iter().all(|&d| d == u64::MAX));
    }
}
