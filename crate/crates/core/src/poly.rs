//! Low-degree polynomials in centered, scaled coordinates and discrete
//! weighted least-squares projection onto them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, SampledFunction};

/// Gram matrices with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Multi-indices `alpha` with `|alpha| <= degree`, graded.
pub fn monomials(dim: usize, degree: u32) -> Vec<[u32; 2]> {
    let mut out = Vec::new();
    for total in 0..=degree {
        if dim == 1 {
            out.push([total, 0]);
        } else {
            for a in (0..=total).rev() {
                out.push([a, total - a]);
            }
        }
    }
    out
}

/// `x^alpha` for a multi-index.
pub fn monomial(alpha: [u32; 2], x: [f64; 2]) -> f64 {
    x[0].powi(alpha[0] as i32) * x[1].powi(alpha[1] as i32)
}

/// `sum_alpha c_alpha ((x - center) / scale)^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub dim: usize,
    pub degree: u32,
    pub center: [f64; 2],
    pub scale: f64,
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero(dim: usize, degree: u32) -> Self {
        Self { dim, degree, center: [0.0; 2], scale: 1.0, coeffs: vec![0.0; monomials(dim, degree).len()] }
    }

    fn local(&self, x: [f64; 2]) -> [f64; 2] {
        let mut u = [0.0; 2];
        for d in 0..self.dim {
            u[d] = (x[d] - self.center[d]) / self.scale;
        }
        u
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let u = self.local(x);
        monomials(self.dim, self.degree).iter().zip(&self.coeffs).map(|(&a, c)| c * monomial(a, u)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// Weighted least-squares fit from sparse samples `(flat index, f, weight)`.
///
/// Returns the polynomial `P` of degree `<= degree` with
/// `sum w (f - P) q = 0` for every monomial `q` of that degree.
pub(crate) fn project_samples(grid: &Grid, samples: &[(usize, f64, f64)], degree: u32) -> Result<Polynomial> {
    let dim = grid.dim();
    let basis = monomials(dim, degree);
    let support: Vec<&(usize, f64, f64)> = samples.iter().filter(|s| s.2 != 0.0).collect();
    if support.is_empty() {
        return Err(Error::Degenerate("projection weight vanishes identically".into()));
    }
    if support.iter().any(|s| s.2 < 0.0) {
        return Err(Error::invalid("projection weight must be nonnegative"));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for s in &support {
        let x = grid.point(s.0);
        for d in 0..dim {
            lo[d] = lo[d].min(x[d]);
            hi[d] = hi[d].max(x[d]);
        }
    }
    let mut center = [0.0; 2];
    let mut scale = 0.5 * grid.spacing();
    for d in 0..dim {
        center[d] = 0.5 * (lo[d] + hi[d]);
        scale = scale.max(0.5 * (hi[d] - lo[d]));
    }
    let mut poly = Polynomial { dim, degree, center, scale, coeffs: vec![0.0; basis.len()] };
    let k = basis.len();

    let rows: Vec<(Vec<f64>, f64, f64)> = support
        .iter()
        .map(|s| {
            let u = poly.local(grid.point(s.0));
            (basis.iter().map(|&a| monomial(a, u)).collect(), s.1, s.2)
        })
        .collect();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for (q, _, w) in &rows {
        for a in 0..k {
            for b in 0..=a {
                gram[(a, b)] += w * q[a] * q[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_nan() || min <= 0.0 || max / min > MAX_CONDITION {
        return Err(Error::Degenerate(format!(
            "Gram matrix of {} samples at degree {degree} has condition number {:e}",
            rows.len(),
            max / min
        )));
    }
    let chol = gram.cholesky().ok_or_else(|| Error::Degenerate("Gram matrix is not positive definite".into()))?;
    let moments = |c: &DVector<f64>| {
        let mut r = DVector::<f64>::zeros(k);
        for (q, f, w) in &rows {
            let p: f64 = q.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
            for a in 0..k {
                r[a] += w * (f - p) * q[a];
            }
        }
        r
    };
    let mut c = DVector::<f64>::zeros(k);
    // One solve plus two refinement sweeps drive the residual moments to rounding level.
    for _ in 0..3 {
        let r = moments(&c);
        c += chol.solve(&r);
    }
    poly.coeffs = c.iter().copied().collect();
    Ok(poly)
}

/// Weighted least-squares projection of `f` onto polynomials of degree `<= degree`.
pub fn local_projection(f: &SampledFunction, weight: &SampledFunction, degree: u32) -> Result<Polynomial> {
    if f.grid() != weight.grid() {
        return Err(Error::GridMismatch);
    }
    let samples: Vec<(usize, f64, f64)> = weight
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, &w)| (i, f.values()[i], w))
        .collect();
    project_samples(f.grid(), &samples, degree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let f = SampledFunction::from_fn(g, |x| 1.0 - 2.0 * x[0] + 0.5 * x[1]).unwrap();
        let w = SampledFunction::from_fn(g, |x| if x[0].abs() < 0.3 && x[1].abs() < 0.2 { 1.0 + x[0] } else { 0.0 })
            .unwrap();
        let p = local_projection(&f, &w, 1).unwrap();
        for (i, &wi) in w.values().iter().enumerate() {
            if wi > 0.0 {
                assert!((p.eval(g.point(i)) - f.values()[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degree_zero_is_weighted_mean() {
        let g = Grid::new(1, 1.0, 64).unwrap();
        let f = SampledFunction::from_fn(g, |x| x[0].exp()).unwrap();
        let w = SampledFunction::from_fn(g, |x| (0.5 - x[0].abs()).max(0.0)).unwrap();
        let p = local_projection(&f, &w, 0).unwrap();
        let num: f64 = f.values().iter().zip(w.values()).map(|(a, b)| a * b).sum();
        let den: f64 = w.values().iter().sum();
        assert!((p.coeffs[0] - num / den).abs() < 1e-14);
    }

    #[test]
    fn residual_is_orthogonal() {
        let g = Grid::new(2, 1.0, 64).unwrap();
        let f = SampledFunction::from_fn(g, |x| (7.0 * x[0]).sin() + x[1] * x[1]).unwrap();
        let w = SampledFunction::from_fn(g, |x| (0.4 - x[0].abs()).max(0.0) * (0.4 - x[1].abs()).max(0.0)).unwrap();
        let p = local_projection(&f, &w, 2).unwrap();
        let scale: f64 = f.values().iter().zip(w.values()).map(|(a, b)| (a * b).abs()).sum();
        for a in monomials(2, 2) {
            let r: f64 = (0..g.len())
                .map(|i| {
                    let x = g.point(i);
                    (f.values()[i] - p.eval(x)) * w.values()[i] * monomial(a, x)
                })
                .sum();
            assert!(r.abs() <= 1e-12 * scale, "{a:?}: {r}");
        }
    }

    #[test]
    fn single_point_is_degenerate_for_degree_one() {
        let g = Grid::new(1, 1.0, 64).unwrap();
        let f = SampledFunction::zeros(g);
        let mut w = SampledFunction::zeros(g);
        w.values_mut()[10] = 1.0;
        assert!(matches!(local_projection(&f, &w, 1), Err(Error::Degenerate(_))));
        assert!(local_projection(&f, &w, 0).is_ok());
    }
}
