//! Dense primal simplex for `max cᵀx, Ax ≤ b, x ≥ 0` with `b ≥ 0`.

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

/// Bland's rule keeps the method finite on degenerate problems.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = c.len();
    let m = a.len();
    if b.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("simplex needs a nonnegative right-hand side"));
    }
    // tableau rows: constraints with slacks, last row the reduced costs
    let w = n + m + 1;
    let mut t = vec![0.0; (m + 1) * w];
    for i in 0..m {
        t[i * w..i * w + n].copy_from_slice(&a[i]);
        t[i * w + n + i] = 1.0;
        t[i * w + w - 1] = b[i];
    }
    for j in 0..n {
        t[m * w + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_iter = 50 * (n + m) + 1000;
    for _ in 0..max_iter {
        let Some(col) = (0..n + m).find(|&j| t[m * w + j] < -EPS) else {
            let mut x = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    x[bv] = t[i * w + w - 1];
                }
            }
            return Ok(x);
        };
        let mut row: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            let aij = t[i * w + col];
            if aij <= EPS {
                continue;
            }
            let ratio = t[i * w + w - 1] / aij;
            let take = match row {
                None => true,
                Some(k) => ratio < best - EPS || (ratio <= best + EPS && basis[i] < basis[k]),
            };
            if take {
                best = ratio;
                row = Some(i);
            }
        }
        let Some(r) = row else {
            return Err(Error::invalid("linear program is unbounded"));
        };
        let piv = t[r * w + col];
        for j in 0..w {
            t[r * w + j] /= piv;
        }
        for i in 0..=m {
            if i == r {
                continue;
            }
            let f = t[i * w + col];
            if f != 0.0 {
                for j in 0..w {
                    t[i * w + j] -= f * t[r * w + j];
                }
            }
        }
        basis[r] = col;
    }
    Err(Error::Solver {
        residual: f64::NAN,
        iterations: max_iter,
    })
}
