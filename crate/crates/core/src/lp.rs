//! Dense simplex for small covering programs.
//!
//! The covering LP `min c·x  s.t.  sum_{j in row i} x_j >= 1,  x >= 0` is
//! solved through its packing dual `max sum y_i  s.t.  sum_{i: j in row i}
//! y_i <= c_j,  y >= 0`. Costs are nonnegative, so the slack basis is feasible
//! and a single phase suffices. Primal values are read off the reduced costs
//! of the dual slacks at optimality.

const EPS: f64 = 1e-11;
/// Degenerate pivots tolerated under Dantzig's rule before switching to Bland.
const DEGENERATE_LIMIT: usize = 50;

#[derive(Clone, Debug)]
pub struct CoveringLp {
    /// Optimal objective value (dual objective).
    pub value: f64,
    /// Primal solution, one entry per column, each in `[0, 1]`.
    pub x: Vec<f64>,
}

/// Solves the covering LP. `rows[i]` lists the columns that cover row `i`.
/// Returns `None` if some row has no covering column (primal infeasible).
pub fn solve_covering(costs: &[f64], rows: &[Vec<usize>]) -> Option<CoveringLp> {
    let k = costs.len();
    let m = rows.len();
    if rows.iter().any(Vec::is_empty) {
        return None;
    }
    if m == 0 {
        return Some(CoveringLp {
            value: 0.0,
            x: vec![0.0; k],
        });
    }
    let width = m + k + 1;
    let rhs = m + k;
    let mut tab = vec![0.0; k * width];
    for (i, row) in rows.iter().enumerate() {
        for &j in row {
            tab[j * width + i] = 1.0;
        }
    }
    for (j, &c) in costs.iter().enumerate() {
        tab[j * width + m + j] = 1.0;
        tab[j * width + rhs] = c.max(0.0);
    }
    let mut obj = vec![0.0; width];
    for o in obj.iter_mut().take(m) {
        *o = -1.0;
    }
    let mut basis: Vec<usize> = (m..m + k).collect();
    let mut degenerate = 0usize;

    loop {
        let bland = degenerate > DEGENERATE_LIMIT;
        let entering = if bland {
            (0..m + k).find(|&c| obj[c] < -EPS)
        } else {
            (0..m + k)
                .filter(|&c| obj[c] < -EPS)
                .min_by(|&a, &b| obj[a].total_cmp(&obj[b]))
        };
        let Some(col) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for r in 0..k {
            let a = tab[r * width + col];
            if a > EPS {
                let ratio = tab[r * width + rhs] / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - EPS
                            || (ratio <= lratio + EPS && basis[r] < basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        // Unbounded dual cannot happen when every row is coverable.
        let (row, ratio) = leave?;
        if ratio <= EPS {
            degenerate += 1;
        } else {
            degenerate = 0;
        }
        pivot(&mut tab, &mut obj, width, k, row, col);
        basis[row] = col;
    }

    let x: Vec<f64> = (0..k).map(|j| obj[m + j].clamp(0.0, 1.0)).collect();
    Some(CoveringLp {
        value: obj[rhs],
        x,
    })
}

fn pivot(tab: &mut [f64], obj: &mut [f64], width: usize, k: usize, row: usize, col: usize) {
    let piv = tab[row * width + col];
    for v in &mut tab[row * width..(row + 1) * width] {
        *v /= piv;
    }
    let pivot_row: Vec<f64> = tab[row * width..(row + 1) * width].to_vec();
    for r in 0..k {
        if r == row {
            continue;
        }
        let f = tab[r * width + col];
        if f.abs() > 0.0 {
            let dst = &mut tab[r * width..(r + 1) * width];
            for (d, p) in dst.iter_mut().zip(&pivot_row) {
                *d -= f * p;
            }
            dst[col] = 0.0;
        }
    }
    let f = obj[col];
    for (d, p) in obj.iter_mut().zip(&pivot_row) {
        *d -= f * p;
    }
    obj[col] = 0.0;
}
