//! Dense two-phase simplex for the small minimax problems of the mean solver.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

const EPS: f64 = 1e-11;

/// Solve `min cᵀx` subject to `Ax = b`, `x ≥ 0`, with `b ≥ 0`.
///
/// `cols[j]` is column `j` of `A`. Returns the indices of the final basis,
/// one per row, or `None` when the problem is infeasible, unbounded, stalls,
/// or a redundant row leaves an artificial variable in the basis.
pub(crate) fn simplex(cols: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<Vec<usize>> {
    let m = b.len();
    let n = cols.len();
    let width = n + m + 1;
    // rows 0..m hold [A | I | b]
    let mut t = vec![0.0; m * width];
    for (j, col) in cols.iter().enumerate() {
        for i in 0..m {
            t[i * width + j] = col[i];
        }
    }
    for i in 0..m {
        t[i * width + n + i] = 1.0;
        t[i * width + width - 1] = b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let phase1: Vec<f64> = (0..n + m).map(|j| if j < n { 0.0 } else { 1.0 }).collect();
    run(&mut t, &mut basis, m, width, &phase1, n + m)?;
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i * width + width - 1]).sum();
    let scale = b.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    if infeas > 1e-9 * scale {
        return None;
    }
    // drive zero-level artificials out of the basis
    for i in 0..m {
        if basis[i] < n {
            continue;
        }
        let j = (0..n).find(|&j| t[i * width + j].abs() > 1e-9)?;
        pivot(&mut t, &mut basis, m, width, i, j);
    }
    run(&mut t, &mut basis, m, width, c, n)?;
    Some(basis)
}

fn run(t: &mut [f64], basis: &mut [usize], m: usize, width: usize, c: &[f64], n_cols: usize) -> Option<()> {
    let max_pivots = 50 * (n_cols + m) + 1000;
    let mut stalled = 0usize;
    let mut last = f64::INFINITY;
    for _ in 0..max_pivots {
        // reduced costs r_j = c_j − c_Bᵀ B⁻¹ A_j, read from the tableau
        let bland = stalled > 50;
        let mut enter = None;
        let mut most = -EPS;
        for j in 0..n_cols {
            if basis.contains(&j) {
                continue;
            }
            let mut r = c[j];
            for i in 0..m {
                r -= c[basis[i]] * t[i * width + j];
            }
            if r < most {
                enter = Some(j);
                most = r;
                if bland {
                    break;
                }
            }
        }
        let Some(j) = enter else { return Some(()) };
        let mut leave = None;
        let mut ratio = f64::INFINITY;
        for i in 0..m {
            let a = t[i * width + j];
            if a > EPS {
                let q = t[i * width + width - 1] / a;
                if q < ratio - EPS || (q <= ratio + EPS && leave.is_some_and(|l: usize| basis[i] < basis[l])) {
                    ratio = q;
                    leave = Some(i);
                }
            }
        }
        let i = leave?;
        pivot(t, basis, m, width, i, j);
        let obj: f64 = (0..m).map(|i| c[basis[i]] * t[i * width + width - 1]).sum();
        if obj < last - EPS * last.abs().max(1.0) {
            stalled = 0;
            last = obj;
        } else {
            stalled += 1;
        }
    }
    None
}

fn pivot(t: &mut [f64], basis: &mut [usize], m: usize, width: usize, r: usize, j: usize) {
    let p = t[r * width + j];
    for x in &mut t[r * width..(r + 1) * width] {
        *x /= p;
    }
    let row: Vec<f64> = t[r * width..(r + 1) * width].to_vec();
    for i in 0..m {
        if i == r {
            continue;
        }
        let f = t[i * width + j];
        if f != 0.0 {
            for (x, y) in t[i * width..(i + 1) * width].iter_mut().zip(&row) {
                *x -= f * y;
            }
        }
    }
    basis[r] = j;
}
