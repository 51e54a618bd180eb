//! Norm-compatible 1:2 interpolation pairs.
//!
//! The interior of `I_c2f` injects at coincident points and uses the centered
//! `2p`-point Lagrange stencil at midpoints. A block of `F × C` entries at each end is
//! left free; it is fixed by requiring degree `p − 1` exactness of the closure rows of
//! both `I_c2f` and the induced `I_f2c = H_c⁻¹ I_c2fᵀ H_f`, then minimizing the
//! degree-`p` defects (the leading error) with a minimum-norm tie-break.

use super::{InterfaceOperatorPair, TransferKind};
use crate::error::{Error, Result};
use crate::linalg::constrained_least_squares;
use crate::sbp::SbpCoefficients;
use crate::sparse::TripletBuilder;
use ndarray::{Array1, Array2};

/// Free closure block `(F fine rows, C coarse columns)` for an order.
pub fn interpolation_closure_size(order: usize) -> Result<(usize, usize)> {
    match order {
        2 => Ok((2, 1)),
        4 => Ok((8, 5)),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

fn midpoint_stencil(order: usize) -> Vec<(isize, f64)> {
    match order {
        2 => vec![(0, 0.5), (1, 0.5)],
        _ => vec![(-1, -1.0 / 16.0), (0, 9.0 / 16.0), (1, 9.0 / 16.0), (2, -1.0 / 16.0)],
    }
}

/// Interior template of `I_c2f` for `nc` coarse points.
fn template(order: usize, nc: usize) -> Array2<f64> {
    let nf = 2 * nc - 1;
    let mut t = Array2::zeros((nf, nc));
    for j in 0..nc {
        t[[2 * j, j]] = 1.0;
    }
    let st = midpoint_stencil(order);
    for j in 0..nc - 1 {
        for &(o, c) in &st {
            let col = j as isize + o;
            if col >= 0 && (col as usize) < nc {
                t[[2 * j + 1, col as usize]] = c;
            }
        }
    }
    t
}

/// Solves for the left closure block on a reference problem with unit coarse spacing.
fn closure_block(order: usize) -> Result<Array2<f64>> {
    let (f, c) = interpolation_closure_size(order)?;
    let coeffs = SbpCoefficients::for_order(order)?;
    let p = order / 2;
    let q = p - 1;
    let nc = 2 * c + 8;
    let nf = 2 * nc - 1;
    let wc = coeffs.norm_weights(nc)?;
    let wf: Vec<f64> = coeffs.norm_weights(nf)?.iter().map(|w| 0.5 * w).collect();
    let mut t = template(order, nc);
    for i in 0..f {
        for j in 0..c {
            t[[i, j]] = 0.0;
            t[[nf - 1 - i, nc - 1 - j]] = 0.0;
        }
    }
    let xc: Vec<f64> = (0..nc).map(|j| j as f64).collect();
    let xf: Vec<f64> = (0..nf).map(|i| 0.5 * i as f64).collect();
    let nu = f * c;
    let idx = |i: usize, j: usize| i * c + j;
    let (mut crow, mut cval, mut arow, mut aval) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..f {
        for d in 0..=p {
            let mut a = vec![0.0; nu];
            let fixed: f64 = (0..nc).map(|j| t[[i, j]] * xc[j].powi(d as i32)).sum();
            for j in 0..c {
                a[idx(i, j)] = xc[j].powi(d as i32);
            }
            let rhs = xf[i].powi(d as i32) - fixed;
            if d <= q {
                crow.push(a);
                cval.push(rhs);
            } else {
                arow.push(a);
                aval.push(rhs);
            }
        }
    }
    for j in 0..c {
        for d in 0..=p {
            let mut a = vec![0.0; nu];
            let fixed: f64 = (0..nf).map(|i| t[[i, j]] * wf[i] * xf[i].powi(d as i32)).sum::<f64>() / wc[j];
            for i in 0..f {
                a[idx(i, j)] = wf[i] * xf[i].powi(d as i32) / wc[j];
            }
            let rhs = xc[j].powi(d as i32) - fixed;
            if d <= q {
                crow.push(a);
                cval.push(rhs);
            } else {
                arow.push(a);
                aval.push(rhs);
            }
        }
    }
    let to2 = |rows: Vec<Vec<f64>>| {
        let n = rows.len();
        Array2::from_shape_vec((n, nu), rows.into_iter().flatten().collect()).unwrap()
    };
    let sol = constrained_least_squares(&to2(arow), &Array1::from(aval), &to2(crow), &Array1::from(cval), 1e-10)?;
    Ok(Array2::from_shape_fn((f, c), |(i, j)| sol.x[idx(i, j)]))
}

/// Builds the norm-compatible interpolation pair for `n_c` coarse points of spacing `h_c`
/// (fine side: `2 n_c − 1` points of spacing `h_c / 2`), both traces starting at 0.
pub fn build_interpolation_pair(order: usize, n_c: usize, h_c: f64) -> Result<InterfaceOperatorPair> {
    let (f, c) = interpolation_closure_size(order)?;
    let coeffs = SbpCoefficients::for_order(order)?;
    let min = (2 * c + 1).max(2 * coeffs.closure_rows() + 1).max(f + 1);
    if n_c < min {
        return Err(Error::GridTooSmall { n: n_c, min });
    }
    if !(h_c > 0.0) {
        return Err(Error::NonpositiveInput(format!("h_c = {h_c}")));
    }
    let nf = 2 * n_c - 1;
    let block = closure_block(order)?;
    let mut t = template(order, n_c);
    for i in 0..f {
        for j in 0..c {
            t[[i, j]] = block[[i, j]];
            t[[nf - 1 - i, n_c - 1 - j]] = block[[i, j]];
        }
    }
    let mut b = TripletBuilder::new(nf, n_c);
    for ((i, j), &v) in t.indexed_iter() {
        b.push(i, j, v);
    }
    let i_c2f = b.build();
    let h_c_diag: Vec<f64> = coeffs.norm_weights(n_c)?.iter().map(|w| w * h_c).collect();
    let h_f_diag: Vec<f64> = coeffs.norm_weights(nf)?.iter().map(|w| w * 0.5 * h_c).collect();
    let inv_hc: Vec<f64> = h_c_diag.iter().map(|v| 1.0 / v).collect();
    let i_f2c = i_c2f.transpose().scale_cols(&h_f_diag).scale_rows(&inv_hc);
    Ok(InterfaceOperatorPair {
        order,
        kind: TransferKind::Interpolation,
        i_c2f,
        i_f2c,
        y_c: (0..n_c).map(|j| j as f64 * h_c).collect(),
        y_f: (0..nf).map(|i| i as f64 * 0.5 * h_c).collect(),
        h_c: h_c_diag,
        h_f: h_f_diag,
    })
}
