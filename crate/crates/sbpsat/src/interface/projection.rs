//! Glue-grid projection operators.
//!
//! Each trace is mapped to a piecewise polynomial of degree `2p − 1` per cell, expressed in
//! a per-cell Legendre basis so every mass matrix is diagonal. Interior cells use the
//! `2p`-point Lagrange interpolant of the nodal values. The first `K` cells are free
//! (restricted to the first `W` nodes) and fixed by exactness of `P_f2p` and of
//! `P_p2f = H⁻¹ P_f2pᵀ M`, minimizing the next-degree defects with a minimum-norm tie-break.
//! Polynomials move between a trace's cells and the glue cells by exact embedding
//! and L2 projection.

use super::{InterfaceOperatorPair, TransferKind};
use crate::error::{Error, Result};
use crate::linalg::constrained_least_squares;
use crate::poly::{gauss_legendre, legendre_coefficients, legendre_values};
use crate::sbp::SbpCoefficients;
use crate::sparse::{CsrMatrix, TripletBuilder};
use ndarray::{Array1, Array2};

/// `(K cells, W nodes, f2p exact degree, p2f exact degree, objective degrees beyond)`.
fn closure_params(order: usize) -> Result<(usize, usize, usize, usize, usize)> {
    match order {
        2 => Ok((1, 2, 1, 0, 1)),
        4 => Ok((5, 7, 1, 1, 1)),
        _ => Err(Error::UnsupportedOrder(order)),
    }
}

fn quad_rule() -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(12)
}

/// Legendre coefficients on the cell `[0, 1]` of the Lagrange basis for nodes `-p+1 ..= p`,
/// as an `nm × 2p` matrix.
fn interior_stencil(order: usize) -> Array2<f64> {
    let p = order / 2;
    let nm = 2 * p;
    let rule = quad_rule();
    let nodes: Vec<f64> = (0..2 * p).map(|j| j as f64 - (p as f64 - 1.0)).collect();
    let mut out = Array2::zeros((nm, 2 * p));
    for j in 0..2 * p {
        let basis = |x: f64| {
            nodes
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, &xk)| (x - xk) / (nodes[j] - xk))
                .product::<f64>()
        };
        for (m, c) in legendre_coefficients(basis, 0.0, 1.0, nm, &rule).into_iter().enumerate() {
            out[[m, j]] = c;
        }
    }
    out
}

/// Solves for the left closure of `P_f2p` (rows `(k, m)` for `k < K`, columns `< W`).
fn closure_block(order: usize) -> Result<Array2<f64>> {
    let (kc, w, qf, qp, lead) = closure_params(order)?;
    let p = order / 2;
    let nm = 2 * p;
    let n = 2 * w + 2 * p + 4;
    let ncell = n - 1;
    let weights = SbpCoefficients::for_order(order)?.norm_weights(n)?;
    let stencil = interior_stencil(order);
    let rule = quad_rule();
    let mut tmpl = Array2::<f64>::zeros((ncell * nm, n));
    for k in kc..ncell - kc {
        for m in 0..nm {
            for j in 0..2 * p {
                tmpl[[k * nm + m, k + j + 1 - p]] = stencil[[m, j]];
            }
        }
    }
    let mono =
        |k: usize, deg: usize| legendre_coefficients(|x| x.powi(deg as i32), k as f64, k as f64 + 1.0, nm, &rule);
    let nu = kc * nm * w;
    let idx = |k: usize, m: usize, i: usize| (k * nm + m) * w + i;
    let (mut crow, mut cval, mut arow, mut aval) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for k in 0..kc {
        for deg in 0..=qf + lead {
            let c = mono(k, deg);
            for m in 0..nm {
                let mut a = vec![0.0; nu];
                for i in 0..w {
                    a[idx(k, m, i)] = (i as f64).powi(deg as i32);
                }
                if deg <= qf {
                    crow.push(a);
                    cval.push(c[m]);
                } else {
                    arow.push(a);
                    aval.push(c[m]);
                }
            }
        }
    }
    for i in 0..w {
        for deg in 0..=qp + lead {
            let mut a = vec![0.0; nu];
            let mut fixed = 0.0;
            for k in 0..ncell {
                if k + p < i + 1 && k >= kc {
                    continue;
                }
                let c = mono(k, deg);
                for m in 0..nm {
                    let coef = c[m] / (2 * m + 1) as f64 / weights[i];
                    if k < kc {
                        a[idx(k, m, i)] += coef;
                    } else {
                        fixed += tmpl[[k * nm + m, i]] * coef;
                    }
                }
            }
            let rhs = (i as f64).powi(deg as i32) - fixed;
            if deg <= qp {
                crow.push(a);
                cval.push(rhs);
            } else {
                arow.push(a);
                aval.push(rhs);
            }
        }
    }
    let to2 = |rows: Vec<Vec<f64>>| {
        let r = rows.len();
        Array2::from_shape_vec((r, nu), rows.into_iter().flatten().collect()).unwrap()
    };
    let sol = constrained_least_squares(&to2(arow), &Array1::from(aval), &to2(crow), &Array1::from(cval), 1e-10)?;
    Ok(Array2::from_shape_fn((kc * nm, w), |(r, i)| sol.x[r * w + i]))
}

/// Nodal values to per-cell Legendre coefficients for `n` equidistant points.
///
/// The matrix is independent of the spacing; rows are ordered `(cell, mode)`.
pub fn build_f2p(order: usize, n: usize) -> Result<CsrMatrix> {
    let (kc, w, ..) = closure_params(order)?;
    if n < 2 * w {
        return Err(Error::GridTooSmall { n, min: 2 * w });
    }
    let p = order / 2;
    let nm = 2 * p;
    let ncell = n - 1;
    let stencil = interior_stencil(order);
    let block = closure_block(order)?;
    let mut b = TripletBuilder::new(ncell * nm, n);
    for k in kc..ncell - kc {
        for m in 0..nm {
            for j in 0..2 * p {
                b.push(k * nm + m, k + j + 1 - p, stencil[[m, j]]);
            }
        }
    }
    for k in 0..kc {
        for m in 0..nm {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..w {
                let v = block[[k * nm + m, i]];
                b.push(k * nm + m, i, v);
                b.push((ncell - 1 - k) * nm + m, n - 1 - i, sign * v);
            }
        }
    }
    Ok(b.build())
}

/// Equidistant piece of a trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSegment {
    pub y0: f64,
    pub h: f64,
    pub n: usize,
}

impl TraceSegment {
    pub fn end(&self) -> f64 {
        self.y0 + (self.n - 1) as f64 * self.h
    }
}

/// One side of an interface: one or more abutting equidistant segments, each carrying its
/// own SBP trace norm.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSide {
    pub order: usize,
    pub segments: Vec<TraceSegment>,
}

impl TraceSide {
    pub fn uniform(order: usize, y0: f64, y1: f64, n: usize) -> Result<Self> {
        if n < 2 || !(y1 > y0) {
            return Err(Error::NonpositiveInput(format!("trace [{y0}, {y1}] with {n} points")));
        }
        Self::from_segments(order, vec![TraceSegment { y0, h: (y1 - y0) / (n - 1) as f64, n }])
    }

    /// Segments must be sorted and abut within `1e-12` of the total length.
    pub fn from_segments(order: usize, segments: Vec<TraceSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::CoverageGap("trace without segments".into()));
        }
        let len = segments.last().unwrap().end() - segments[0].y0;
        for s in segments.windows(2) {
            if (s[0].end() - s[1].y0).abs() > 1e-12 * len.abs() {
                return Err(Error::CoverageGap(format!("segments end at {} and restart at {}", s[0].end(), s[1].y0)));
            }
        }
        Ok(Self { order, segments })
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.n).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> f64 {
        self.segments[0].y0
    }

    pub fn end(&self) -> f64 {
        self.segments.last().unwrap().end()
    }

    /// Concatenated node coordinates; a point shared by two segments appears twice.
    pub fn coordinates(&self) -> Vec<f64> {
        self.segments
            .iter()
            .flat_map(|s| (0..s.n).map(move |i| if i + 1 == s.n { s.end() } else { s.y0 + i as f64 * s.h }))
            .collect()
    }

    /// Concatenated SBP trace norms.
    pub fn norm(&self) -> Result<Vec<f64>> {
        let c = SbpCoefficients::for_order(self.order)?;
        let mut out = Vec::with_capacity(self.len());
        for s in &self.segments {
            out.extend(c.norm_weights(s.n)?.into_iter().map(|w| w * s.h));
        }
        Ok(out)
    }

    fn cells(&self) -> Vec<(f64, f64)> {
        let y = self.coordinates();
        let mut out = Vec::new();
        let mut off = 0;
        for s in &self.segments {
            for i in 0..s.n - 1 {
                out.push((y[off + i], y[off + i + 1]));
            }
            off += s.n;
        }
        out
    }
}

/// Sorted union of two coordinate lists with index maps.
#[derive(Clone, Debug, PartialEq)]
pub struct GlueGrid {
    pub points: Vec<f64>,
    /// Position in `points` of each input coordinate.
    pub map_c: Vec<usize>,
    pub map_f: Vec<usize>,
}

/// Merges two ascending coordinate lists with shared endpoints. Points closer than
/// `1e-12` times the trace length are merged.
pub fn build_glue_grid(y_c: &[f64], y_f: &[f64]) -> Result<GlueGrid> {
    if y_c.is_empty() || y_f.is_empty() {
        return Err(Error::EndpointMismatch("empty trace".into()));
    }
    let len = (y_c[y_c.len() - 1] - y_c[0]).abs().max((y_f[y_f.len() - 1] - y_f[0]).abs());
    let tol = 1e-12 * len;
    if (y_c[0] - y_f[0]).abs() > tol || (y_c[y_c.len() - 1] - y_f[y_f.len() - 1]).abs() > tol {
        return Err(Error::EndpointMismatch(format!(
            "[{}, {}] vs [{}, {}]",
            y_c[0],
            y_c[y_c.len() - 1],
            y_f[0],
            y_f[y_f.len() - 1]
        )));
    }
    let mut all: Vec<(f64, usize, usize)> = y_c
        .iter()
        .enumerate()
        .map(|(i, &y)| (y, 0, i))
        .chain(y_f.iter().enumerate().map(|(i, &y)| (y, 1, i)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points: Vec<f64> = Vec::new();
    let mut map_c = vec![0; y_c.len()];
    let mut map_f = vec![0; y_f.len()];
    for (y, side, i) in all {
        if points.last().is_none_or(|&last| y - last > tol) {
            points.push(y);
        }
        let g = points.len() - 1;
        if side == 0 {
            map_c[i] = g;
        } else {
            map_f[i] = g;
        }
    }
    Ok(GlueGrid { points, map_c, map_f })
}

/// Projection operators of one trace.
#[derive(Clone, Debug)]
pub struct ProjectionSide {
    pub trace: TraceSide,
    pub p_f2p: CsrMatrix,
    pub p_p2f: CsrMatrix,
    pub p_p2g: CsrMatrix,
    pub p_g2p: CsrMatrix,
    /// Diagonal mass matrix of the trace's polynomial space.
    pub mass: Vec<f64>,
    /// Diagonal SBP trace norm.
    pub norm: Vec<f64>,
}

/// Projection operators for both sides of an interface plus the glue grid.
#[derive(Clone, Debug)]
pub struct GlueGridSet {
    pub order: usize,
    pub glue: GlueGrid,
    /// Diagonal mass matrix on the glue grid's polynomial space.
    pub m_g: Vec<f64>,
    pub c: ProjectionSide,
    pub f: ProjectionSide,
}

impl GlueGridSet {
    pub fn y_g(&self) -> &[f64] {
        &self.glue.points
    }

    /// Largest residual of `H P_p2f = (M P_f2p)ᵀ` over both sides, relative to the entry scale.
    pub fn compatibility_a(&self) -> f64 {
        [&self.c, &self.f]
            .iter()
            .map(|s| {
                let a = s.p_p2f.scale_rows(&s.norm);
                let b = s.p_f2p.scale_rows(&s.mass).transpose();
                a.sub(&b).max_abs() / a.max_abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest residual of `M_g P_p2g = (M P_g2p)ᵀ` over both sides.
    pub fn compatibility_b(&self) -> f64 {
        [&self.c, &self.f]
            .iter()
            .map(|s| {
                let a = s.p_p2g.scale_rows(&self.m_g);
                let b = s.p_g2p.scale_rows(&s.mass).transpose();
                a.sub(&b).max_abs() / a.max_abs()
            })
            .fold(0.0, f64::max)
    }
}

fn mode_mass(cells: &[(f64, f64)], nm: usize) -> Vec<f64> {
    cells.iter().flat_map(|&(a, b)| (0..nm).map(move |m| (b - a) / (2 * m + 1) as f64)).collect()
}

fn embedding(glue_cells: &[(f64, f64)], cells: &[(f64, f64)], nm: usize) -> Result<CsrMatrix> {
    let rule = quad_rule();
    let mut b = TripletBuilder::new(glue_cells.len() * nm, cells.len() * nm);
    for (g, &(g0, g1)) in glue_cells.iter().enumerate() {
        let mid = 0.5 * (g0 + g1);
        let k = cells.partition_point(|c| c.0 <= mid).saturating_sub(1);
        let (a, bb) = cells[k];
        if mid < a || mid > bb {
            return Err(Error::CoverageGap(format!("glue cell [{g0}, {g1}] lies outside the trace cells")));
        }
        for m in 0..nm {
            let f = |x: f64| legendre_values(2.0 * (x - a) / (bb - a) - 1.0, nm)[m];
            for (mm, v) in legendre_coefficients(f, g0, g1, nm, &rule).into_iter().enumerate() {
                if v.abs() > 1e-15 {
                    b.push(g * nm + mm, k * nm + m, v);
                }
            }
        }
    }
    Ok(b.build())
}

fn side_operators(trace: &TraceSide, glue_cells: &[(f64, f64)], m_g: &[f64]) -> Result<ProjectionSide> {
    let nm = trace.order;
    let mut blocks = TripletBuilder::new((trace.len() - trace.segments.len()) * nm, trace.len());
    let (mut roff, mut coff) = (0, 0);
    for s in &trace.segments {
        let f2p = build_f2p(trace.order, s.n)?;
        blocks.add_block(roff, coff, &f2p, 1.0);
        roff += f2p.nrows();
        coff += s.n;
    }
    let p_f2p = blocks.build();
    let cells = trace.cells();
    let mass = mode_mass(&cells, nm);
    let norm = trace.norm()?;
    let inv_norm: Vec<f64> = norm.iter().map(|v| 1.0 / v).collect();
    let p_p2f = p_f2p.transpose().scale_cols(&mass).scale_rows(&inv_norm);
    let p_p2g = embedding(glue_cells, &cells, nm)?;
    let inv_mass: Vec<f64> = mass.iter().map(|v| 1.0 / v).collect();
    let p_g2p = p_p2g.transpose().scale_cols(m_g).scale_rows(&inv_mass);
    Ok(ProjectionSide { trace: trace.clone(), p_f2p, p_p2f, p_p2g, p_g2p, mass, norm })
}

/// Builds projection operators for two traces covering the same segment.
///
/// The `c`/`f` labels only fix which side plays the coarse role in the composed pair.
pub fn build_projection_set(order: usize, c: &TraceSide, f: &TraceSide) -> Result<GlueGridSet> {
    closure_params(order)?;
    if c.order != order || f.order != order {
        return Err(Error::SizeMismatch("trace order differs from requested order".into()));
    }
    let glue = build_glue_grid(&c.coordinates(), &f.coordinates())?;
    let glue_cells: Vec<(f64, f64)> = glue.points.windows(2).map(|w| (w[0], w[1])).collect();
    let m_g = mode_mass(&glue_cells, order);
    let cs = side_operators(c, &glue_cells, &m_g)?;
    let fs = side_operators(f, &glue_cells, &m_g)?;
    Ok(GlueGridSet { order, glue, m_g, c: cs, f: fs })
}

/// `I_c2f = P_p2f,f P_g2p,f P_p2g,c P_f2p,c` and the mirrored `I_f2c`.
pub fn compose_interface(gs: &GlueGridSet) -> InterfaceOperatorPair {
    let transfer =
        |from: &ProjectionSide, to: &ProjectionSide| to.p_p2f.matmul(&to.p_g2p.matmul(&from.p_p2g.matmul(&from.p_f2p)));
    InterfaceOperatorPair {
        order: gs.order,
        kind: TransferKind::ProjectionComposed,
        i_c2f: transfer(&gs.c, &gs.f),
        i_f2c: transfer(&gs.f, &gs.c),
        h_c: gs.c.norm.clone(),
        h_f: gs.f.norm.clone(),
        y_c: gs.c.trace.coordinates(),
        y_f: gs.f.trace.coordinates(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::{build_interpolation_pair, xi_diagnostics};
    use crate::linalg::symmetric_eigenvalues;

    #[test]
    fn glue_grid_examples() {
        let g = build_glue_grid(&[0.0, 0.5, 1.0], &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert_eq!(g.points, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.map_c, vec![0, 2, 4]);
        let g = build_glue_grid(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        assert_eq!(g.points.len(), 7);
        let y = [0.0, 0.2, 0.7, 1.0];
        let g = build_glue_grid(&y, &y).unwrap();
        assert_eq!(g.points, y.to_vec());
        assert_eq!(g.map_c, g.map_f);
        assert!(matches!(build_glue_grid(&[0.0, 1.0], &[0.0, 2.0]), Err(Error::EndpointMismatch(_))));
    }

    #[test]
    fn f2p_is_a_contraction_in_the_norm() {
        for order in [2, 4] {
            for n in [14, 26, 51, 101] {
                let f2p = build_f2p(order, n).unwrap();
                let trace = TraceSide::uniform(order, 0.0, 1.0, n).unwrap();
                let h = trace.norm().unwrap();
                let m = mode_mass(&trace.cells(), order);
                let ptmp = f2p.transpose().matmul(&f2p.scale_rows(&m)).to_dense();
                let d = ndarray::Array2::from_diag(&ndarray::Array1::from(h)) - ptmp;
                let lam = symmetric_eigenvalues(&((&d + &d.t()) * 0.5)).unwrap()[0];
                assert!(lam >= -1e-13, "order {order} n {n}: {lam}");
            }
        }
    }

    #[test]
    fn f2p_reproduces_linear_functions() {
        for order in [2, 4] {
            let n = 21;
            let f2p = build_f2p(order, n).unwrap();
            let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let c = f2p.matvec(&x);
            let rule = quad_rule();
            for k in 0..n - 1 {
                let exact = legendre_coefficients(|t| t, k as f64, k as f64 + 1.0, order, &rule);
                for m in 0..order {
                    assert!((c[k * order + m] - exact[m]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn linear_samples_survive_projection_round_trip() {
        // Piecewise linear data lives in every polynomial space, so the glue transfers are
        // exact; the return to the grid is exact at interior nodes.
        let order = 2;
        let c = TraceSide::uniform(order, 0.0, 1.0, 11).unwrap();
        let f = TraceSide::uniform(order, 0.0, 1.0, 16).unwrap();
        let gs = build_projection_set(order, &c, &f).unwrap();
        let y = c.coordinates();
        let u: Vec<f64> = y.iter().map(|v| 2.0 * v - 0.3).collect();
        let poly = gs.c.p_f2p.matvec(&u);
        let back = gs.c.p_g2p.matvec(&gs.c.p_p2g.matvec(&poly));
        assert!(poly.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-12));
        let nodal = gs.c.p_p2f.matvec(&back);
        for i in 1..y.len() - 1 {
            assert!((nodal[i] - u[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn composed_pair_matches_exact_l2_projection_for_order2() {
        // Independent oracle: piecewise-linear interpolants, exact L2 projection onto the
        // other side's piecewise-linear space on the nested grid, evaluated by quadrature.
        let order = 2;
        let nc = 11;
        let c = TraceSide::uniform(order, 0.0, 1.0, nc).unwrap();
        let f = TraceSide::uniform(order, 0.0, 1.0, 2 * nc - 1).unwrap();
        let gs = build_projection_set(order, &c, &f).unwrap();
        let pair = compose_interface(&gs);
        let yc = c.coordinates();
        let u: Vec<f64> = yc.iter().map(|y| (3.0 * y).sin()).collect();
        let v = pair.i_c2f.matvec(&u);
        // Oracle: P_f2p of order 2 interior cells is the linear interpolant, and f's cells are
        // halves of c's cells, so the fine-side polynomial equals the coarse interpolant.
        // P_p2f then returns H_f^{-1} ∫ φ_i (interp u) with φ_i the fine polynomial duals.
        let fine_poly: Vec<f64> = gs.f.p_g2p.matvec(&gs.c.p_p2g.matvec(&gs.c.p_f2p.matvec(&u)));
        let rule = quad_rule();
        let hf = 1.0 / (2 * nc - 2) as f64;
        for k in 0..2 * nc - 2 {
            let (a, b) = (k as f64 * hf, (k + 1) as f64 * hf);
            let coarse = k / 2;
            let lin = |x: f64| {
                let t = (x - yc[coarse]) / (yc[coarse + 1] - yc[coarse]);
                u[coarse] * (1.0 - t) + u[coarse + 1] * t
            };
            let exact = legendre_coefficients(lin, a, b, 2, &rule);
            assert!((fine_poly[2 * k] - exact[0]).abs() < 1e-13);
            assert!((fine_poly[2 * k + 1] - exact[1]).abs() < 1e-13);
        }
        let direct = gs.f.p_p2f.matvec(&fine_poly);
        assert!(direct.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn compatibility_and_xi_for_composed_pairs() {
        for order in [2, 4] {
            for nc in [26, 51] {
                let c = TraceSide::uniform(order, 0.0, 1.0, nc).unwrap();
                let f = TraceSide::uniform(order, 0.0, 1.0, 2 * nc - 1).unwrap();
                let gs = build_projection_set(order, &c, &f).unwrap();
                assert!(gs.compatibility_a() < 1e-12 && gs.compatibility_b() < 1e-12);
                let pair = compose_interface(&gs);
                pair.validate().unwrap();
                let xi = xi_diagnostics(&pair, false).unwrap();
                assert!(xi.k_c >= -1e-13 && xi.k_f >= -1e-13, "{order} {nc}: {xi:?}");
            }
        }
    }

    #[test]
    fn composed_pair_has_wider_stencil_than_interpolation() {
        let c = TraceSide::uniform(2, 0.0, 1.0, 26).unwrap();
        let f = TraceSide::uniform(2, 0.0, 1.0, 51).unwrap();
        let pc = compose_interface(&build_projection_set(2, &c, &f).unwrap());
        let pi = build_interpolation_pair(2, 26, 0.04).unwrap();
        let width = |m: &CsrMatrix| (0..m.nrows()).map(|i| m.row(i).0.len()).max().unwrap();
        assert!(width(&pc.i_c2f) > width(&pi.i_c2f));
        pi.validate().unwrap();
        pc.validate().unwrap();
    }

    #[test]
    fn conforming_composition_is_exact_on_polynomials() {
        for order in [2, 4] {
            let c = TraceSide::uniform(order, -1.0, 1.0, 31).unwrap();
            let gs = build_projection_set(order, &c, &c).unwrap();
            let pair = compose_interface(&gs);
            let ex = pair.exactness(order as u32 - 1);
            for &(k, a, b) in &ex.interior {
                assert!(a.max(b) < 1e-10, "order {order} degree {k}");
            }
        }
    }

    #[test]
    fn multi_segment_side_against_single_trace() {
        let order = 4;
        let left = TraceSide::uniform(order, -1.0, 1.0, 51).unwrap();
        let right = TraceSide::from_segments(
            order,
            vec![TraceSegment { y0: -1.0, h: 1.0 / 49.0, n: 50 }, TraceSegment { y0: 0.0, h: 1.0 / 24.0, n: 25 }],
        )
        .unwrap();
        let gs = build_projection_set(order, &left, &right).unwrap();
        let glue = build_glue_grid(&left.coordinates(), &right.coordinates()).unwrap();
        assert_eq!(gs.glue.points.len(), glue.points.len());
        let pair = compose_interface(&gs);
        assert!(pair.compatibility_residual() < 1e-12);
        assert!(pair.constant_residual() < 1e-12);
        let xi = xi_diagnostics(&pair, false).unwrap();
        assert!(xi.k_c >= -1e-13 && xi.k_f >= -1e-13, "{xi:?}");
    }
}
