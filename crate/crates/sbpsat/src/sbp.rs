//! Diagonal-norm summation-by-parts operators on equidistant grids.
//!
//! Orders 2 and 4 are embedded. Orders 6, 8 and 10 are read from plain-text coefficient
//! files (see [`SbpCoefficients::parse`]) and validated before use.

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::sparse::{CsrMatrix, TripletBuilder};
use ndarray::Array2;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Borrowing constants α₂ₚ for orders 2, 4, 6, 8, 10.
pub const ALPHA: [(usize, f64); 5] =
    [(2, 0.4), (4, 0.2508560249), (6, 0.1878715026), (8, 0.0015782259), (10, 0.0351202265)];

/// Environment variable overriding the coefficient-file directory.
pub const COEFF_DIR_ENV: &str = "SBPSAT_COEFF_DIR";

/// Directory searched for coefficient files.
pub fn coefficient_dir() -> PathBuf {
    match std::env::var_os(COEFF_DIR_ENV) {
        Some(p) => PathBuf::from(p),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("coefficients"),
    }
}

/// The tabulated α for `order`, if the order is supported.
pub fn table_alpha(order: usize) -> Option<f64> {
    ALPHA.iter().find(|(o, _)| *o == order).map(|(_, a)| *a)
}

/// Equidistant grid `x_i = x0 + i h`, `i = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridLine1D {
    pub n: usize,
    pub h: f64,
    pub x0: f64,
}

impl GridLine1D {
    pub fn new(n: usize, h: f64, x0: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooSmall { n, min: 2 });
        }
        if !(h > 0.0) {
            return Err(Error::NonpositiveInput(format!("grid spacing h = {h}")));
        }
        Ok(Self { n, h, x0 })
    }

    /// `n` points spanning `[a, b]`.
    pub fn spanning(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooSmall { n, min: 2 });
        }
        Self::new(n, (b - a) / (n - 1) as f64, a)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }
}

/// Grid-independent boundary closures and interior stencils of an SBP operator family,
/// all for unit spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct SbpCoefficients {
    pub order: usize,
    pub alpha: f64,
    /// Norm weights of the first `closure_rows` points.
    pub h: Vec<f64>,
    /// First-derivative closure rows (left boundary), padded with zeros.
    pub d1: Vec<Vec<f64>>,
    /// Centered first-derivative interior stencil (odd length).
    pub d1_interior: Vec<f64>,
    pub d2: Vec<Vec<f64>>,
    pub d2_interior: Vec<f64>,
    /// One-sided boundary derivative at the left boundary.
    pub s: Vec<f64>,
}

impl SbpCoefficients {
    /// Coefficients for `order`: embedded for 2 and 4, loaded from
    /// `<coefficient_dir>/sbp_order<order>.txt` otherwise.
    pub fn for_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Self::order2()),
            4 => Ok(Self::order4()),
            6 | 8 | 10 => Self::load(coefficient_dir().join(format!("sbp_order{order}.txt"))),
            _ => Err(Error::UnsupportedOrder(order)),
        }
    }

    /// Whether coefficients for `order` can be obtained without error.
    pub fn available(order: usize) -> bool {
        matches!(order, 2 | 4)
            || (matches!(order, 6 | 8 | 10) && coefficient_dir().join(format!("sbp_order{order}.txt")).is_file())
    }

    pub fn order2() -> Self {
        Self {
            order: 2,
            alpha: 0.4,
            h: vec![0.5],
            d1: vec![vec![-1.0, 1.0]],
            d1_interior: vec![-0.5, 0.0, 0.5],
            d2: vec![vec![1.0, -2.0, 1.0]],
            d2_interior: vec![1.0, -2.0, 1.0],
            s: vec![-1.5, 2.0, -0.5],
        }
    }

    pub fn order4() -> Self {
        Self {
            order: 4,
            alpha: 0.2508560249,
            h: vec![17.0 / 48.0, 59.0 / 48.0, 43.0 / 48.0, 49.0 / 48.0],
            d1: vec![
                vec![-24.0 / 17.0, 59.0 / 34.0, -4.0 / 17.0, -3.0 / 34.0, 0.0, 0.0],
                vec![-0.5, 0.0, 0.5, 0.0, 0.0, 0.0],
                vec![4.0 / 43.0, -59.0 / 86.0, 0.0, 59.0 / 86.0, -4.0 / 43.0, 0.0],
                vec![3.0 / 98.0, 0.0, -59.0 / 98.0, 0.0, 32.0 / 49.0, -4.0 / 49.0],
            ],
            d1_interior: vec![1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
            d2: vec![
                vec![2.0, -5.0, 4.0, -1.0, 0.0, 0.0],
                vec![1.0, -2.0, 1.0, 0.0, 0.0, 0.0],
                vec![-4.0 / 43.0, 59.0 / 43.0, -110.0 / 43.0, 59.0 / 43.0, -4.0 / 43.0, 0.0],
                vec![-1.0 / 49.0, 0.0, 59.0 / 49.0, -118.0 / 49.0, 64.0 / 49.0, -4.0 / 49.0],
            ],
            d2_interior: vec![-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0],
            s: vec![-11.0 / 6.0, 3.0, -1.5, 1.0 / 3.0],
        }
    }

    pub fn closure_rows(&self) -> usize {
        self.h.len()
    }

    /// Smallest grid for which the two boundary closures stay apart.
    pub fn min_points(&self) -> usize {
        let width = self.d1_interior.len().max(self.d2_interior.len());
        2 * self.closure_rows() + width
    }

    /// Norm weights for `n` points and unit spacing.
    pub fn norm_weights(&self, n: usize) -> Result<Vec<f64>> {
        let r = self.closure_rows();
        if n < 2 * r {
            return Err(Error::GridTooSmall { n, min: 2 * r });
        }
        let mut w = vec![1.0; n];
        for (i, &hi) in self.h.iter().enumerate() {
            w[i] = hi;
            w[n - 1 - i] = hi;
        }
        Ok(w)
    }

    /// Parses the plain-text coefficient format and validates the result.
    ///
    /// ```text
    /// sbp order=4 closure_rows=4 alpha=0.2508560249
    /// H
    /// <closure_rows weights>
    /// D1
    /// <closure_rows rows>
    /// D1_interior
    /// <stencil>
    /// D2
    /// <closure_rows rows>
    /// D2_interior
    /// <stencil>
    /// S
    /// <boundary row>
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty file".into() })?;
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("sbp") {
            return Err(Error::Parse { line: hl, msg: "header must start with `sbp`".into() });
        }
        let (mut order, mut rows, mut alpha) = (None, None, None);
        for t in tokens {
            let (k, v) =
                t.split_once('=').ok_or_else(|| Error::Parse { line: hl, msg: format!("bad header field `{t}`") })?;
            let bad = |_| Error::Parse { line: hl, msg: format!("bad value in `{t}`") };
            match k {
                "order" => order = Some(v.parse::<usize>().map_err(bad)?),
                "closure_rows" => rows = Some(v.parse::<usize>().map_err(bad)?),
                "alpha" => {
                    alpha = Some(
                        v.parse::<f64>().map_err(|_| Error::Parse { line: hl, msg: format!("bad value in `{t}`") })?,
                    )
                }
                _ => return Err(Error::Parse { line: hl, msg: format!("unknown header field `{k}`") }),
            }
        }
        let missing = |f: &str| Error::Parse { line: hl, msg: format!("header lacks `{f}`") };
        let order = order.ok_or_else(|| missing("order"))?;
        let rows = rows.ok_or_else(|| missing("closure_rows"))?;
        let alpha = alpha.ok_or_else(|| missing("alpha"))?;

        let mut blocks: Vec<(String, usize, Vec<Vec<f64>>)> = Vec::new();
        for (ln, l) in lines {
            if l.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                blocks.push((l.to_string(), ln, Vec::new()));
                continue;
            }
            let row = l
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| Error::Parse { line: ln, msg: format!("bad number `{v}`") }))
                .collect::<Result<Vec<_>>>()?;
            match blocks.last_mut() {
                Some(b) => b.2.push(row),
                None => return Err(Error::Parse { line: ln, msg: "data before first block label".into() }),
            }
        }
        let take = |name: &str| -> Result<Vec<Vec<f64>>> {
            blocks
                .iter()
                .find(|b| b.0 == name)
                .map(|b| b.2.clone())
                .ok_or_else(|| Error::Parse { line: hl, msg: format!("missing block `{name}`") })
        };
        let single = |name: &str| -> Result<Vec<f64>> {
            let b = take(name)?;
            Ok(b.into_iter().flatten().collect())
        };
        let pad = |mut m: Vec<Vec<f64>>, name: &str| -> Result<Vec<Vec<f64>>> {
            if m.len() != rows {
                return Err(Error::Parse {
                    line: hl,
                    msg: format!("block `{name}` has {} rows, expected {rows}", m.len()),
                });
            }
            let w = m.iter().map(Vec::len).max().unwrap_or(0);
            m.iter_mut().for_each(|r| r.resize(w, 0.0));
            Ok(m)
        };
        let h = single("H")?;
        if h.len() != rows {
            return Err(Error::Parse { line: hl, msg: format!("block `H` has {} entries, expected {rows}", h.len()) });
        }
        let coeffs = Self {
            order,
            alpha,
            h,
            d1: pad(take("D1")?, "D1")?,
            d1_interior: single("D1_interior")?,
            d2: pad(take("D2")?, "D2")?,
            d2_interior: single("D2_interior")?,
            s: single("S")?,
        };
        coeffs.validate()?;
        Ok(coeffs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes in the format accepted by [`SbpCoefficients::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, r: &[f64]| {
            let s: Vec<String> = r.iter().map(|v| format!("{v:.17e}")).collect();
            let _ = writeln!(out, "{}", s.join(" "));
        };
        let _ = writeln!(out, "sbp order={} closure_rows={} alpha={}", self.order, self.closure_rows(), self.alpha);
        out.push_str("H\n");
        row(&mut out, &self.h);
        out.push_str("D1\n");
        self.d1.iter().for_each(|r| row(&mut out, r));
        out.push_str("D1_interior\n");
        row(&mut out, &self.d1_interior);
        out.push_str("D2\n");
        self.d2.iter().for_each(|r| row(&mut out, r));
        out.push_str("D2_interior\n");
        row(&mut out, &self.d2_interior);
        out.push_str("S\n");
        row(&mut out, &self.s);
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Checks every operator invariant on a reference grid; reports the first violation.
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.order, 2 | 4 | 6 | 8 | 10) {
            return Err(Error::UnsupportedOrder(self.order));
        }
        let fail = |check: &str, residual: f64| Error::CoefficientValidationFailed { check: check.into(), residual };
        if self.h.iter().any(|&w| !(w > 0.0)) {
            return Err(fail("norm weights positive", self.h.iter().cloned().fold(f64::INFINITY, f64::min)));
        }
        if self.d1_interior.len().is_multiple_of(2) || self.d2_interior.len().is_multiple_of(2) {
            return Err(fail("interior stencils have odd length", f64::NAN));
        }
        let n = 2 * self.min_points() + 1;
        let grid = GridLine1D::new(n, 1.0 / (n - 1) as f64, 0.0)?;
        let ops = SbpOperatorSet::from_coefficients(self.clone(), grid)?;
        let report = verify_sbp_identities(&ops);
        if report.q_plus_qt_minus_b > 1e-12 {
            return Err(fail("Q + Q^T = B", report.q_plus_qt_minus_b));
        }
        if report.m_symmetry * grid.h > 1e-12 {
            return Err(fail("M symmetric", report.m_symmetry * grid.h));
        }
        if let Some(e) = report.exactness.iter().find(|e| e.residual > 1e-9) {
            return Err(fail(&format!("{} exact on degree {} ({:?})", e.operator, e.degree, e.region), e.residual));
        }
        let lam = verify_borrowing(&ops)?;
        if lam < -1e-10 {
            return Err(fail("borrowing remainder positive semidefinite", lam));
        }
        Ok(())
    }
}

/// One-dimensional SBP operator bundle on a grid line.
#[derive(Clone, Debug)]
pub struct SbpOperatorSet {
    pub order: usize,
    pub grid: GridLine1D,
    pub alpha: f64,
    /// Diagonal of H.
    pub h: Vec<f64>,
    pub d1: CsrMatrix,
    pub q: CsrMatrix,
    pub d2: CsrMatrix,
    pub m: CsrMatrix,
    pub s: CsrMatrix,
    pub coefficients: SbpCoefficients,
}

/// Builds the order-`order` operator set on `grid`.
pub fn build_sbp(order: usize, grid: GridLine1D) -> Result<SbpOperatorSet> {
    SbpOperatorSet::from_coefficients(SbpCoefficients::for_order(order)?, grid)
}

fn banded(n: usize, closure: &[Vec<f64>], interior: &[f64], mirror_sign: f64, scale: f64) -> CsrMatrix {
    let r = closure.len();
    let half = interior.len() / 2;
    let mut b = TripletBuilder::new(n, n);
    for (i, row) in closure.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            b.push(i, j, c * scale);
            b.push(n - 1 - i, n - 1 - j, mirror_sign * c * scale);
        }
    }
    for i in r..n - r {
        for (k, &c) in interior.iter().enumerate() {
            b.push(i, i + k - half, c * scale);
        }
    }
    b.build()
}

impl SbpOperatorSet {
    pub fn from_coefficients(c: SbpCoefficients, grid: GridLine1D) -> Result<Self> {
        let n = grid.n;
        let min = c.min_points();
        if n < min {
            return Err(Error::GridTooSmall { n, min });
        }
        let h = grid.h;
        let hd: Vec<f64> = c.norm_weights(n)?.into_iter().map(|w| w * h).collect();
        let d1 = banded(n, &c.d1, &c.d1_interior, -1.0, 1.0 / h);
        let d2 = banded(n, &c.d2, &c.d2_interior, 1.0, 1.0 / (h * h));
        let mut sb = TripletBuilder::new(n, n);
        for (j, &v) in c.s.iter().enumerate() {
            sb.push(0, j, v / h);
            sb.push(n - 1, n - 1 - j, -v / h);
        }
        for i in 1..n - 1 {
            sb.push(i, i, 1.0);
        }
        let s = sb.build();
        let q = d1.scale_rows(&hd);
        let mut bs = TripletBuilder::new(n, n);
        for (j, &v) in c.s.iter().enumerate() {
            bs.push(0, j, -v / h);
            bs.push(n - 1, n - 1 - j, -v / h);
        }
        let m = bs.build().sub(&d2.scale_rows(&hd));
        Ok(Self { order: c.order, grid, alpha: c.alpha, h: hd, d1, q, d2, m, s, coefficients: c })
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    /// Diagonal of B = diag(−1, 0, …, 0, 1).
    pub fn b_diag(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.n()];
        b[0] = -1.0;
        b[self.n() - 1] = 1.0;
        b
    }

    /// Row of S at the left (`first = true`) or right boundary as `(column, value)` pairs.
    pub fn boundary_derivative(&self, first: bool) -> Vec<(usize, f64)> {
        let (idx, val) = self.s.row(if first { 0 } else { self.n() - 1 });
        idx.iter().copied().zip(val.iter().copied()).collect()
    }

    /// Number of rows in each boundary closure.
    pub fn closure_rows(&self) -> usize {
        self.coefficients.closure_rows()
    }
}

/// Region of rows an exactness residual refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    Interior,
    Boundary,
}

/// Monomial-exactness residual of one operator on one region.
#[derive(Clone, Debug)]
pub struct ExactnessResidual {
    pub operator: &'static str,
    pub region: Region,
    pub degree: u32,
    pub residual: f64,
}

/// Residuals reported by [`verify_sbp_identities`].
#[derive(Clone, Debug)]
pub struct SbpReport {
    /// `max |Q + Qᵀ − B|`.
    pub q_plus_qt_minus_b: f64,
    /// `max |M − Mᵀ|`.
    pub m_symmetry: f64,
    pub exactness: Vec<ExactnessResidual>,
}

impl SbpReport {
    pub fn max_exactness(&self) -> f64 {
        self.exactness.iter().fold(0.0, |m, e| m.max(e.residual))
    }
}

/// Checks the SBP identities and monomial exactness of `ops`.
///
/// Interior rows of D1 are tested up to degree 2p and D2 up to degree 2p+1; boundary
/// closure rows up to degree p (D1) and p+1 (D2 and S).
pub fn verify_sbp_identities(ops: &SbpOperatorSet) -> SbpReport {
    let n = ops.n();
    let mut qq = ops.q.add(&ops.q.transpose());
    qq = qq.add(&CsrMatrix::from_triplets(n, n, vec![(0, 0, 1.0), (n - 1, n - 1, -1.0)]));
    let p = (ops.order / 2) as u32;
    let r = ops.closure_rows();
    let x = ops.grid.points();
    let mono = |k: u32, d: u32| -> Vec<f64> {
        x.iter()
            .map(|&xi| {
                if d > k {
                    0.0
                } else {
                    let c: f64 = ((k - d + 1)..=k).map(|v| v as f64).product();
                    c * xi.powi((k - d) as i32)
                }
            })
            .collect()
    };
    let mut exactness = Vec::new();
    let mut check = |name: &'static str,
                     op: &CsrMatrix,
                     d: u32,
                     deg_int: u32,
                     deg_bnd: u32,
                     rows: &dyn Fn(Region) -> Vec<usize>| {
        for (region, maxdeg) in [(Region::Interior, deg_int), (Region::Boundary, deg_bnd)] {
            let rs = rows(region);
            for k in 0..=maxdeg {
                let ax = op.matvec(&mono(k, 0));
                let ex = mono(k, d);
                let res = rs.iter().fold(0.0f64, |m, &i| m.max((ax[i] - ex[i]).abs()));
                exactness.push(ExactnessResidual { operator: name, region, degree: k, residual: res });
            }
        }
    };
    let closure_rows = |reg: Region| -> Vec<usize> {
        match reg {
            Region::Interior => (r..n - r).collect(),
            Region::Boundary => (0..r).chain(n - r..n).collect(),
        }
    };
    check("D1", &ops.d1, 1, 2 * p, p, &closure_rows);
    check("D2", &ops.d2, 2, 2 * p + 1, p + 1, &closure_rows);
    let s_rows = |reg: Region| -> Vec<usize> {
        match reg {
            Region::Interior => Vec::new(),
            Region::Boundary => vec![0, n - 1],
        }
    };
    check("S", &ops.s, 1, 0, p + 1, &s_rows);
    exactness.retain(|e| !(e.operator == "S" && e.region == Region::Interior));
    SbpReport { q_plus_qt_minus_b: qq.max_abs(), m_symmetry: ops.m.asymmetry(), exactness }
}

/// Smallest eigenvalue of `M − h α (BS)ᵀ(BS)`, using the set's own α.
pub fn verify_borrowing(ops: &SbpOperatorSet) -> Result<f64> {
    borrowing_remainder_min(ops, ops.alpha)
}

/// Smallest eigenvalue of `M − h α (BS)ᵀ(BS)` for an arbitrary α.
pub fn borrowing_remainder_min(ops: &SbpOperatorSet, alpha: f64) -> Result<f64> {
    let n = ops.n();
    let mut r: Array2<f64> = ops.m.to_dense();
    let b = ops.b_diag();
    let rows = [0, n - 1];
    let bs: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| {
            let mut v = vec![0.0; n];
            for (j, s) in ops.s.row(i).0.iter().zip(ops.s.row(i).1) {
                v[*j] = b[i] * s;
            }
            v
        })
        .collect();
    let c = ops.grid.h * alpha;
    for v in &bs {
        for i in 0..n {
            if v[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                r[[i, j]] -= c * v[i] * v[j];
            }
        }
    }
    let sym = (&r + &r.t()) * 0.5;
    Ok(symmetric_eigenvalues(&sym)?[0])
}

/// `1ᵀ H f`.
pub fn quadrature(ops: &SbpOperatorSet, samples: &[f64]) -> Result<f64> {
    if samples.len() != ops.n() {
        return Err(Error::LengthMismatch { expected: ops.n(), got: samples.len() });
    }
    Ok(ops.h.iter().zip(samples).map(|(w, f)| w * f).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> GridLine1D {
        GridLine1D::spanning(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn order2_small_grid_matches_hand_solution() {
        let ops = build_sbp(2, unit(5)).unwrap();
        let h = 0.25;
        let expected_h = [0.5, 1.0, 1.0, 1.0, 0.5].map(|w| w * h);
        for (a, b) in ops.h.iter().zip(expected_h) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(ops.d1.get(2, 1), -0.5 / h);
        assert_eq!(ops.d1.get(2, 3), 0.5 / h);
        assert_eq!((ops.d1.get(0, 0), ops.d1.get(0, 1)), (-1.0 / h, 1.0 / h));
        assert_eq!((ops.d1.get(4, 3), ops.d1.get(4, 4)), (-1.0 / h, 1.0 / h));
        assert!(verify_sbp_identities(&ops).q_plus_qt_minus_b < 1e-12);
    }

    #[test]
    fn constants_are_annihilated() {
        for order in [2, 4] {
            let ops = build_sbp(order, unit(31)).unwrap();
            let one = vec![3.0; 31];
            assert!(ops.d1.matvec(&one).iter().all(|v| v.abs() < 1e-10));
            assert!(ops.d2.matvec(&one).iter().all(|v| v.abs() < 1e-8));
        }
    }

    #[test]
    fn grid_too_small_is_rejected() {
        assert!(matches!(build_sbp(4, unit(12)), Err(Error::GridTooSmall { n: 12, min: 13 })));
        assert!(build_sbp(4, unit(13)).is_ok());
        assert!(matches!(build_sbp(3, unit(13)), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn identities_hold_for_embedded_orders() {
        for order in [2, 4] {
            let ops = build_sbp(order, unit(101)).unwrap();
            let rep = verify_sbp_identities(&ops);
            assert!(rep.q_plus_qt_minus_b < 1e-12, "{order}: {}", rep.q_plus_qt_minus_b);
            assert!(rep.m_symmetry * ops.grid.h < 1e-12);
            assert!(rep.max_exactness() < 1e-8, "{order}: {:?}", rep.exactness);
        }
    }

    #[test]
    fn degree4_interior_exactness_order4() {
        let ops = build_sbp(4, unit(101)).unwrap();
        let rep = verify_sbp_identities(&ops);
        let e =
            rep.exactness.iter().find(|e| e.operator == "D1" && e.region == Region::Interior && e.degree == 4).unwrap();
        assert!(e.residual <= 1e-10, "{}", e.residual);
    }

    #[test]
    fn perturbed_interior_coefficient_shows_in_degree1_residual() {
        let grid = GridLine1D::new(21, 0.05, 1.0).unwrap();
        let mut ops = build_sbp(2, grid).unwrap();
        let (i, j) = (10, 11);
        let delta = 1e-3 / grid.h;
        ops.d1 = ops.d1.add(&CsrMatrix::from_triplets(21, 21, vec![(i, j, delta)]));
        let rep = verify_sbp_identities(&ops);
        let e =
            rep.exactness.iter().find(|e| e.operator == "D1" && e.region == Region::Interior && e.degree == 1).unwrap();
        // Applying the perturbed row to x adds delta * x_j.
        let expected = delta * grid.point(j);
        assert!((e.residual - expected).abs() < 1e-9 * expected, "{} vs {expected}", e.residual);
    }

    #[test]
    fn borrowing_with_tabulated_alpha() {
        for order in [2, 4] {
            let ops = build_sbp(order, unit(41)).unwrap();
            assert_eq!(ops.alpha, table_alpha(order).unwrap());
            assert!(verify_borrowing(&ops).unwrap() >= -1e-12);
        }
        let ops = build_sbp(2, unit(41)).unwrap();
        assert!(borrowing_remainder_min(&ops, 0.8).unwrap() < 0.0);
    }

    #[test]
    fn tabulated_alpha_is_near_the_largest_admissible() {
        // Bisection on the PSD boundary; the tabulated constants sit just below it.
        for order in [2, 4] {
            let ops = build_sbp(order, unit(41)).unwrap();
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if borrowing_remainder_min(&ops, mid).unwrap() >= -1e-12 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let a = table_alpha(order).unwrap();
            assert!(lo >= a && lo - a < 1e-8, "order {order}: max alpha {lo}");
        }
    }

    #[test]
    fn quadrature_examples() {
        let ops = build_sbp(4, unit(51)).unwrap();
        assert!((quadrature(&ops, &vec![1.0; 51]).unwrap() - 1.0).abs() < 1e-14);
        let x = ops.grid.points();
        let f: Vec<f64> = x.iter().map(|v| (std::f64::consts::PI * v).sin()).collect();
        let q = quadrature(&ops, &f).unwrap();
        assert!((q - 2.0 / std::f64::consts::PI).abs() < 1e-6);
        let ops2 = build_sbp(2, unit(11)).unwrap();
        assert!((quadrature(&ops2, &ops2.grid.points()).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(quadrature(&ops2, &[1.0; 3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn coefficients_scale_with_h_only() {
        for order in [2, 4] {
            let a = build_sbp(order, unit(21)).unwrap();
            let b = build_sbp(order, unit(41)).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    let ca = a.d1.get(i, j) * a.grid.h;
                    let cb = b.d1.get(i, j) * b.grid.h;
                    assert!((ca - cb).abs() < 1e-13);
                    assert!((a.h[i] / a.grid.h - b.h[i] / b.grid.h).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn coefficient_file_round_trip() {
        for c in [SbpCoefficients::order2(), SbpCoefficients::order4()] {
            let back = SbpCoefficients::parse(&c.to_text()).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn tampered_coefficient_file_is_rejected() {
        let mut c = SbpCoefficients::order4();
        c.d1[0][1] += 1e-6;
        let err = SbpCoefficients::parse(&c.to_text()).unwrap_err();
        assert!(matches!(err, Error::CoefficientValidationFailed { .. }), "{err}");
        let text = SbpCoefficients::order4().to_text().replace("D2_interior", "D3");
        assert!(matches!(SbpCoefficients::parse(&text), Err(Error::Parse { .. })));
    }
}
