//! Interface transfer operators: direct 1:2 interpolation pairs and glue-grid projections.

mod interpolation;
mod projection;

pub use interpolation::{build_interpolation_pair, interpolation_closure_size};
pub use projection::{
    build_f2p, build_glue_grid, build_projection_set, compose_interface, GlueGrid, GlueGridSet, ProjectionSide,
    TraceSegment, TraceSide,
};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, symmetric_eigenvalues};
use crate::sparse::{CsrMatrix, TripletBuilder};
use ndarray::Array2;
use std::fmt::Write as _;
use std::path::Path;

/// How a transfer pair was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferKind {
    Interpolation,
    ProjectionComposed,
}

impl TransferKind {
    fn tag(self) -> &'static str {
        match self {
            TransferKind::Interpolation => "interpolation",
            TransferKind::ProjectionComposed => "projection",
        }
    }
}

/// Coarse↔fine transfer pair with the trace norms of both sides.
#[derive(Clone, Debug)]
pub struct InterfaceOperatorPair {
    pub order: usize,
    pub kind: TransferKind,
    /// Coarse trace to fine trace, `n_f × n_c`.
    pub i_c2f: CsrMatrix,
    /// Fine trace to coarse trace, `n_c × n_f`.
    pub i_f2c: CsrMatrix,
    /// Diagonal trace norm on the coarse side.
    pub h_c: Vec<f64>,
    pub h_f: Vec<f64>,
    /// Trace coordinates, used for exactness checks.
    pub y_c: Vec<f64>,
    pub y_f: Vec<f64>,
}

/// Polynomial exactness of a pair, split into rows away from and near the trace ends.
#[derive(Clone, Debug)]
pub struct PairExactness {
    /// `(degree, max residual of I_c2f, max residual of I_f2c)` over central rows.
    pub interior: Vec<(u32, f64, f64)>,
    /// Same over all rows.
    pub all_rows: Vec<(u32, f64, f64)>,
}

impl InterfaceOperatorPair {
    pub fn n_c(&self) -> usize {
        self.h_c.len()
    }

    pub fn n_f(&self) -> usize {
        self.h_f.len()
    }

    /// `max |H_f I_c2f − (H_c I_f2c)ᵀ|` relative to `max |H_f I_c2f|`.
    pub fn compatibility_residual(&self) -> f64 {
        let a = self.i_c2f.scale_rows(&self.h_f);
        let b = self.i_f2c.scale_rows(&self.h_c).transpose();
        a.sub(&b).max_abs() / a.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Largest deviation from 1 when applying either operator to the constant vector.
    pub fn constant_residual(&self) -> f64 {
        let a = self.i_c2f.matvec(&vec![1.0; self.n_c()]);
        let b = self.i_f2c.matvec(&vec![1.0; self.n_f()]);
        a.iter().chain(&b).fold(0.0, |m, v| m.max((v - 1.0).abs()))
    }

    /// Monomial residuals in the normalized coordinate `(y − y_min) / L` for degrees up to `max_degree`.
    /// Central rows lie at least 12 of the widest spacings away from the trace ends and from
    /// segment junctions (repeated coordinates).
    pub fn exactness(&self, max_degree: u32) -> PairExactness {
        let lo = self.y_c[0].min(self.y_f[0]);
        let hi = self.y_c[self.n_c() - 1].max(self.y_f[self.n_f() - 1]);
        let len = hi - lo;
        let mut breaks = vec![0.0, 1.0];
        let mut hmax = 0.0f64;
        for y in [&self.y_c, &self.y_f] {
            for w in y.windows(2) {
                let d = (w[1] - w[0]) / len;
                if d < 1e-12 {
                    breaks.push((w[0] - lo) / len);
                }
                hmax = hmax.max(d);
            }
        }
        let margin = 12.0 * hmax;
        let is_central = |x: f64| breaks.iter().all(|b| (x - b).abs() >= margin);
        let t = |y: &[f64]| -> Vec<f64> { y.iter().map(|v| (v - lo) / len).collect() };
        let (tc, tf) = (t(&self.y_c), t(&self.y_f));
        let mut interior = Vec::new();
        let mut all_rows = Vec::new();
        for k in 0..=max_degree {
            let pc: Vec<f64> = tc.iter().map(|v| v.powi(k as i32)).collect();
            let pf: Vec<f64> = tf.iter().map(|v| v.powi(k as i32)).collect();
            let rf: Vec<f64> = self.i_c2f.matvec(&pc).iter().zip(&pf).map(|(a, b)| (a - b).abs()).collect();
            let rc: Vec<f64> = self.i_f2c.matvec(&pf).iter().zip(&pc).map(|(a, b)| (a - b).abs()).collect();
            let central = |tv: &[f64], r: &[f64]| {
                tv.iter().zip(r).filter(|(x, _)| is_central(**x)).fold(0.0f64, |m, (_, v)| m.max(*v))
            };
            let all = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(*v));
            interior.push((k, central(&tf, &rf), central(&tc, &rc)));
            all_rows.push((k, all(&rf), all(&rc)));
        }
        PairExactness { interior, all_rows }
    }

    /// Checks compatibility, constant preservation and polynomial exactness.
    pub fn validate(&self) -> Result<()> {
        if self.i_c2f.nrows() != self.n_f()
            || self.i_c2f.ncols() != self.n_c()
            || self.i_f2c.nrows() != self.n_c()
            || self.i_f2c.ncols() != self.n_f()
        {
            return Err(Error::SizeMismatch("transfer operator shapes disagree with trace norms".into()));
        }
        let compat = self.compatibility_residual();
        if compat > 1e-12 {
            return Err(Error::CompatibilityViolation(compat));
        }
        let cst = self.constant_residual();
        if cst > 1e-12 {
            return Err(Error::CoefficientValidationFailed { check: "constant preservation".into(), residual: cst });
        }
        let p = (self.order / 2) as u32;
        let ex = self.exactness(2 * p - 1);
        for &(k, a, b) in &ex.interior {
            if a.max(b) > 1e-9 {
                return Err(Error::CoefficientValidationFailed {
                    check: format!("interior exactness on degree {k}"),
                    residual: a.max(b),
                });
            }
        }
        for &(k, a, b) in ex.all_rows.iter().take(p as usize) {
            if a.max(b) > 1e-9 {
                return Err(Error::CoefficientValidationFailed {
                    check: format!("edge exactness on degree {k}"),
                    residual: a.max(b),
                });
            }
        }
        Ok(())
    }

    /// Serializes in the interface-operator text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ =
            writeln!(out, "iface kind={} order={} nc={} nf={}", self.kind.tag(), self.order, self.n_c(), self.n_f());
        let dense = |out: &mut String, m: &CsrMatrix| {
            for i in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m.get(i, j))).collect();
                let _ = writeln!(out, "{}", row.join(" "));
            }
        };
        out.push_str("I_C2F\n");
        dense(&mut out, &self.i_c2f);
        out.push_str("I_F2C\n");
        dense(&mut out, &self.i_f2c);
        for (label, v) in [("H_C", &self.h_c), ("H_F", &self.h_f)] {
            let _ = writeln!(out, "{label}");
            let row: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parses the interface-operator text format and validates everything except Ξ ≥ 0.
    ///
    /// Trace coordinates are reconstructed as uniform grids from the interior norm weights.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty file".into() })?;
        let mut tok = header.split_whitespace();
        if tok.next() != Some("iface") {
            return Err(Error::Parse { line: hl, msg: "header must start with `iface`".into() });
        }
        let (mut kind, mut order, mut nc, mut nf) = (None, None, None, None);
        for t in tok {
            let (k, v) =
                t.split_once('=').ok_or_else(|| Error::Parse { line: hl, msg: format!("bad header field `{t}`") })?;
            let num = || v.parse::<usize>().map_err(|_| Error::Parse { line: hl, msg: format!("bad value in `{t}`") });
            match k {
                "kind" => {
                    kind = Some(match v {
                        "interpolation" => TransferKind::Interpolation,
                        "projection" => TransferKind::ProjectionComposed,
                        _ => return Err(Error::Parse { line: hl, msg: format!("unknown kind `{v}`") }),
                    })
                }
                "order" => order = Some(num()?),
                "nc" => nc = Some(num()?),
                "nf" => nf = Some(num()?),
                _ => return Err(Error::Parse { line: hl, msg: format!("unknown header field `{k}`") }),
            }
        }
        let missing = |f: &str| Error::Parse { line: hl, msg: format!("header lacks `{f}`") };
        let kind = kind.ok_or_else(|| missing("kind"))?;
        let order = order.ok_or_else(|| missing("order"))?;
        let nc = nc.ok_or_else(|| missing("nc"))?;
        let nf = nf.ok_or_else(|| missing("nf"))?;
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
        let block = |name: &str, rows: usize, cols: usize| -> Result<Vec<Vec<f64>>> {
            let b = blocks
                .iter()
                .find(|b| b.0 == name)
                .ok_or_else(|| Error::Parse { line: hl, msg: format!("missing block `{name}`") })?;
            if b.2.len() != rows || b.2.iter().any(|r| r.len() != cols) {
                return Err(Error::Parse { line: b.1, msg: format!("block `{name}` is not {rows}x{cols}") });
            }
            Ok(b.2.clone())
        };
        let sparse = |rows: Vec<Vec<f64>>, ncols: usize| {
            let mut t = TripletBuilder::new(rows.len(), ncols);
            for (i, r) in rows.iter().enumerate() {
                for (j, &v) in r.iter().enumerate() {
                    t.push(i, j, v);
                }
            }
            t.build()
        };
        let i_c2f = sparse(block("I_C2F", nf, nc)?, nc);
        let i_f2c = sparse(block("I_F2C", nc, nf)?, nf);
        let h_c = block("H_C", 1, nc)?.remove(0);
        let h_f = block("H_F", 1, nf)?.remove(0);
        let coords = |h: &[f64]| {
            let dh = median(h);
            (0..h.len()).map(|i| i as f64 * dh).collect::<Vec<_>>()
        };
        let pair = Self { order, kind, y_c: coords(&h_c), y_f: coords(&h_f), i_c2f, i_f2c, h_c, h_f };
        pair.validate()?;
        Ok(pair)
    }
}

/// Loads and validates an interface-operator file.
pub fn load_interface_operators(path: impl AsRef<Path>) -> Result<InterfaceOperatorPair> {
    InterfaceOperatorPair::parse(&std::fs::read_to_string(path)?)
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s[s.len() / 2]
}

/// Smallest eigenvalues of Ξ_L and Ξ_R scaled by the trace spacing.
#[derive(Clone, Debug)]
pub struct XiDiagnostics {
    pub k_c: f64,
    pub k_f: f64,
    /// Full ascending spectra of Ξ_L and Ξ_R when requested.
    pub spectra: Option<(Vec<f64>, Vec<f64>)>,
}

/// Ξ_L = H_c(I − I_f2c I_c2f) as a dense matrix.
pub fn xi_left(pair: &InterfaceOperatorPair) -> Array2<f64> {
    let n = pair.n_c();
    let prod = pair.i_f2c.matmul(&pair.i_c2f);
    CsrMatrix::identity(n).sub(&prod).scale_rows(&pair.h_c).to_dense()
}

/// Ξ_R = H_f(I − I_c2f I_f2c) as a dense matrix.
pub fn xi_right(pair: &InterfaceOperatorPair) -> Array2<f64> {
    let n = pair.n_f();
    let prod = pair.i_c2f.matmul(&pair.i_f2c);
    CsrMatrix::identity(n).sub(&prod).scale_rows(&pair.h_f).to_dense()
}

/// Computes `k_c = λ_min(Ξ_L)/h_c` and `k_f = λ_min(Ξ_R)/h_f`.
pub fn xi_diagnostics(pair: &InterfaceOperatorPair, keep_spectra: bool) -> Result<XiDiagnostics> {
    let mut out = Vec::new();
    for (x, h) in [(xi_left(pair), &pair.h_c), (xi_right(pair), &pair.h_f)] {
        let scale = h.iter().fold(0.0f64, |m, v| m.max(*v));
        let asym = asymmetry(&x) / scale;
        if asym > 1e-12 {
            return Err(Error::SymmetryViolation(asym));
        }
        let sym = (&x + &x.t()) * 0.5;
        let ev = symmetric_eigenvalues(&sym)?;
        out.push((ev[0] / median(h), ev));
    }
    let (r, l) = (out.pop().unwrap(), out.pop().unwrap());
    Ok(XiDiagnostics { k_c: l.0, k_f: r.0, spectra: keep_spectra.then_some((l.1, r.1)) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip_preserves_pair() {
        let pair = build_interpolation_pair(4, 26, 0.04).unwrap();
        let back = InterfaceOperatorPair::parse(&pair.to_text()).unwrap();
        assert_eq!(back.kind, TransferKind::Interpolation);
        let d = back.i_c2f.sub(&pair.i_c2f).max_abs().max(back.i_f2c.sub(&pair.i_f2c).max_abs());
        assert!(d < 1e-12, "{d}");
        let (a, b) = (xi_diagnostics(&pair, false).unwrap(), xi_diagnostics(&back, false).unwrap());
        assert!((a.k_c - b.k_c).abs() < 1e-12 && (a.k_f - b.k_f).abs() < 1e-12);
    }

    #[test]
    fn incompatible_file_is_rejected() {
        let mut pair = build_interpolation_pair(4, 26, 0.04).unwrap();
        pair.i_f2c = pair.i_f2c.add(&CsrMatrix::from_triplets(26, 51, vec![(10, 20, 1e-6)]));
        let err = InterfaceOperatorPair::parse(&pair.to_text()).unwrap_err();
        assert!(matches!(err, Error::CompatibilityViolation(r) if r > 1e-8), "{err}");
    }

    #[test]
    fn malformed_header_is_a_parse_error() {
        let text = build_interpolation_pair(2, 11, 0.1).unwrap().to_text().replace("nc=11", "nc=x");
        assert!(matches!(InterfaceOperatorPair::parse(&text), Err(Error::Parse { line: 1, .. })));
    }
}
