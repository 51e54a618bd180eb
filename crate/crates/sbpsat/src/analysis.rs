//! Energy, spectra, error norms and convergence rates.

use crate::discretization::SemidiscreteSystem;
use crate::error::{Error, Result};
use crate::linalg::{c64, general_eigenvalues};
use crate::mesh::Side;
use serde::Serialize;
use std::fmt::Write as _;

fn dot_h(a: &[f64], h: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(h).zip(b).map(|((x, w), y)| x * w * y).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discrete energy `z_tᵀ H z_t − zᵀ H Q z` split by contribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub e: f64,
    pub kinetic: f64,
    /// `−zᵀ H (Q_volume + Q_boundary) z`.
    pub potential: f64,
    /// `−zᵀ H Q_interface z`.
    pub interface: f64,
}

pub fn discrete_energy(system: &SemidiscreteSystem, z: &[f64], z_t: &[f64], t: f64) -> Result<EnergySample> {
    let n = system.len();
    if z.len() != n || z_t.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: z.len().min(z_t.len()) });
    }
    let kinetic = dot_h(z_t, &system.h, z_t);
    let potential = -dot_h(z, &system.h, &system.q_volume.add(&system.q_boundary).matvec(z));
    let interface = -dot_h(z, &system.h, &system.q_interface.matvec(z));
    Ok(EnergySample { t, e: kinetic + potential + interface, kinetic, potential, interface })
}

/// The interface energy of a two-block system written out term by term.
#[derive(Clone, Debug, Serialize)]
pub struct TwoBlockEnergyTerms {
    pub terms: Vec<(&'static str, f64)>,
    /// `y`-direction volume terms, the outer ends in `x` and the Dirichlet penalties.
    pub remainder: f64,
}

impl TwoBlockEnergyTerms {
    pub fn total(&self) -> f64 {
        self.terms.iter().map(|t| t.1).sum::<f64>() + self.remainder
    }
}

/// Evaluates the energy of a two-block system from the one-dimensional operators:
/// kinetic parts, `M_x ⊗ H_y` parts, interface boundary terms, penalties and cross terms.
/// The block with the interface on its east side plays the left role.
pub fn two_block_energy_terms(
    system: &SemidiscreteSystem,
    u: &[f64],
    v: &[f64],
    u_t: &[f64],
    v_t: &[f64],
) -> Result<TwoBlockEnergyTerms> {
    if system.blocks.len() != 2 || system.interfaces.len() != 1 {
        return Err(Error::SizeMismatch("expected two blocks and one interface".into()));
    }
    let rec = &system.interfaces[0];
    let (l, r) = match (rec.sides[0], rec.sides[1]) {
        ((a, Side::East), (b, Side::West)) => (a, b),
        ((a, Side::West), (b, Side::East)) => (b, a),
        _ => return Err(Error::SizeMismatch("interface must be normal to x".into())),
    };
    let (t_lr, t_rl) =
        if rec.sides[0].0 == l { (&rec.transfers.0, &rec.transfers.1) } else { (&rec.transfers.1, &rec.transfers.0) };
    let (bl, br) = (&system.blocks[l], &system.blocks[r]);
    for (x, b) in [(u, bl), (u_t, bl), (v, br), (v_t, br)] {
        if x.len() != b.len() {
            return Err(Error::LengthMismatch { expected: b.len(), got: x.len() });
        }
    }
    let tau = rec.tau;
    let local_h = |b: &crate::discretization::BlockLayout| -> Vec<f64> {
        (0..b.n_xi).flat_map(|i| (0..b.n_eta).map(move |j| b.ops_x.h[i] * b.ops_y.h[j])).collect()
    };
    // x-direction pieces of one block: (uᵀ(M_x⊗H_y)u, trace at column i, derivative rows).
    let col = |b: &crate::discretization::BlockLayout, w: &[f64], i: usize| -> Vec<f64> {
        (0..b.n_eta).map(|j| w[i * b.n_eta + j]).collect()
    };
    let deriv = |b: &crate::discretization::BlockLayout, w: &[f64], first: bool| -> Vec<f64> {
        let row = b.ops_x.boundary_derivative(first);
        let sign = if first { -1.0 } else { 1.0 };
        (0..b.n_eta).map(|j| sign * row.iter().map(|&(k, c)| c * w[k * b.n_eta + j]).sum::<f64>()).collect()
    };
    let m_term = |b: &crate::discretization::BlockLayout, w: &[f64]| -> f64 {
        let mut s = 0.0;
        for j in 0..b.n_eta {
            let line: Vec<f64> = (0..b.n_xi).map(|i| w[i * b.n_eta + j]).collect();
            s += b.ops_y.h[j] * dot(&line, &b.ops_x.m.matvec(&line));
        }
        s
    };
    let hy_l = &bl.ops_y.h;
    let hy_r = &br.ops_y.h;
    let (eu, dnu) = (col(bl, u, bl.n_xi - 1), deriv(bl, u, false));
    let (ev, dnv) = (col(br, v, 0), deriv(br, v, true));
    let t_rl_ev = t_lr.matvec(&ev);
    let t_lr_eu = t_rl.matvec(&eu);
    let terms = vec![
        ("u_t H_L u_t", dot_h(u_t, &local_h(bl), u_t)),
        ("v_t H_R v_t", dot_h(v_t, &local_h(br), v_t)),
        ("u (M_xL x H_yL) u", m_term(bl, u)),
        ("-u (E_0L S_xL x H_yL) u", -dot_h(&eu, hy_l, &dnu)),
        ("tau u (E_0L x H_yL) u", tau * dot_h(&eu, hy_l, &eu)),
        ("v (M_xR x H_yR) v", m_term(br, v)),
        ("v (E_0R S_xR x H_yR) v", -dot_h(&ev, hy_r, &dnv)),
        ("tau v (E_0R x H_yR) v", tau * dot_h(&ev, hy_r, &ev)),
        ("u (S_xL^T E_LR x H_yL I_F2C) v", dot_h(&dnu, hy_l, &t_rl_ev)),
        ("-v (S_xR^T E_RL x H_yR I_C2F) u", dot_h(&dnv, hy_r, &t_lr_eu)),
        ("-2 tau u (E_LR x H_yL I_F2C) v", -2.0 * tau * dot_h(&eu, hy_l, &t_rl_ev)),
    ];
    // Remaining quadratic form: y-direction volume terms, outer x ends, Dirichlet SATs.
    let mut remainder = 0.0;
    for (b, w, outer_first) in [(bl, u, true), (br, v, false)] {
        for i in 0..b.n_xi {
            let line: Vec<f64> = col(b, w, i);
            remainder -= b.ops_x.h[i] * dot_h(&line, &b.ops_y.h, &b.ops_y.d2.matvec(&line));
        }
        let e = col(b, w, if outer_first { 0 } else { b.n_xi - 1 });
        remainder -= dot_h(&e, &b.ops_y.h, &deriv(b, w, outer_first));
    }
    let mut z = vec![0.0; system.len()];
    z[bl.range()].copy_from_slice(u);
    z[br.range()].copy_from_slice(v);
    remainder -= dot_h(&z, &system.h, &system.q_boundary.matvec(&z));
    Ok(TwoBlockEnergyTerms { terms, remainder })
}

/// Dense eigensolve limit.
pub const SPECTRUM_LIMIT: usize = 6000;

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<c64>,
    pub max_real: f64,
    pub max_abs_imag: f64,
    pub spectral_radius: f64,
}

impl SpectrumReport {
    /// `max |Im λ| ≤ rel · spectral radius`.
    pub fn is_real(&self, rel: f64) -> bool {
        self.max_abs_imag <= rel * self.spectral_radius
    }
}

/// Full spectrum of `Q` by a dense nonsymmetric eigensolve.
pub fn spectrum(system: &SemidiscreteSystem) -> Result<SpectrumReport> {
    let n = system.len();
    if n > SPECTRUM_LIMIT {
        return Err(Error::SystemTooLarge { n, max: SPECTRUM_LIMIT });
    }
    let eigenvalues = general_eigenvalues(&system.q.to_dense())?;
    let max_real = eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    let max_abs_imag = eigenvalues.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
    let spectral_radius = eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    Ok(SpectrumReport { eigenvalues, max_real, max_abs_imag, spectral_radius })
}

/// `(sqrt(h^d Σ e²), max|e| / amp)`.
pub fn error_norms(u_h: &[f64], u_ex: &[f64], h: f64, d: i32, amp: f64) -> Result<(f64, f64)> {
    if u_h.len() != u_ex.len() {
        return Err(Error::LengthMismatch { expected: u_ex.len(), got: u_h.len() });
    }
    if !(amp > 0.0) || !(h > 0.0) {
        return Err(Error::NonpositiveInput(format!("h = {h}, amp = {amp}")));
    }
    let (s, m) =
        u_h.iter().zip(u_ex).fold((0.0, 0.0f64), |(s, m), (a, b)| (s + (a - b) * (a - b), m.max((a - b).abs())));
    Ok(((h.powi(d) * s).sqrt(), m / amp))
}

/// Multi-block norms: squared L2 contributions weighted by each block's `h_x h_y`, summed
/// before the square root.
pub fn system_error_norms(system: &SemidiscreteSystem, u_h: &[f64], u_ex: &[f64], amp: f64) -> Result<(f64, f64)> {
    if u_h.len() != system.len() || u_ex.len() != system.len() {
        return Err(Error::LengthMismatch { expected: system.len(), got: u_h.len().min(u_ex.len()) });
    }
    let (mut s, mut m) = (0.0, 0.0f64);
    for b in &system.blocks {
        let r = b.range();
        let (l2, mx) = error_norms(&u_h[r.clone()], &u_ex[r], 1.0, 2, amp)?;
        s += b.hx() * b.hy() * l2 * l2;
        m = m.max(mx);
    }
    Ok((s.sqrt(), m))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub order: usize,
    pub refinement: u32,
    pub l2_error: f64,
    pub q_l2: Option<f64>,
    pub max_error: f64,
    pub q_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

pub const CONVERGENCE_HEADER: &str = "order,refinement,l2_error,q_l2,max_error,q_max";

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{CONVERGENCE_HEADER}\n");
        let opt = |q: Option<f64>| q.map(|v| format!("{v:.4}")).unwrap_or_default();
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{:.6e},{},{:.6e},{}",
                r.order,
                r.refinement,
                r.l2_error,
                opt(r.q_l2),
                r.max_error,
                opt(r.q_max)
            )
            .unwrap();
        }
        s
    }

    /// Rates of the last refinement step.
    pub fn finest_rates(&self) -> Option<(f64, f64)> {
        let r = self.rows.last()?;
        Some((r.q_l2?, r.q_max?))
    }
}

/// `q = log(e_r / e_{r−1}) / log(1/2)` between consecutive levels `(refinement, l2, max)`.
pub fn convergence_rates(order: usize, levels: &[(u32, f64, f64)]) -> Result<ConvergenceReport> {
    if levels.len() < 2 {
        return Err(Error::InsufficientLevels(levels.len()));
    }
    let rate = |a: f64, b: f64| (b / a).ln() / 0.5f64.ln();
    let rows = levels
        .iter()
        .enumerate()
        .map(|(k, &(r, l2, mx))| {
            let prev = (k > 0).then(|| levels[k - 1]);
            ConvergenceRow {
                order,
                refinement: r,
                l2_error: l2,
                q_l2: prev.map(|p| rate(p.1, l2)),
                max_error: mx,
                q_max: prev.map(|p| rate(p.2, mx)),
            }
        })
        .collect();
    Ok(ConvergenceReport { rows })
}
