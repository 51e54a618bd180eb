use crate::config::{CavityPartition, ExperimentConfig, Family, MeshKind};
use sbpsat::analysis::{convergence_rates, discrete_energy, spectrum, system_error_norms};
use sbpsat::discretization::{
    assemble, assemble_two_block, AssemblyOptions, BoundaryData, PenaltyConfig, SemidiscreteSystem, TransferFamily,
};
use sbpsat::interface::{
    build_interpolation_pair, build_projection_set, compose_interface, load_interface_operators, xi_diagnostics,
    InterfaceOperatorPair, TraceSide,
};
use sbpsat::io::write_atomic;
use sbpsat::mesh::{
    build_cavity_mesh, build_inclusion_mesh, build_single_block_mesh, build_tjunction_mesh, build_two_block_mesh,
    refine_count, CavityStyle, InterfaceKind, MultiBlockMesh,
};
use sbpsat::sbp::{
    coefficient_dir, table_alpha, verify_borrowing, verify_sbp_identities, GridLine1D, SbpCoefficients, SbpOperatorSet,
};
use sbpsat::timestepping::{
    default_dt_factor, manufactured_errors, simulate, ManufacturedSolution, Observer, SimulationOptions,
    SimulationState,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, sbpsat::Error>;

/// What a command produced and whether its checks held.
#[derive(Debug, Default)]
pub struct Outcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, ..Self::default() }
    }

    fn write(&mut self, dir: &Path, name: &str, text: &str) -> Result<()> {
        let p = dir.join(name);
        write_atomic(&p, text.as_bytes())?;
        self.files.push(p);
        Ok(())
    }
}

fn family(f: Family) -> TransferFamily {
    match f {
        Family::Interpolation => TransferFamily::Interpolation,
        Family::Projection => TransferFamily::Projection,
    }
}

fn coeff_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.coefficient_dir.clone().unwrap_or_else(coefficient_dir)
}

/// Coefficients for `order`: a file in the coefficient directory wins, then the built-in set.
/// `Ok(None)` means the order needs a file that is not present.
fn coefficients(cfg: &ExperimentConfig, order: usize) -> Result<Option<(SbpCoefficients, String)>> {
    let path = coeff_dir(cfg).join(format!("sbp_order{order}.txt"));
    if path.exists() {
        return SbpCoefficients::load(&path).map(|c| Some((c, path.display().to_string())));
    }
    if matches!(order, 2 | 4) {
        return SbpCoefficients::for_order(order).map(|c| Some((c, "built-in".into())));
    }
    Ok(None)
}

pub fn verify_ops(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let mut o = Outcome::new();
    let mut csv = String::from("order,source,q_residual,max_exactness,borrowing_min,alpha,status\n");
    for &order in &cfg.orders {
        let c = match coefficients(cfg, order) {
            Ok(Some(c)) => c,
            Ok(None) => {
                writeln!(csv, "{order},missing,,,,,skipped").unwrap();
                o.notes.push(format!("order {order}: no coefficient file, skipped"));
                continue;
            }
            Err(e) => {
                writeln!(csv, "{order},rejected,,,,,fail").unwrap();
                o.notes.push(format!("order {order}: {e}"));
                o.passed = false;
                continue;
            }
        };
        let (coeffs, source) = c;
        let n = cfg.grid_points.max(coeffs.min_points());
        let ops = SbpOperatorSet::from_coefficients(coeffs, GridLine1D::spanning(0.0, 1.0, n)?)?;
        let rep = verify_sbp_identities(&ops);
        let lam = verify_borrowing(&ops)?;
        let alpha_ok = table_alpha(order).is_some_and(|a| (a - ops.alpha).abs() <= 1e-10);
        let ok = rep.q_plus_qt_minus_b <= 1e-12 && rep.max_exactness() <= 1e-8 && lam >= -1e-10 && alpha_ok;
        o.passed &= ok;
        writeln!(
            csv,
            "{order},{source},{:.3e},{:.3e},{:.3e},{},{}",
            rep.q_plus_qt_minus_b,
            rep.max_exactness(),
            lam,
            ops.alpha,
            if ok { "pass" } else { "fail" }
        )
        .unwrap();
    }
    o.write(out, "verify_ops.csv", &csv)?;
    Ok(o)
}

/// The `r = 0` interface pair: 26 coarse and 51 fine points on `[0, 1]`.
fn interface_pair(
    cfg: &ExperimentConfig,
    order: usize,
    f: Family,
    n_c: usize,
) -> Result<Option<InterfaceOperatorPair>> {
    let path = coeff_dir(cfg).join(format!("interface_{}_order{order}.txt", f.name()));
    if path.exists() {
        return load_interface_operators(&path).map(Some);
    }
    if !matches!(order, 2 | 4) {
        return Ok(None);
    }
    let n_f = 2 * n_c - 1;
    Ok(Some(match f {
        Family::Interpolation => build_interpolation_pair(order, n_c, 1.0 / (n_c - 1) as f64)?,
        Family::Projection => compose_interface(&build_projection_set(
            order,
            &TraceSide::uniform(order, 0.0, 1.0, n_c)?,
            &TraceSide::uniform(order, 0.0, 1.0, n_f)?,
        )?),
    }))
}

pub fn interface_eigs(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let mut o = Outcome::new();
    let mut csv = String::from("order,family,k_l,k_r,compatibility,constant,status\n");
    for &order in &cfg.orders {
        for &f in &cfg.families {
            let Some(pair) = interface_pair(cfg, order, f, 26)? else {
                writeln!(csv, "{order},{},,,,,skipped", f.name()).unwrap();
                o.notes.push(format!("order {order} {}: no operator file, skipped", f.name()));
                continue;
            };
            let xi = xi_diagnostics(&pair, false)?;
            let (compat, constant) = (pair.compatibility_residual(), pair.constant_residual());
            let status = if order > 4 {
                "reported"
            } else if xi.k_c >= -1e-13 && xi.k_f >= -1e-13 && compat <= 1e-12 && constant <= 1e-12 {
                "pass"
            } else {
                o.passed = false;
                "fail"
            };
            writeln!(
                csv,
                "{order},{},{:.3e},{:.3e},{:.3e},{:.3e},{status}",
                f.name(),
                xi.k_c,
                xi.k_f,
                compat,
                constant
            )
            .unwrap();
        }
    }
    o.write(out, "interface_eigs.csv", &csv)?;
    Ok(o)
}

pub fn build_mesh(cfg: &ExperimentConfig, r: u32) -> Result<MultiBlockMesh> {
    match cfg.mesh {
        MeshKind::TwoBlock => build_two_block_mesh(r),
        MeshKind::TJunction => build_tjunction_mesh(r),
        MeshKind::SingleBlock => {
            let n = refine_count(26, r);
            build_single_block_mesh((-1.0, 1.0), (0.0, 1.0), 2 * n - 1, n)
        }
        MeshKind::Cavity => build_cavity_mesh(match cfg.cavity {
            CavityPartition::N => CavityStyle::N,
            CavityPartition::T => CavityStyle::T,
        }),
        MeshKind::Inclusion => build_inclusion_mesh(cfg.conforming),
    }
}

fn require_cartesian(cfg: &ExperimentConfig) -> Result<()> {
    if matches!(cfg.mesh, MeshKind::Cavity | MeshKind::Inclusion) {
        return Err(sbpsat::Error::SizeMismatch("solvers run on two-block, t-junction or single-block meshes".into()));
    }
    Ok(())
}

/// Assembles `mesh`; orders above 4 need an operator file for the interface pair.
fn system(
    cfg: &ExperimentConfig,
    mesh: &MultiBlockMesh,
    order: usize,
    f: Family,
    bc: Option<BoundaryData>,
) -> Result<Option<SemidiscreteSystem>> {
    if coefficients(cfg, order)?.is_none() {
        return Ok(None);
    }
    if let Some(dir) = &cfg.coefficient_dir {
        std::env::set_var(sbpsat::sbp::COEFF_DIR_ENV, dir);
    }
    let penalty = PenaltyConfig::new(cfg.safety)?;
    if order > 4 {
        if mesh.interfaces.len() != 1 {
            return Ok(None);
        }
        let n_c = mesh.blocks.iter().map(|b| b.n_eta()).min().unwrap_or(0);
        let Some(pair) = interface_pair(cfg, order, f, n_c)? else { return Ok(None) };
        return assemble_two_block(mesh, order, &pair, penalty, bc).map(Some);
    }
    let mut opts = AssemblyOptions::new(order, family(f));
    opts.penalty = penalty;
    assemble(mesh, &opts, bc).map(Some)
}

pub fn spectrum_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    require_cartesian(cfg)?;
    let mut o = Outcome::new();
    let mut csv =
        String::from("order,family,unknowns,max_real,max_real_h2,max_abs_imag,spectral_radius,all_real,status\n");
    let mesh = build_mesh(cfg, cfg.refinements[0])?;
    for &order in &cfg.orders {
        for &f in &cfg.families {
            let Some(sys) = system(cfg, &mesh, order, f, None)? else {
                writeln!(csv, "{order},{},,,,,,,skipped", f.name()).unwrap();
                o.notes.push(format!("order {order} {}: operators unavailable, skipped", f.name()));
                continue;
            };
            let rep = spectrum(&sys)?;
            let h = sys.min_spacing();
            let real = rep.is_real(1e-8);
            let status = if order > 4 {
                "reported"
            } else if real && rep.max_real <= 1e-8 * rep.spectral_radius {
                "pass"
            } else {
                o.passed = false;
                "fail"
            };
            writeln!(
                csv,
                "{order},{},{},{:.6e},{:.6e},{:.3e},{:.6e},{real},{status}",
                f.name(),
                sys.len(),
                rep.max_real,
                rep.max_real * h * h,
                rep.max_abs_imag,
                rep.spectral_radius
            )
            .unwrap();
        }
    }
    o.write(out, "spectrum.csv", &csv)?;
    Ok(o)
}

fn exact_bc() -> BoundaryData {
    BoundaryData::new(ManufacturedSolution::u)
}

fn dt_factor(cfg: &ExperimentConfig, order: usize) -> f64 {
    cfg.dt_factor.unwrap_or_else(|| default_dt_factor(order))
}

pub fn converge(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    require_cartesian(cfg)?;
    let mut o = Outcome::new();
    let [r0, r1] = cfg.refinements;
    for &f in &cfg.families {
        let mut csv = String::new();
        for &order in &cfg.orders {
            let mut levels = Vec::new();
            for r in r0..=r1 {
                let mesh = build_mesh(cfg, r)?;
                let Some(sys) = system(cfg, &mesh, order, f, Some(exact_bc()))? else { break };
                let dt = dt_factor(cfg, order) * sys.min_spacing();
                match manufactured_errors(&sys, cfg.t_final, dt) {
                    Ok((l2, mx)) => levels.push((r, l2, mx)),
                    Err(e) => {
                        o.passed = false;
                        o.notes.push(format!("order {order} {} r={r}: {e}", f.name()));
                        break;
                    }
                }
            }
            if levels.is_empty() {
                o.notes.push(format!("order {order} {}: operators unavailable, skipped", f.name()));
                continue;
            }
            let report = if levels.len() >= 2 {
                convergence_rates(order, &levels)?
            } else {
                let (r, l2, mx) = levels[0];
                sbpsat::analysis::ConvergenceReport {
                    rows: vec![sbpsat::analysis::ConvergenceRow {
                        order,
                        refinement: r,
                        l2_error: l2,
                        q_l2: None,
                        max_error: mx,
                        q_max: None,
                    }],
                }
            };
            let text = report.to_csv();
            if csv.is_empty() {
                csv.push_str(&text);
            } else {
                csv.extend(text.lines().skip(1).map(|l| format!("{l}\n")));
            }
        }
        if !csv.is_empty() {
            o.write(out, &format!("converge_{}.csv", f.name()), &csv)?;
        }
    }
    Ok(o)
}

pub fn mesh_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    let mut o = Outcome::new();
    let mesh = build_mesh(cfg, cfg.refinements[0])?;
    mesh.check_coverage()?;
    let dir = out.join("mesh");
    std::fs::create_dir_all(&dir)?;
    mesh.export(&dir)?;
    let count = |k: InterfaceKind| mesh.interfaces.iter().filter(|i| i.kind == k).count();
    let mut s = String::from("block,n_xi,n_eta,points\n");
    for (k, b) in mesh.blocks.iter().enumerate() {
        writeln!(s, "{k},{},{},{}", b.n_xi(), b.n_eta(), b.n_xi() * b.n_eta()).unwrap();
    }
    o.write(out, "mesh_blocks.csv", &s)?;
    o.notes.push(format!(
        "{} blocks, {} points; interfaces: {} conforming, {} ratio 1:2, {} glue",
        mesh.blocks.len(),
        mesh.total_points(),
        count(InterfaceKind::Conforming),
        count(InterfaceKind::Ratio12),
        count(InterfaceKind::Glue)
    ));
    Ok(o)
}

pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<Outcome> {
    require_cartesian(cfg)?;
    let mut o = Outcome::new();
    let (order, f) = (cfg.orders[0], cfg.families[0]);
    let mesh = build_mesh(cfg, cfg.refinements[0])?;
    let Some(sys) = system(cfg, &mesh, order, f, Some(exact_bc()))? else {
        o.passed = false;
        o.notes.push(format!("order {order} {}: operators unavailable", f.name()));
        return Ok(o);
    };
    let dt = dt_factor(cfg, order) * sys.min_spacing();
    let s = &sys;
    let mut obs = [
        Observer::new("energy", |st: &SimulationState| {
            discrete_energy(s, &st.z, &st.z_t, st.t).map(|e| e.e).unwrap_or(f64::NAN)
        }),
        Observer::new("error", |st: &SimulationState| {
            let ex = SimulationState::manufactured(s, st.t);
            system_error_norms(s, &st.z, &ex.z, 1.0).map(|e| e.0).unwrap_or(f64::NAN)
        }),
        Observer::new("amplitude", |st: &SimulationState| st.z.iter().fold(0.0f64, |m, v| m.max(v.abs()))),
    ];
    let opts = SimulationOptions { stride: cfg.stride, ..SimulationOptions::default() };
    let result = simulate(&sys, SimulationState::manufactured(&sys, 0.0), cfg.t_final, dt, &mut obs, opts);
    for ob in &obs {
        o.write(out, &format!("{}.csv", ob.name), &ob.to_csv())?;
    }
    match result {
        Ok(end) => {
            let (l2, mx) = system_error_norms(&sys, &end.z, &SimulationState::manufactured(&sys, cfg.t_final).z, 1.0)?;
            o.notes.push(format!("t = {}: L2 error {l2:.4e}, max error {mx:.4e}", cfg.t_final));
        }
        Err(e) => {
            o.passed = false;
            o.notes.push(e.to_string());
        }
    }
    Ok(o)
}
