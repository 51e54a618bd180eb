//! Semidiscrete wave equation `z_tt = Q z + F(t)` on Cartesian multi-block meshes.
//!
//! Blocks are discretized with tensor-product SBP operators. Interfaces are coupled by SAT
//! terms that act on a block's trace `E u`, its outward normal derivative `Dn u` and the
//! neighbour data moved onto the trace by a transfer operator `T`:
//!
//! ```text
//! SAT = ½ H_n⁻¹ Dnᵀ (E u − T E w) − τ/H_n Eᵀ (E u − T E w) − ½/H_n Eᵀ (Dn u + T Dn w)
//! ```
//!
//! where `H_n` is the boundary weight of the normal-direction norm. Outer boundaries use the
//! symmetric Dirichlet SAT `(H_n⁻¹ Dnᵀ − τ_D/H_n Eᵀ)(E u − g)`.

use crate::error::{Error, Result};
use crate::interface::{
    build_interpolation_pair, build_projection_set, compose_interface, InterfaceOperatorPair, TraceSegment, TraceSide,
    TransferKind,
};
use crate::mesh::{InterfaceKind, MultiBlockMesh, Point, Side};
use crate::sbp::{build_sbp, GridLine1D, SbpOperatorSet};
use crate::sparse::{CsrMatrix, TripletBuilder};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Single-entry selection matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectorMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row: usize,
    pub col: usize,
}

impl SelectorMatrix {
    pub fn new(rows: usize, cols: usize, row: usize, col: usize) -> Result<Self> {
        if row >= rows || col >= cols {
            return Err(Error::SizeMismatch(format!("unit entry ({row}, {col}) outside {rows}x{cols}")));
        }
        Ok(Self { rows, cols, row, col })
    }

    pub fn transpose(&self) -> Self {
        Self { rows: self.cols, cols: self.rows, row: self.col, col: self.row }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.rows, self.cols, vec![(self.row, self.col, 1.0)])
    }
}

/// Penalty strength as a multiple of the energy-stability bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub safety: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self { safety: 1.2 }
    }
}

impl PenaltyConfig {
    /// Rejects factors below 1, which void the energy estimate.
    pub fn new(safety: f64) -> Result<Self> {
        if !(safety >= 1.0) {
            return Err(Error::PenaltyBelowBound { tau: safety, bound: 1.0 });
        }
        Ok(Self { safety })
    }

    /// Any positive factor, for experiments below the bound.
    pub fn unchecked(safety: f64) -> Self {
        Self { safety }
    }

    /// `τ = safety · max_k 1/(2 α h_k)` over the normal spacings of the coupled sides.
    pub fn tau(&self, alpha: f64, normal_spacings: &[f64]) -> Result<f64> {
        let mut bound = 0.0f64;
        for &h in normal_spacings {
            bound = bound.max(tau_bound(alpha, h, h)?);
        }
        Ok(self.safety * bound)
    }
}

/// Smallest interface penalty admitted by the energy estimate.
pub fn tau_bound(alpha: f64, h_left: f64, h_right: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("h_left", h_left), ("h_right", h_right)] {
        if !(v > 0.0) {
            return Err(Error::NonpositiveInput(format!("{name} = {v}")));
        }
    }
    Ok((1.0 / (2.0 * alpha * h_left)).max(1.0 / (2.0 * alpha * h_right)))
}

/// Dirichlet data `g(x, y, t)`.
#[derive(Clone)]
pub struct BoundaryData(pub Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>);

impl BoundaryData {
    pub fn new(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryData(..)")
    }
}

/// Which family of transfer operators couples non-conforming interfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferFamily {
    Interpolation,
    Projection,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub order: usize,
    pub family: TransferFamily,
    pub penalty: PenaltyConfig,
    /// Route conforming and 1:2 interfaces through the glue-grid path as well.
    pub all_as_glue: bool,
}

impl AssemblyOptions {
    pub fn new(order: usize, family: TransferFamily) -> Self {
        Self { order, family, penalty: PenaltyConfig::default(), all_as_glue: false }
    }
}

/// Storage layout of one Cartesian block: global index `offset + i·n_eta + j`.
#[derive(Clone, Debug)]
pub struct BlockLayout {
    pub offset: usize,
    pub n_xi: usize,
    pub n_eta: usize,
    /// `[x0, x1, y0, y1]`.
    pub extent: [f64; 4],
    pub ops_x: SbpOperatorSet,
    pub ops_y: SbpOperatorSet,
}

impl BlockLayout {
    pub fn len(&self) -> usize {
        self.n_xi * self.n_eta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        self.offset + i * self.n_eta + j
    }

    pub fn hx(&self) -> f64 {
        self.ops_x.grid.h
    }

    pub fn hy(&self) -> f64 {
        self.ops_y.grid.h
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        [self.ops_x.grid.point(i), self.ops_y.grid.point(j)]
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// How an interface was coupled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    Identity,
    Pair(TransferKind),
    Glue,
}

#[derive(Clone, Debug, Serialize)]
pub struct InterfaceRecord {
    pub kind: InterfaceKind,
    pub coupling: Coupling,
    pub tau: f64,
    /// Long side first, then the sides facing it in order.
    pub sides: Vec<(usize, Side)>,
    /// Trace transfers `(first side ← others stacked, others stacked ← first side)`.
    #[serde(skip)]
    pub transfers: (CsrMatrix, CsrMatrix),
}

/// Assembled semidiscretization.
#[derive(Clone, Debug)]
pub struct SemidiscreteSystem {
    pub order: usize,
    /// `Q = q_volume + q_boundary + q_interface`.
    pub q: CsrMatrix,
    pub q_volume: CsrMatrix,
    pub q_boundary: CsrMatrix,
    pub q_interface: CsrMatrix,
    /// Diagonal of the global norm `H_global`.
    pub h: Vec<f64>,
    pub blocks: Vec<BlockLayout>,
    /// `F(t) = g_map · g(boundary_points, t)`.
    pub g_map: CsrMatrix,
    pub boundary_points: Vec<Point>,
    pub bc: Option<BoundaryData>,
    pub interfaces: Vec<InterfaceRecord>,
    pub tau_dirichlet: Vec<f64>,
}

/// Trace operators of one block side as global matrices.
struct SideOps {
    e: CsrMatrix,
    dn: CsrMatrix,
    /// Boundary weight of the normal-direction norm.
    hn: f64,
    /// `1 / H_normal` at every node of the block, zero elsewhere.
    hinv_normal: Vec<f64>,
    /// Spacing normal to the side.
    h_normal: f64,
    /// Tangential trace: first coordinate, spacing, count.
    tangent: TraceSegment,
    /// Physical coordinates of the trace nodes.
    points: Vec<Point>,
}

fn side_ops(b: &BlockLayout, side: Side, n_global: usize) -> Result<SideOps> {
    let (normal, tangential) = match side.normal_axis() {
        0 => (&b.ops_x, &b.ops_y),
        _ => (&b.ops_y, &b.ops_x),
    };
    let nn = normal.n();
    let first = side.sign() < 0.0;
    let idx = if first { 0 } else { nn - 1 };
    let sel = SelectorMatrix::new(1, nn, 0, idx)?.to_csr();
    let mut dn_row = TripletBuilder::new(1, nn);
    for (k, v) in normal.boundary_derivative(first) {
        dn_row.push(0, k, side.sign() * v);
    }
    let dn_row = dn_row.build();
    let it = CsrMatrix::identity(tangential.n());
    let (e_loc, dn_loc) = match side.normal_axis() {
        0 => (sel.kron(&it), dn_row.kron(&it)),
        _ => (it.kron(&sel), it.kron(&dn_row)),
    };
    let lift = |m: &CsrMatrix| {
        let mut t = TripletBuilder::new(m.nrows(), n_global);
        t.add_block(0, b.offset, m, 1.0);
        t.build()
    };
    let mut hinv_normal = vec![0.0; n_global];
    for i in 0..b.n_xi {
        for j in 0..b.n_eta {
            let k = if side.normal_axis() == 0 { i } else { j };
            hinv_normal[b.index(i, j)] = 1.0 / normal.h[k];
        }
    }
    let points = (0..tangential.n())
        .map(|t| match side.normal_axis() {
            0 => b.point(idx, t),
            _ => b.point(t, idx),
        })
        .collect();
    Ok(SideOps {
        e: lift(&e_loc),
        dn: lift(&dn_loc),
        hn: normal.h[idx],
        hinv_normal,
        h_normal: normal.grid.h,
        tangent: TraceSegment { y0: tangential.grid.x0, h: tangential.grid.h, n: tangential.n() },
        points,
    })
}

/// Adds the three interface SATs of one side, given the neighbour trace maps `t_e = T E_w`
/// and `t_dn = T Dn_w` (trace rows × global columns).
fn add_interface_sat(q: &mut TripletBuilder, s: &SideOps, t_e: &CsrMatrix, t_dn: &CsrMatrix, tau: f64) {
    let jump = s.e.sub(t_e);
    let dsum = s.dn.add(t_dn);
    let lift_dn = s.dn.transpose().scale_rows(&s.hinv_normal);
    let et = s.e.transpose();
    q.add_block(0, 0, &lift_dn.matmul(&jump), 0.5);
    q.add_block(0, 0, &et.matmul(&jump), -tau / s.hn);
    q.add_block(0, 0, &et.matmul(&dsum), -0.5 / s.hn);
}

/// Adds the Dirichlet SAT of one side; returns the forcing columns for its trace nodes.
fn add_dirichlet_sat(q: &mut TripletBuilder, s: &SideOps, tau: f64) -> CsrMatrix {
    let a = s.dn.transpose().scale_rows(&s.hinv_normal).sub(&s.e.transpose().scale(tau / s.hn));
    q.add_block(0, 0, &a.matmul(&s.e), 1.0);
    a.scale(-1.0)
}

fn stack(mats: &[&CsrMatrix]) -> CsrMatrix {
    let ncols = mats[0].ncols();
    let nrows = mats.iter().map(|m| m.nrows()).sum();
    let mut b = TripletBuilder::new(nrows, ncols);
    let mut off = 0;
    for m in mats {
        b.add_block(off, 0, m, 1.0);
        off += m.nrows();
    }
    b.build()
}

struct Group {
    kind: InterfaceKind,
    a: (usize, Side),
    bs: Vec<(usize, Side)>,
}

fn groups(mesh: &MultiBlockMesh) -> Result<Vec<Group>> {
    let mut map: BTreeMap<(usize, Side), Vec<&crate::mesh::Interface>> = BTreeMap::new();
    for f in &mesh.interfaces {
        if f.reversed {
            return Err(Error::SizeMismatch("interfaces with opposite trace directions are not supported".into()));
        }
        map.entry(f.a).or_default().push(f);
    }
    let mut out = Vec::new();
    for (a, mut fs) in map {
        fs.sort_by_key(|f| f.range_a);
        let n = mesh.blocks[a.0].side_len(a.1);
        let tiled = fs[0].range_a.0 == 0
            && fs[fs.len() - 1].range_a.1 == n - 1
            && fs.windows(2).all(|w| w[0].range_a.1 == w[1].range_a.0);
        if !tiled {
            return Err(Error::CoverageGap(format!("block {} {:?} is not covered by its interfaces", a.0, a.1)));
        }
        let kind = if fs.len() > 1 { InterfaceKind::Glue } else { fs[0].kind };
        out.push(Group { kind, a, bs: fs.iter().map(|f| f.b).collect() });
    }
    Ok(out)
}

fn trace_side(order: usize, sides: &[&SideOps]) -> Result<TraceSide> {
    TraceSide::from_segments(order, sides.iter().map(|s| s.tangent).collect())
}

/// Assembles the system for every interface of the mesh.
pub fn assemble(mesh: &MultiBlockMesh, opts: &AssemblyOptions, bc: Option<BoundaryData>) -> Result<SemidiscreteSystem> {
    assemble_impl(mesh, opts, bc, None)
}

/// Two-block assembly with a caller-supplied transfer pair for the single interface.
/// The pair's coarse side must match the side with fewer trace points.
pub fn assemble_two_block(
    mesh: &MultiBlockMesh,
    order: usize,
    pair: &InterfaceOperatorPair,
    penalty: PenaltyConfig,
    bc: Option<BoundaryData>,
) -> Result<SemidiscreteSystem> {
    if mesh.interfaces.len() != 1 {
        return Err(Error::SizeMismatch(format!("expected one interface, found {}", mesh.interfaces.len())));
    }
    let opts = AssemblyOptions { order, family: TransferFamily::Projection, penalty, all_as_glue: false };
    assemble_impl(mesh, &opts, bc, Some(pair))
}

/// Assembly in which every interface is coupled on its glue grid with projection operators.
pub fn assemble_glue_coupled(
    mesh: &MultiBlockMesh,
    order: usize,
    penalty: PenaltyConfig,
    bc: Option<BoundaryData>,
) -> Result<SemidiscreteSystem> {
    let opts = AssemblyOptions { order, family: TransferFamily::Projection, penalty, all_as_glue: true };
    assemble_impl(mesh, &opts, bc, None)
}

fn assemble_impl(
    mesh: &MultiBlockMesh,
    opts: &AssemblyOptions,
    bc: Option<BoundaryData>,
    given_pair: Option<&InterfaceOperatorPair>,
) -> Result<SemidiscreteSystem> {
    let order = opts.order;
    let mut blocks = Vec::with_capacity(mesh.blocks.len());
    let mut offset = 0;
    for (k, b) in mesh.blocks.iter().enumerate() {
        let extent = b
            .spec
            .cartesian_extent()
            .ok_or_else(|| Error::SizeMismatch(format!("block {k} is not an axis-aligned rectangle")))?;
        let ops_x = build_sbp(order, GridLine1D::spanning(extent[0], extent[1], b.n_xi())?)?;
        let ops_y = build_sbp(order, GridLine1D::spanning(extent[2], extent[3], b.n_eta())?)?;
        blocks.push(BlockLayout { offset, n_xi: b.n_xi(), n_eta: b.n_eta(), extent, ops_x, ops_y });
        offset += b.n_xi() * b.n_eta();
    }
    let n = offset;
    let alpha = blocks[0].ops_x.alpha;

    let mut vol = TripletBuilder::new(n, n);
    let mut h = vec![0.0; n];
    for b in &blocks {
        let d2 = b.ops_x.d2.kron(&CsrMatrix::identity(b.n_eta)).add(&CsrMatrix::identity(b.n_xi).kron(&b.ops_y.d2));
        vol.add_block(b.offset, b.offset, &d2, 1.0);
        for i in 0..b.n_xi {
            for j in 0..b.n_eta {
                h[b.index(i, j)] = b.ops_x.h[i] * b.ops_y.h[j];
            }
        }
    }

    let mut qi = TripletBuilder::new(n, n);
    let mut records = Vec::new();
    for g in groups(mesh)? {
        let sa = side_ops(&blocks[g.a.0], g.a.1, n)?;
        let sbs: Vec<SideOps> = g.bs.iter().map(|&(k, s)| side_ops(&blocks[k], s, n)).collect::<Result<_>>()?;
        let mut hs = vec![sa.h_normal];
        hs.extend(sbs.iter().map(|s| s.h_normal));
        let tau = opts.penalty.tau(alpha, &hs)?;
        let mut sides = vec![g.a];
        sides.extend(&g.bs);
        let glue = g.kind == InterfaceKind::Glue || opts.all_as_glue;
        let (coupling, transfers) = if glue {
            let refs: Vec<&SideOps> = sbs.iter().collect();
            let ta = trace_side(order, &[&sa])?;
            let tb = trace_side(order, &refs)?;
            let gs = build_projection_set(order, &ta, &tb)?;
            // Each side: own polynomial → glue grid, and glue grid → own nodal values.
            let a_to_glue = gs.c.p_p2g.matmul(&gs.c.p_f2p);
            let b_to_glue = gs.f.p_p2g.matmul(&gs.f.p_f2p);
            let glue_to_a = gs.c.p_p2f.matmul(&gs.c.p_g2p);
            let glue_to_b = gs.f.p_p2f.matmul(&gs.f.p_g2p);
            let eb = stack(&refs.iter().map(|s| &s.e).collect::<Vec<_>>());
            let dnb = stack(&refs.iter().map(|s| &s.dn).collect::<Vec<_>>());
            let (ea_g, dna_g) = (a_to_glue.matmul(&sa.e), a_to_glue.matmul(&sa.dn));
            let (eb_g, dnb_g) = (b_to_glue.matmul(&eb), b_to_glue.matmul(&dnb));
            add_interface_sat(&mut qi, &sa, &glue_to_a.matmul(&eb_g), &glue_to_a.matmul(&dnb_g), tau);
            let (te, tdn) = (glue_to_b.matmul(&ea_g), glue_to_b.matmul(&dna_g));
            let mut row = 0;
            for s in &sbs {
                let rows = row..row + s.tangent.n;
                add_interface_sat(&mut qi, s, &te.submatrix(rows.clone(), 0..n), &tdn.submatrix(rows, 0..n), tau);
                row += s.tangent.n;
            }
            (Coupling::Glue, (glue_to_a.matmul(&b_to_glue), glue_to_b.matmul(&a_to_glue)))
        } else {
            let sb = &sbs[0];
            let (na, nb) = (sa.tangent.n, sb.tangent.n);
            if g.kind == InterfaceKind::Conforming && given_pair.is_none() {
                add_interface_sat(&mut qi, &sa, &sb.e, &sb.dn, tau);
                add_interface_sat(&mut qi, sb, &sa.e, &sa.dn, tau);
                (Coupling::Identity, (CsrMatrix::identity(na), CsrMatrix::identity(nb)))
            } else {
                let (coarse, fine) = if na <= nb { (&sa, sb) } else { (sb, &sa) };
                let pair = match given_pair {
                    Some(p) => p.clone(),
                    None => match opts.family {
                        TransferFamily::Interpolation => {
                            build_interpolation_pair(order, coarse.tangent.n, coarse.tangent.h)?
                        }
                        TransferFamily::Projection => compose_interface(&build_projection_set(
                            order,
                            &trace_side(order, &[coarse])?,
                            &trace_side(order, &[fine])?,
                        )?),
                    },
                };
                if pair.n_c() != coarse.tangent.n || pair.n_f() != fine.tangent.n {
                    return Err(Error::SizeMismatch(format!(
                        "pair is {}→{}, traces have {} and {} points",
                        pair.n_c(),
                        pair.n_f(),
                        coarse.tangent.n,
                        fine.tangent.n
                    )));
                }
                add_interface_sat(&mut qi, coarse, &pair.i_f2c.matmul(&fine.e), &pair.i_f2c.matmul(&fine.dn), tau);
                add_interface_sat(&mut qi, fine, &pair.i_c2f.matmul(&coarse.e), &pair.i_c2f.matmul(&coarse.dn), tau);
                let t = if na <= nb {
                    (pair.i_f2c.clone(), pair.i_c2f.clone())
                } else {
                    (pair.i_c2f.clone(), pair.i_f2c.clone())
                };
                (Coupling::Pair(pair.kind), t)
            }
        };
        records.push(InterfaceRecord { kind: g.kind, coupling, tau, sides, transfers });
    }

    let mut qb = TripletBuilder::new(n, n);
    let mut forcing: Vec<CsrMatrix> = Vec::new();
    let mut boundary_points = Vec::new();
    let mut tau_dirichlet = Vec::new();
    for seg in &mesh.boundaries {
        let s = side_ops(&blocks[seg.block], seg.side, n)?;
        let tau = opts.penalty.safety / (alpha * s.h_normal);
        forcing.push(add_dirichlet_sat(&mut qb, &s, tau));
        boundary_points.extend(s.points.iter().copied());
        tau_dirichlet.push(tau);
    }
    let mut g = TripletBuilder::new(n, boundary_points.len());
    let mut col = 0;
    for f in &forcing {
        g.add_block(0, col, f, 1.0);
        col += f.ncols();
    }

    let (q_volume, q_boundary, q_interface) = (vol.build(), qb.build(), qi.build());
    let q = q_volume.add(&q_boundary).add(&q_interface);
    Ok(SemidiscreteSystem {
        order,
        q,
        q_volume,
        q_boundary,
        q_interface,
        h,
        blocks,
        g_map: g.build(),
        boundary_points,
        bc,
        interfaces: records,
        tau_dirichlet,
    })
}

impl SemidiscreteSystem {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// Physical coordinates of every unknown in storage order.
    pub fn coordinates(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.len());
        for b in &self.blocks {
            for i in 0..b.n_xi {
                for j in 0..b.n_eta {
                    out.push(b.point(i, j));
                }
            }
        }
        out
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.coordinates().into_iter().map(|p| f(p[0], p[1])).collect()
    }

    /// Smallest spacing over all blocks and directions.
    pub fn min_spacing(&self) -> f64 {
        self.blocks.iter().map(|b| b.hx().min(b.hy())).fold(f64::INFINITY, f64::min)
    }

    /// `F(t)`, or `None` for homogeneous data.
    pub fn forcing(&self, t: f64) -> Option<Vec<f64>> {
        let bc = self.bc.as_ref()?;
        let g: Vec<f64> = self.boundary_points.iter().map(|p| (bc.0)(p[0], p[1], t)).collect();
        Some(self.g_map.matvec(&g))
    }

    /// `‖H Q − (H Q)ᵀ‖_max / ‖H Q‖_max`.
    pub fn symmetry_residual(&self) -> f64 {
        let hq = self.q.scale_rows(&self.h);
        hq.asymmetry() / hq.max_abs()
    }

    /// Writes `Q` and `H_global` as `row col value` triplet files.
    pub fn export(&self, dir: impl AsRef<std::path::Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (name, m) in [("q.txt", self.q.clone()), ("h.txt", CsrMatrix::diag(&self.h))] {
            let mut buf = Vec::new();
            m.write_triplets(&mut buf)?;
            crate::io::write_atomic(dir.join(name), &buf)?;
        }
        Ok(())
    }
}

/// `Q z + F(t)` with the assembled sparse matrix.
pub fn apply_rhs(system: &SemidiscreteSystem, z: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; system.len()];
    apply_rhs_into(system, z, t, &mut out)?;
    Ok(out)
}

/// As [`apply_rhs`], writing into `out`.
pub fn apply_rhs_into(system: &SemidiscreteSystem, z: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
    if z.len() != system.len() || out.len() != system.len() {
        return Err(Error::LengthMismatch { expected: system.len(), got: z.len().min(out.len()) });
    }
    system.q.matvec_into(z, out);
    if let Some(f) = system.forcing(t) {
        out.iter_mut().zip(f).for_each(|(o, v)| *o += v);
    }
    Ok(())
}

/// `Q z + F(t)` applying the block `D2` operators line by line instead of through `Q`.
pub fn apply_rhs_matrix_free(system: &SemidiscreteSystem, z: &[f64], t: f64) -> Result<Vec<f64>> {
    if z.len() != system.len() {
        return Err(Error::LengthMismatch { expected: system.len(), got: z.len() });
    }
    let mut out = system.q_boundary.add(&system.q_interface).matvec(z);
    for b in &system.blocks {
        for i in 0..b.n_xi {
            let (idx, val) = b.ops_x.d2.row(i);
            for j in 0..b.n_eta {
                let mut s = 0.0;
                for (&k, &v) in idx.iter().zip(val) {
                    s += v * z[b.index(k, j)];
                }
                out[b.index(i, j)] += s;
            }
        }
        for j in 0..b.n_eta {
            let (idx, val) = b.ops_y.d2.row(j);
            for i in 0..b.n_xi {
                let mut s = 0.0;
                for (&k, &v) in idx.iter().zip(val) {
                    s += v * z[b.index(i, k)];
                }
                out[b.index(i, j)] += s;
            }
        }
    }
    if let Some(f) = system.forcing(t) {
        out.iter_mut().zip(f).for_each(|(o, v)| *o += v);
    }
    Ok(out)
}
