//! Multi-block structured grids by transfinite interpolation, with interface detection.

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub type Point = [f64; 2];

fn rot90(p: Point, turns: i32) -> Point {
    let mut q = p;
    for _ in 0..turns.rem_euclid(4) {
        q = [-q[1], q[0]];
    }
    q
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Parametric boundary curve on `s ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BoundaryCurve {
    Line {
        from: Point,
        to: Point,
    },
    /// Circular arc through `from` and `to` about `center`, parameterized so that the
    /// projection onto the chord moves linearly in `s`.
    ChordArc {
        center: Point,
        from: Point,
        to: Point,
    },
    /// Piecewise linear through equally spaced parameter values.
    Polyline {
        points: Vec<Point>,
    },
}

impl BoundaryCurve {
    pub fn line(from: Point, to: Point) -> Self {
        BoundaryCurve::Line { from, to }
    }

    pub fn eval(&self, s: f64) -> Point {
        match self {
            BoundaryCurve::Line { from, to } => [from[0] + s * (to[0] - from[0]), from[1] + s * (to[1] - from[1])],
            BoundaryCurve::ChordArc { center, from, to } => {
                let r = dist(*from, *center);
                let len = dist(*from, *to);
                let d = [(to[0] - from[0]) / len, (to[1] - from[1]) / len];
                let f = [from[0] - center[0], from[1] - center[1]];
                let fd = f[0] * d[0] + f[1] * d[1];
                let mut n = [f[0] - fd * d[0], f[1] - fd * d[1]];
                let nn = n[0].hypot(n[1]);
                n = [n[0] / nn, n[1] / nn];
                let u = fd + s * len;
                let v = (r * r - u * u).max(0.0).sqrt();
                [center[0] + u * d[0] + v * n[0], center[1] + u * d[1] + v * n[1]]
            }
            BoundaryCurve::Polyline { points } => {
                let m = points.len() - 1;
                let t = (s * m as f64).clamp(0.0, m as f64);
                let k = (t.floor() as usize).min(m.saturating_sub(1));
                let w = t - k as f64;
                if m == 0 {
                    return points[0];
                }
                let (a, b) = (points[k], points[k + 1]);
                [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
            }
        }
    }

    /// Counter-clockwise rotation by `turns` quarter turns about the origin.
    pub fn rotated(&self, turns: i32) -> Self {
        match self {
            BoundaryCurve::Line { from, to } => {
                BoundaryCurve::Line { from: rot90(*from, turns), to: rot90(*to, turns) }
            }
            BoundaryCurve::ChordArc { center, from, to } => BoundaryCurve::ChordArc {
                center: rot90(*center, turns),
                from: rot90(*from, turns),
                to: rot90(*to, turns),
            },
            BoundaryCurve::Polyline { points } => {
                BoundaryCurve::Polyline { points: points.iter().map(|p| rot90(*p, turns)).collect() }
            }
        }
    }

    fn axis_line(&self) -> Option<(Point, Point)> {
        match self {
            BoundaryCurve::Line { from, to } if from[0] == to[0] || from[1] == to[1] => Some((*from, *to)),
            _ => None,
        }
    }
}

/// Block side, in the reference square's orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    South,
    North,
    West,
    East,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::South, Side::North, Side::West, Side::East];

    /// Outward normal sign along the normal axis: `-1` for west/south, `+1` for east/north.
    pub fn sign(self) -> f64 {
        match self {
            Side::West | Side::South => -1.0,
            Side::East | Side::North => 1.0,
        }
    }

    /// `0` if the side is normal to `ξ` (west/east), `1` otherwise.
    pub fn normal_axis(self) -> usize {
        match self {
            Side::West | Side::East => 0,
            Side::South | Side::North => 1,
        }
    }
}

/// Four bounding curves and the grid size of one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub south: BoundaryCurve,
    pub north: BoundaryCurve,
    pub west: BoundaryCurve,
    pub east: BoundaryCurve,
    pub n_xi: usize,
    pub n_eta: usize,
}

impl BlockSpec {
    /// Checks that the curves meet at the four corners within `1e-10` (relative to the block size).
    pub fn new(
        south: BoundaryCurve,
        north: BoundaryCurve,
        west: BoundaryCurve,
        east: BoundaryCurve,
        n_xi: usize,
        n_eta: usize,
    ) -> Result<Self> {
        if n_xi < 2 || n_eta < 2 {
            return Err(Error::NonpositiveInput(format!("block with {n_xi} x {n_eta} points")));
        }
        let spec = Self { south, north, west, east, n_xi, n_eta };
        spec.check_corners()?;
        Ok(spec)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]` with `ξ` along `x`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, n_xi: usize, n_eta: usize) -> Result<Self> {
        Self::new(
            BoundaryCurve::line([x0, y0], [x1, y0]),
            BoundaryCurve::line([x0, y1], [x1, y1]),
            BoundaryCurve::line([x0, y0], [x0, y1]),
            BoundaryCurve::line([x1, y0], [x1, y1]),
            n_xi,
            n_eta,
        )
    }

    fn check_corners(&self) -> Result<()> {
        let scale = dist(self.south.eval(0.0), self.north.eval(1.0)).max(1.0);
        let pairs = [
            ("south-west", self.south.eval(0.0), self.west.eval(0.0)),
            ("south-east", self.south.eval(1.0), self.east.eval(0.0)),
            ("north-west", self.north.eval(0.0), self.west.eval(1.0)),
            ("north-east", self.north.eval(1.0), self.east.eval(1.0)),
        ];
        for (name, a, b) in pairs {
            if dist(a, b) > 1e-10 * scale {
                return Err(Error::EndpointMismatch(format!("{name} corner: {a:?} vs {b:?}")));
            }
        }
        Ok(())
    }

    pub fn curve(&self, side: Side) -> &BoundaryCurve {
        match side {
            Side::South => &self.south,
            Side::North => &self.north,
            Side::West => &self.west,
            Side::East => &self.east,
        }
    }

    pub fn points(&self) -> usize {
        self.n_xi * self.n_eta
    }

    /// `Some([x0, x1, y0, y1])` if all four sides are axis-aligned lines forming a rectangle
    /// with `ξ` along `x`.
    pub fn cartesian_extent(&self) -> Option<[f64; 4]> {
        let (s0, s1) = self.south.axis_line()?;
        let (n0, n1) = self.north.axis_line()?;
        self.west.axis_line()?;
        self.east.axis_line()?;
        let ok = s0[1] == s1[1] && n0[1] == n1[1] && s0[0] == n0[0] && s1[0] == n1[0] && s1[0] > s0[0] && n0[1] > s0[1];
        ok.then_some([s0[0], s1[0], s0[1], n0[1]])
    }
}

/// Evaluates the transfinite interpolation of a block at `(ξ, η) ∈ [0, 1]²`.
pub fn transfinite_map(spec: &BlockSpec, xi: f64, eta: f64) -> Result<Point> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::ParameterOutOfRange { name: "xi", value: xi });
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::ParameterOutOfRange { name: "eta", value: eta });
    }
    let (cs, cn, cw, ce) = (spec.south.eval(xi), spec.north.eval(xi), spec.west.eval(eta), spec.east.eval(eta));
    let (psw, pse, pnw, pne) = (spec.south.eval(0.0), spec.south.eval(1.0), spec.north.eval(0.0), spec.north.eval(1.0));
    let mut out = [0.0; 2];
    for k in 0..2 {
        out[k] = (1.0 - eta) * cs[k] + eta * cn[k] + (1.0 - xi) * cw[k] + xi * ce[k]
            - xi * eta * pne[k]
            - xi * (1.0 - eta) * pse[k]
            - eta * (1.0 - xi) * pnw[k]
            - (1.0 - xi) * (1.0 - eta) * psw[k];
    }
    Ok(out)
}

/// Rotates every curve of a block counter-clockwise by `quarter_turns · π/2`.
pub fn rotate_block(spec: &BlockSpec, quarter_turns: i32) -> BlockSpec {
    BlockSpec {
        south: spec.south.rotated(quarter_turns),
        north: spec.north.rotated(quarter_turns),
        west: spec.west.rotated(quarter_turns),
        east: spec.east.rotated(quarter_turns),
        n_xi: spec.n_xi,
        n_eta: spec.n_eta,
    }
}

/// A block with its generated grid; `x[[i, j]]` is the point at `(ξ_i, η_j)`.
#[derive(Clone, Debug)]
pub struct Block {
    pub spec: BlockSpec,
    pub x: Array2<f64>,
    pub y: Array2<f64>,
}

impl Block {
    pub fn generate(spec: BlockSpec) -> Result<Self> {
        let (nx, ny) = (spec.n_xi, spec.n_eta);
        let mut x = Array2::zeros((nx, ny));
        let mut y = Array2::zeros((nx, ny));
        for i in 0..nx {
            for j in 0..ny {
                let p = transfinite_map(&spec, i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64)?;
                x[[i, j]] = p[0];
                y[[i, j]] = p[1];
            }
        }
        Ok(Self { spec, x, y })
    }

    pub fn n_xi(&self) -> usize {
        self.spec.n_xi
    }

    pub fn n_eta(&self) -> usize {
        self.spec.n_eta
    }

    /// Number of points along a side.
    pub fn side_len(&self, side: Side) -> usize {
        match side.normal_axis() {
            0 => self.n_eta(),
            _ => self.n_xi(),
        }
    }

    /// Grid points along a side in increasing tangential index.
    pub fn trace(&self, side: Side) -> Vec<Point> {
        let (nx, ny) = (self.n_xi(), self.n_eta());
        match side {
            Side::South => (0..nx).map(|i| [self.x[[i, 0]], self.y[[i, 0]]]).collect(),
            Side::North => (0..nx).map(|i| [self.x[[i, ny - 1]], self.y[[i, ny - 1]]]).collect(),
            Side::West => (0..ny).map(|j| [self.x[[0, j]], self.y[[0, j]]]).collect(),
            Side::East => (0..ny).map(|j| [self.x[[nx - 1, j]], self.y[[nx - 1, j]]]).collect(),
        }
    }

    /// Smallest corner cross product of the bilinear cell maps, normalized by the cell's
    /// squared diagonal. Positive for an unfolded, positively oriented grid.
    pub fn min_jacobian(&self) -> f64 {
        let mut m = f64::INFINITY;
        let p = |i: usize, j: usize| [self.x[[i, j]], self.y[[i, j]]];
        for i in 0..self.n_xi() - 1 {
            for j in 0..self.n_eta() - 1 {
                let c = [p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1)];
                let scale = dist(c[0], c[2]).powi(2).max(dist(c[1], c[3]).powi(2));
                for k in 0..4 {
                    let (a, b, o) = (c[(k + 1) % 4], c[(k + 3) % 4], c[k]);
                    let cross = (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
                    m = m.min(cross / scale);
                }
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterfaceKind {
    Conforming,
    #[serde(rename = "ratio-1:2")]
    Ratio12,
    Glue,
}

/// A matched piece of two block sides. Ranges are inclusive trace node indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub a: (usize, Side),
    pub b: (usize, Side),
    pub kind: InterfaceKind,
    pub range_a: (usize, usize),
    pub range_b: (usize, usize),
    /// True if the two traces run in opposite directions.
    pub reversed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Dirichlet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySegment {
    pub block: usize,
    pub side: Side,
    pub condition: BoundaryCondition,
}

#[derive(Clone, Debug)]
pub struct MultiBlockMesh {
    pub blocks: Vec<Block>,
    pub interfaces: Vec<Interface>,
    pub boundaries: Vec<BoundarySegment>,
}

#[derive(Serialize)]
struct Topology<'a> {
    blocks: Vec<(usize, usize)>,
    interfaces: &'a [Interface],
    boundaries: &'a [BoundarySegment],
}

fn find_node(trace: &[Point], p: Point, tol: f64) -> Option<usize> {
    trace.iter().position(|q| dist(*q, p) <= tol)
}

fn dist_to_polyline(trace: &[Point], p: Point) -> f64 {
    trace
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let ab = [b[0] - a[0], b[1] - a[1]];
            let l2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0);
            dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
        })
        .fold(f64::INFINITY, f64::min)
}

/// Tries to place trace `b` inside trace `a` with both ends on nodes of `a`.
fn match_traces(ta: &[Point], tb: &[Point], tol: f64) -> Option<(InterfaceKind, (usize, usize), bool)> {
    let i0 = find_node(ta, tb[0], tol)?;
    let i1 = find_node(ta, tb[tb.len() - 1], tol)?;
    if i0 == i1 {
        return None;
    }
    let reversed = i1 < i0;
    let range = (i0.min(i1), i0.max(i1));
    let na = range.1 - range.0 + 1;
    let nb = tb.len();
    let at = |k: usize| if reversed { ta[range.1 - k] } else { ta[range.0 + k] };
    let full = range == (0, ta.len() - 1);
    if full && na == nb && (0..nb).all(|k| dist(at(k), tb[k]) <= tol) {
        return Some((InterfaceKind::Conforming, range, reversed));
    }
    if full && nb == 2 * na - 1 && (0..na).all(|k| dist(at(k), tb[2 * k]) <= tol) {
        return Some((InterfaceKind::Ratio12, range, reversed));
    }
    if full && na == 2 * nb - 1 && (0..nb).all(|k| dist(at(2 * k), tb[k]) <= tol) {
        return Some((InterfaceKind::Ratio12, range, reversed));
    }
    // Glue: b must run along a.
    let seg: Vec<Point> = (0..na).map(at).collect();
    let len = dist(seg[0], seg[na - 1]);
    if tb.iter().all(|p| dist_to_polyline(&seg, *p) <= 1e-3 * len) {
        return Some((InterfaceKind::Glue, range, reversed));
    }
    None
}

impl MultiBlockMesh {
    /// Generates the blocks and detects interfaces; every other side is a Dirichlet boundary.
    pub fn from_specs(specs: Vec<BlockSpec>) -> Result<Self> {
        let blocks = specs.into_iter().map(Block::generate).collect::<Result<Vec<_>>>()?;
        let scale = blocks
            .iter()
            .flat_map(|b| b.x.iter().zip(b.y.iter()).map(|(x, y)| x.abs().max(y.abs())))
            .fold(1.0, f64::max);
        let tol = 1e-10 * scale;
        let mut interfaces = Vec::new();
        let sides: Vec<(usize, Side)> =
            (0..blocks.len()).flat_map(|k| Side::ALL.into_iter().map(move |s| (k, s))).collect();
        for (ia, &(ka, sa)) in sides.iter().enumerate() {
            for &(kb, sb) in &sides[ia + 1..] {
                if ka == kb {
                    continue;
                }
                let (ta, tb) = (blocks[ka].trace(sa), blocks[kb].trace(sb));
                if let Some((kind, range_a, reversed)) = match_traces(&ta, &tb, tol) {
                    interfaces.push(Interface {
                        a: (ka, sa),
                        b: (kb, sb),
                        kind,
                        range_a,
                        range_b: (0, tb.len() - 1),
                        reversed,
                    });
                } else if let Some((kind, range_b, reversed)) = match_traces(&tb, &ta, tol) {
                    interfaces.push(Interface {
                        a: (kb, sb),
                        b: (ka, sa),
                        kind,
                        range_a: range_b,
                        range_b: (0, ta.len() - 1),
                        reversed,
                    });
                }
            }
        }
        let mut boundaries = Vec::new();
        for &(k, s) in &sides {
            let touching: Vec<&Interface> = interfaces.iter().filter(|f| f.a == (k, s) || f.b == (k, s)).collect();
            if touching.is_empty() {
                boundaries.push(BoundarySegment { block: k, side: s, condition: BoundaryCondition::Dirichlet });
            }
        }
        let mesh = Self { blocks, interfaces, boundaries };
        mesh.check_coverage()?;
        Ok(mesh)
    }

    /// Every side must be boundary or exactly tiled by interface ranges.
    pub fn check_coverage(&self) -> Result<()> {
        for (k, b) in self.blocks.iter().enumerate() {
            for s in Side::ALL {
                let n = b.side_len(s);
                let mut ranges: Vec<(usize, usize)> = self
                    .interfaces
                    .iter()
                    .filter_map(|f| {
                        if f.a == (k, s) {
                            Some(f.range_a)
                        } else if f.b == (k, s) {
                            Some(f.range_b)
                        } else {
                            None
                        }
                    })
                    .collect();
                let is_bnd = self.boundaries.iter().any(|bs| bs.block == k && bs.side == s);
                if ranges.is_empty() {
                    if !is_bnd {
                        return Err(Error::CoverageGap(format!("block {k} {s:?} is neither interface nor boundary")));
                    }
                    continue;
                }
                if is_bnd {
                    return Err(Error::CoverageGap(format!("block {k} {s:?} is both interface and boundary")));
                }
                ranges.sort();
                let tiled = ranges[0].0 == 0
                    && ranges[ranges.len() - 1].1 == n - 1
                    && ranges.windows(2).all(|w| w[0].1 == w[1].0);
                if !tiled {
                    return Err(Error::CoverageGap(format!("block {k} {s:?} ranges {ranges:?} do not tile 0..{n}")));
                }
            }
        }
        Ok(())
    }

    pub fn total_points(&self) -> usize {
        self.blocks.iter().map(|b| b.spec.points()).sum()
    }

    /// Smallest grid spacing over all Cartesian blocks (both directions).
    pub fn min_spacing(&self) -> Option<f64> {
        self.blocks
            .iter()
            .map(|b| {
                let e = b.spec.cartesian_extent()?;
                Some(((e[1] - e[0]) / (b.n_xi() - 1) as f64).min((e[3] - e[2]) / (b.n_eta() - 1) as f64))
            })
            .try_fold(f64::INFINITY, |m, h| h.map(|h| m.min(h)))
    }

    /// Writes `block_<k>.csv` (`block_id,i,j,x,y`) per block and `topology.json`.
    pub fn export(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (k, b) in self.blocks.iter().enumerate() {
            let mut s = String::from("block_id,i,j,x,y\n");
            for i in 0..b.n_xi() {
                for j in 0..b.n_eta() {
                    writeln!(s, "{k},{i},{j},{:.17e},{:.17e}", b.x[[i, j]], b.y[[i, j]]).unwrap();
                }
            }
            crate::io::write_atomic(dir.join(format!("block_{k}.csv")), s.as_bytes())?;
        }
        let topo = Topology {
            blocks: self.blocks.iter().map(|b| (b.n_xi(), b.n_eta())).collect(),
            interfaces: &self.interfaces,
            boundaries: &self.boundaries,
        };
        let json = serde_json::to_string_pretty(&topo)?;
        crate::io::write_atomic(dir.join("topology.json"), json.as_bytes())?;
        Ok(())
    }
}

/// Halving rule: `n → 2n − 1` per refinement level.
pub fn refine_count(n: usize, r: u32) -> usize {
    (n - 1) * (1 << r) + 1
}

/// One rectangular block with Dirichlet sides.
pub fn build_single_block_mesh(x: (f64, f64), y: (f64, f64), n_x: usize, n_y: usize) -> Result<MultiBlockMesh> {
    MultiBlockMesh::from_specs(vec![BlockSpec::rectangle(x.0, x.1, y.0, y.1, n_x, n_y)?])
}

/// `[-1, 0] × [0, 1]` and `[0, 1] × [0, 1]` with `n_left²` and `n_right²` points.
pub fn build_two_block_mesh_with(n_left: usize, n_right: usize) -> Result<MultiBlockMesh> {
    MultiBlockMesh::from_specs(vec![
        BlockSpec::rectangle(-1.0, 0.0, 0.0, 1.0, n_left, n_left)?,
        BlockSpec::rectangle(0.0, 1.0, 0.0, 1.0, n_right, n_right)?,
    ])
}

/// Two-block convergence mesh: `(25·2^r+1)²` left, `(50·2^r+1)²` right.
pub fn build_two_block_mesh(r: u32) -> Result<MultiBlockMesh> {
    build_two_block_mesh_with(refine_count(26, r), refine_count(51, r))
}

/// Three-block T-junction mesh on `[-1, 1]²`.
pub fn build_tjunction_mesh(r: u32) -> Result<MultiBlockMesh> {
    let n = |v| refine_count(v, r);
    MultiBlockMesh::from_specs(vec![
        BlockSpec::rectangle(-1.0, 0.0, -1.0, 1.0, n(28), n(51))?,
        BlockSpec::rectangle(0.0, 1.0, 0.0, 1.0, n(27), n(25))?,
        BlockSpec::rectangle(0.0, 1.0, -1.0, 0.0, n(51), n(50))?,
    ])
}

/// The north block of the four around a circle of radius `a` inside the square of side `2D`.
/// `ξ` runs along the arc, `η` outward.
pub fn cavity_block(a: f64, d: f64, n_xi: usize, n_eta: usize) -> Result<BlockSpec> {
    let c = a / std::f64::consts::SQRT_2;
    BlockSpec::new(
        BoundaryCurve::ChordArc { center: [0.0, 0.0], from: [-c, c], to: [c, c] },
        BoundaryCurve::line([-d, d], [d, d]),
        BoundaryCurve::line([-c, c], [-d, d]),
        BoundaryCurve::line([c, c], [d, d]),
        n_xi,
        n_eta,
    )
}

/// Four blocks surrounding the circle: north, then successive counter-clockwise quarter turns.
pub fn ring_blocks(base: &BlockSpec) -> Vec<BlockSpec> {
    (0..4).map(|k| rotate_block(base, k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CavityStyle {
    N,
    T,
}

const CAVITY_D: f64 = 11.7;
const CAVITY_LEFT: f64 = -25.5;

/// Circular cavity of radius 1 in `[-25.5, 11.7] × [-11.7, 11.7]`.
pub fn build_cavity_mesh(style: CavityStyle) -> Result<MultiBlockMesh> {
    let big = CAVITY_D;
    let mut specs = Vec::new();
    match style {
        CavityStyle::N => {
            specs.extend(ring_blocks(&cavity_block(1.0, big, 181, 125)?));
        }
        CavityStyle::T => {
            let small = 1.3;
            specs.extend(ring_blocks(&cavity_block(1.0, small, 23, 20)?));
            for (x0, x1, nx) in [(-big, -small, 81), (-small, small, 23), (small, big, 81)] {
                for (y0, y1, ny) in [(-big, -small, 81), (-small, small, 23), (small, big, 81)] {
                    if nx == 23 && ny == 23 {
                        continue;
                    }
                    specs.push(BlockSpec::rectangle(x0, x1, y0, y1, nx, ny)?);
                }
            }
        }
    }
    specs.push(BlockSpec::rectangle(CAVITY_LEFT, -big, -big, big, 107, 181)?);
    MultiBlockMesh::from_specs(specs)
}

/// Circular inclusion of radius 1 in the square of side 2.6, with a Cartesian block
/// `[-5.9, -1.3] × [-1.3, 1.3]` attached on the left.
pub fn build_inclusion_mesh(conforming: bool) -> Result<MultiBlockMesh> {
    let (a, big) = (1.0, 1.3);
    let d = 0.35 * std::f64::consts::SQRT_2;
    let c = a / std::f64::consts::SQRT_2;
    let n_outer = if conforming { 101 } else { 51 };
    let mut specs = ring_blocks(&cavity_block(a, big, n_outer, 26)?);
    let ring = BlockSpec::new(
        BoundaryCurve::line([-a * d, a * d], [a * d, a * d]),
        BoundaryCurve::ChordArc { center: [0.0, 0.0], from: [-c, c], to: [c, c] },
        BoundaryCurve::line([-a * d, a * d], [-c, c]),
        BoundaryCurve::line([a * d, a * d], [c, c]),
        101,
        51,
    )?;
    specs.extend(ring_blocks(&ring));
    specs.push(BlockSpec::rectangle(-a * d, a * d, -a * d, a * d, 101, 101)?);
    let n_left = if conforming { 101 } else { 51 };
    specs.push(BlockSpec::rectangle(-5.9, -big, -big, big, 51, n_left)?);
    MultiBlockMesh::from_specs(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfinite_reproduces_unit_square_and_corners() {
        let s = BlockSpec::rectangle(0.0, 1.0, 0.0, 1.0, 5, 5).unwrap();
        for (xi, eta) in [(0.3, 0.7), (0.0, 1.0), (0.5, 0.5)] {
            let p = transfinite_map(&s, xi, eta).unwrap();
            assert!((p[0] - xi).abs() < 1e-15 && (p[1] - eta).abs() < 1e-15);
        }
        let c = cavity_block(1.0, 11.7, 5, 5).unwrap();
        assert_eq!(transfinite_map(&c, 0.0, 0.0).unwrap(), c.south.eval(0.0));
        assert_eq!(transfinite_map(&c, 1.0, 1.0).unwrap(), c.north.eval(1.0));
        assert!(matches!(transfinite_map(&c, 1.2, 0.0), Err(Error::ParameterOutOfRange { name: "xi", .. })));
    }

    #[test]
    fn cavity_south_edge_is_on_the_unit_circle() {
        let c = cavity_block(1.0, 11.7, 5, 5).unwrap();
        for k in 0..=50 {
            let xi = k as f64 / 50.0;
            let p = transfinite_map(&c, xi, 0.0).unwrap();
            assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            // Projection onto the chord moves linearly.
            let x = xi * std::f64::consts::SQRT_2 - 1.0 / std::f64::consts::SQRT_2;
            assert!((p[0] - x).abs() < 1e-14);
        }
    }

    #[test]
    fn rotations() {
        let c = cavity_block(1.0, 11.7, 5, 5).unwrap();
        let full = rotate_block(&c, 4);
        for s in [0.0, 0.3, 1.0] {
            for side in Side::ALL {
                let (a, b) = (c.curve(side).eval(s), full.curve(side).eval(s));
                assert!(dist(a, b) < 1e-12);
            }
        }
        let q = rotate_block(&c, 1);
        let p = q.south.eval(0.4);
        assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
        let h = rotate_block(&c, 2);
        let (a, b) = (c.north.eval(0.25), h.north.eval(0.25));
        assert!((a[0] + b[0]).abs() < 1e-12 && (a[1] + b[1]).abs() < 1e-12);
    }

    #[test]
    fn corner_mismatch_is_rejected() {
        let r = BlockSpec::new(
            BoundaryCurve::line([0.0, 0.0], [1.0, 0.0]),
            BoundaryCurve::line([0.0, 1.0], [1.0, 1.0]),
            BoundaryCurve::line([0.0, 0.0], [0.0, 1.0]),
            BoundaryCurve::line([1.0, 0.1], [1.0, 1.0]),
            3,
            3,
        );
        assert!(matches!(r, Err(Error::EndpointMismatch(_))));
    }

    #[test]
    fn two_block_topology() {
        let m = build_two_block_mesh(0).unwrap();
        assert_eq!((m.blocks[0].n_xi(), m.blocks[1].n_xi()), (26, 51));
        assert_eq!(m.interfaces.len(), 1);
        let f = &m.interfaces[0];
        assert_eq!((f.a, f.b, f.kind), ((0, Side::East), (1, Side::West), InterfaceKind::Ratio12));
        assert_eq!(m.boundaries.len(), 6);
        let m1 = build_two_block_mesh(1).unwrap();
        assert_eq!((m1.blocks[0].n_xi(), m1.blocks[1].n_eta()), (51, 101));
    }

    #[test]
    fn tjunction_topology() {
        let m = build_tjunction_mesh(0).unwrap();
        let counts: Vec<_> = m.blocks.iter().map(|b| (b.n_xi(), b.n_eta())).collect();
        assert_eq!(counts, vec![(28, 51), (27, 25), (51, 50)]);
        assert_eq!(m.interfaces.len(), 3);
        assert!(m.interfaces.iter().all(|f| f.kind == InterfaceKind::Glue));
        let on_left: Vec<_> = m.interfaces.iter().filter(|f| f.a == (0, Side::East)).map(|f| f.range_a).collect();
        assert_eq!(on_left.len(), 2);
        assert!(on_left.contains(&(25, 50)) && on_left.contains(&(0, 25)));
        let m1 = build_tjunction_mesh(1).unwrap();
        assert_eq!((m1.blocks[0].n_xi(), m1.blocks[0].n_eta()), (55, 101));
    }

    #[test]
    fn curved_meshes_are_unfolded() {
        for m in [build_inclusion_mesh(true).unwrap(), build_cavity_mesh(CavityStyle::T).unwrap()] {
            for b in &m.blocks {
                assert!(b.min_jacobian() > 0.0);
            }
        }
    }

    #[test]
    fn export_writes_csv_and_topology() {
        let dir = tempfile::tempdir().unwrap();
        let m = build_two_block_mesh(0).unwrap();
        m.export(dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("block_1.csv")).unwrap();
        assert!(csv.starts_with("block_id,i,j,x,y\n"));
        assert_eq!(csv.lines().count(), 51 * 51 + 1);
        let topo: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("topology.json")).unwrap()).unwrap();
        assert_eq!(topo["interfaces"][0]["kind"], "ratio-1:2");
    }
}
