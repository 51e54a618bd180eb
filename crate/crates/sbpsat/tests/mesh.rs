use sbpsat::interface::build_glue_grid;
use sbpsat::mesh::*;

#[test]
fn cavity_point_totals() {
    assert_eq!(build_cavity_mesh(CavityStyle::T).unwrap().total_points(), 54903);
    assert_eq!(build_cavity_mesh(CavityStyle::N).unwrap().total_points(), 109867);
}

#[test]
fn cavity_t_partitioning_has_one_t_junction() {
    let m = build_cavity_mesh(CavityStyle::T).unwrap();
    let rect = m.blocks.len() - 1;
    let facing: Vec<_> = m.interfaces.iter().filter(|f| f.a == (rect, Side::East)).collect();
    assert_eq!(facing.len(), 3);
    assert!(facing.iter().all(|f| f.kind == InterfaceKind::Glue));
    assert_eq!(m.interfaces.iter().filter(|f| f.kind == InterfaceKind::Glue).count(), 3);
}

#[test]
fn inclusion_block_counts() {
    let conf = build_inclusion_mesh(true).unwrap();
    let left = conf.blocks.last().unwrap();
    assert_eq!((left.n_xi(), left.n_eta()), (51, 101));
    assert_eq!(conf.total_points(), 46460);
    assert!(conf.interfaces.iter().all(|f| f.kind == InterfaceKind::Conforming));
    let nc = build_inclusion_mesh(false).unwrap();
    let left = nc.blocks.last().unwrap();
    assert_eq!((left.n_xi(), left.n_eta()), (51, 51));
    assert_eq!(nc.total_points(), 38710);
    assert_eq!(nc.interfaces.iter().filter(|f| f.kind == InterfaceKind::Ratio12).count(), 4);
}

#[test]
fn circle_traces_have_unit_radius() {
    for m in [
        build_inclusion_mesh(true).unwrap(),
        build_inclusion_mesh(false).unwrap(),
        build_cavity_mesh(CavityStyle::N).unwrap(),
    ] {
        let mut checked = 0;
        for b in &m.blocks {
            for side in Side::ALL {
                if matches!(b.spec.curve(side), BoundaryCurve::ChordArc { .. }) {
                    for p in b.trace(side) {
                        assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-10);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 0);
    }
}

#[test]
fn halving_rule_and_spacing_ratio() {
    for r in 0..3 {
        let m = build_two_block_mesh(r).unwrap();
        let (a, b) = (&m.blocks[0], &m.blocks[1]);
        assert_eq!(b.n_xi(), 2 * a.n_xi() - 1);
        let hl = a.x[[1, 0]] - a.x[[0, 0]];
        let hr = b.x[[1, 0]] - b.x[[0, 0]];
        assert!((hl - 2.0 * hr).abs() < 1e-14);
    }
    let t0 = build_tjunction_mesh(0).unwrap();
    let t1 = build_tjunction_mesh(1).unwrap();
    for (a, b) in t0.blocks.iter().zip(&t1.blocks) {
        assert_eq!(b.n_xi(), 2 * a.n_xi() - 1);
        assert_eq!(b.n_eta(), 2 * a.n_eta() - 1);
    }
}

#[test]
fn tjunction_glue_grid_is_the_union_of_three_traces() {
    let m = build_tjunction_mesh(0).unwrap();
    let left: Vec<f64> = m.blocks[0].trace(Side::East).iter().map(|p| p[1]).collect();
    let mut right: Vec<f64> = m.blocks[2].trace(Side::West).iter().map(|p| p[1]).collect();
    right.extend(m.blocks[1].trace(Side::West).iter().skip(1).map(|p| p[1]));
    let g = build_glue_grid(&left, &right).unwrap();
    // Oracle: count distinct values with a plain sort and dedup on a rounded key.
    let mut keys: Vec<i64> = left.iter().chain(&right).map(|y| (y * 1e9).round() as i64).collect();
    keys.sort();
    keys.dedup();
    assert_eq!(g.points.len(), keys.len());
    assert_ne!(left.len(), 25 + 50);
}

#[test]
fn cartesian_meshes_are_unfolded() {
    for m in [build_two_block_mesh(1).unwrap(), build_tjunction_mesh(1).unwrap()] {
        for b in &m.blocks {
            assert!(b.min_jacobian() > 0.0);
            assert!(b.spec.cartesian_extent().is_some());
        }
    }
}
