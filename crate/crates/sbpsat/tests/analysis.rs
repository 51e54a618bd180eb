use rand::{Rng, SeedableRng};
use sbpsat::analysis::*;
use sbpsat::discretization::*;
use sbpsat::mesh::*;
use sbpsat::timestepping::ManufacturedSolution;
use sbpsat::Error;
use std::f64::consts::PI;

fn random(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn energy_is_nonnegative_over_random_states() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(3);
    for (mesh, family) in [
        (build_two_block_mesh_with(14, 27).unwrap(), TransferFamily::Interpolation),
        (build_two_block_mesh_with(14, 27).unwrap(), TransferFamily::Projection),
        (build_tjunction_mesh(0).unwrap(), TransferFamily::Projection),
    ] {
        for order in [2, 4] {
            let sys = assemble(&mesh, &AssemblyOptions::new(order, family), None).unwrap();
            for _ in 0..1000 / 6 + 1 {
                let z = random(&mut rng, sys.len());
                let e = discrete_energy(&sys, &z, &vec![0.0; sys.len()], 0.0).unwrap();
                assert!(e.e >= 0.0, "{family:?} order {order}: {e:?}");
            }
        }
    }
}

#[test]
fn energy_trivial_states() {
    let mesh = build_two_block_mesh_with(14, 27).unwrap();
    let sys = assemble(&mesh, &AssemblyOptions::new(4, TransferFamily::Projection), None).unwrap();
    let zero = vec![0.0; sys.len()];
    assert_eq!(discrete_energy(&sys, &zero, &zero, 0.0).unwrap().e, 0.0);
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let zt = random(&mut rng, sys.len());
    let e = discrete_energy(&sys, &zero, &zt, 0.0).unwrap();
    let expect: f64 = zt.iter().zip(&sys.h).map(|(v, w)| w * v * v).sum();
    assert!(e.e > 0.0 && (e.e - expect).abs() <= 1e-14 * expect);
    assert!(matches!(discrete_energy(&sys, &zero[1..], &zero, 0.0), Err(Error::LengthMismatch { .. })));
}

#[test]
fn displayed_energy_terms_sum_to_the_total() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(8);
    let mesh = build_two_block_mesh_with(14, 27).unwrap();
    for family in [TransferFamily::Interpolation, TransferFamily::Projection] {
        for order in [2, 4] {
            let sys = assemble(&mesh, &AssemblyOptions::new(order, family), None).unwrap();
            let (l, r) = (sys.blocks[0].len(), sys.blocks[1].len());
            let (u, v, ut, vt) = (random(&mut rng, l), random(&mut rng, r), random(&mut rng, l), random(&mut rng, r));
            let terms = two_block_energy_terms(&sys, &u, &v, &ut, &vt).unwrap();
            assert_eq!(terms.terms.len(), 11);
            let z: Vec<f64> = u.iter().chain(&v).copied().collect();
            let zt: Vec<f64> = ut.iter().chain(&vt).copied().collect();
            let e = discrete_energy(&sys, &z, &zt, 0.0).unwrap();
            assert!(
                (terms.total() - e.e).abs() <= 1e-10 * e.e.abs(),
                "{family:?} {order}: {} vs {}",
                terms.total(),
                e.e
            );
        }
    }
}

#[test]
fn single_block_dirichlet_spectrum_matches_laplacian() {
    let n = 41;
    let mesh = build_single_block_mesh((0.0, 1.0), (0.0, 1.0), n, n).unwrap();
    let sys = assemble(&mesh, &AssemblyOptions::new(2, TransferFamily::Projection), None).unwrap();
    let rep = spectrum(&sys).unwrap();
    assert!(rep.is_real(1e-8), "{:e}", rep.max_abs_imag);
    assert!(rep.max_real < 0.0);
    let mut ev: Vec<f64> = rep.eigenvalues.iter().map(|l| l.re).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut exact: Vec<f64> = (1..6).flat_map(|k| (1..6).map(move |l| -PI * PI * (k * k + l * l) as f64)).collect();
    exact.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for (a, b) in ev.iter().zip(&exact).take(6) {
        assert!((a - b).abs() <= 0.01 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn tjunction_order4_spectrum_is_real_and_nonpositive() {
    // Half-resolution version of the T-junction layout; the full one runs in the acceptance suite.
    let mesh = MultiBlockMesh::from_specs(vec![
        BlockSpec::rectangle(-1.0, 0.0, -1.0, 1.0, 15, 29).unwrap(),
        BlockSpec::rectangle(0.0, 1.0, 0.0, 1.0, 14, 14).unwrap(),
        BlockSpec::rectangle(0.0, 1.0, -1.0, 0.0, 28, 27).unwrap(),
    ])
    .unwrap();
    assert_eq!(mesh.interfaces.len(), 3);
    assert!(mesh.interfaces.iter().all(|i| i.kind == InterfaceKind::Glue));
    let sys = assemble(&mesh, &AssemblyOptions::new(4, TransferFamily::Projection), None).unwrap();
    let rep = spectrum(&sys).unwrap();
    assert!(rep.is_real(1e-8), "{:e}", rep.max_abs_imag);
    assert!(rep.max_real <= 1e-8, "{}", rep.max_real);
}

#[test]
fn spectrum_guards_large_systems() {
    let sys = assemble(&build_two_block_mesh(1).unwrap(), &AssemblyOptions::new(2, TransferFamily::Projection), None)
        .unwrap();
    assert!(matches!(spectrum(&sys), Err(Error::SystemTooLarge { .. })));
}

#[test]
fn interpolant_error_against_itself_is_zero() {
    let sys = assemble(&build_two_block_mesh(0).unwrap(), &AssemblyOptions::new(2, TransferFamily::Projection), None)
        .unwrap();
    let u = sys.sample(|x, y| ManufacturedSolution::u(x, y, 0.0));
    assert_eq!(system_error_norms(&sys, &u, &u, 1.0).unwrap(), (0.0, 0.0));
}

#[test]
fn single_point_defect() {
    let n = 50;
    let u = vec![0.3; n];
    let mut w = u.clone();
    w[17] += 2e-3;
    let (l2, mx) = error_norms(&w, &u, 0.02, 2, 1.0).unwrap();
    assert!((l2 - 0.02 * 2e-3).abs() < 1e-15);
    assert!((mx - 2e-3).abs() < 1e-15);
}

#[test]
fn multiblock_norm_reduces_to_single_grid() {
    let sys = assemble(
        &build_two_block_mesh_with(11, 11).unwrap(),
        &AssemblyOptions::new(2, TransferFamily::Projection),
        None,
    )
    .unwrap();
    let mut rng = rand::rngs::StdRng::seed_from_u64(2);
    let (a, b) = (random(&mut rng, sys.len()), random(&mut rng, sys.len()));
    let (l2, _) = system_error_norms(&sys, &a, &b, 1.0).unwrap();
    let (flat, _) = error_norms(&a, &b, 0.1, 2, 1.0).unwrap();
    assert!((l2 - flat).abs() < 1e-14);
}
