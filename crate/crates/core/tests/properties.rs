//! Property tests for mesh, assembly, solver and schedule invariants.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use phasefrac::baselines::scaled_energy;
use phasefrac::config::parse_config;
use phasefrac::mesh::{generate_fiber_composite, generate_square, split_top_edge};
use phasefrac::staggered::{staggered_solve, Irreversibility, SolveSettings};
use phasefrac::{BcRule, Discretization, Energy, FieldState, LinearSolverKind, LoadSchedule, MaterialParams, Mesh, ModelKind};

fn check_mesh(mesh: &Mesh) -> Result<(), TestCaseError> {
    let n = mesh.num_nodes();
    for e in 0..mesh.num_triangles() {
        prop_assert!(mesh.signed_area(e) > 0.0, "triangle {e} has area {}", mesh.signed_area(e));
        prop_assert!(mesh.triangles[e].iter().all(|&v| v < n));
    }
    for nodes in mesh.node_sets.values() {
        prop_assert!(nodes.iter().all(|&v| v < n));
    }
    Ok(())
}

/// Every boundary node belongs to exactly one of the given sets.
fn check_partition(mesh: &Mesh, sets: &[&str]) -> Result<(), TestCaseError> {
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for s in sets {
        for &v in mesh.node_set(s).unwrap() {
            *count.entry(v).or_default() += 1;
        }
    }
    for v in mesh.boundary_nodes() {
        prop_assert_eq!(count.get(&v).copied(), Some(1), "boundary node {}", v);
    }
    Ok(())
}

fn lcg(seed: u64) -> impl FnMut() -> f64 {
    let mut x = seed;
    move || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((x >> 11) as f64) / ((1u64 << 53) as f64)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn square_meshes_are_valid_and_exact(side in 0.5f64..50.0, cells in 2usize..24) {
        let mesh = generate_square(side, side / cells as f64, None).unwrap();
        check_mesh(&mesh)?;
        check_partition(&mesh, &["top", "bottom", "left", "right"])?;
        prop_assert!((mesh.total_area() - side * side).abs() <= 1e-12 * side * side);
    }

    #[test]
    fn holed_meshes_match_the_analytic_area(side in 1.0f64..10.0, frac in 0.1f64..0.4, cells in 20usize..50) {
        let r = frac * side;
        let h = side / cells as f64;
        prop_assume!(h <= r / 10.0);
        let mesh = generate_square(side, h, Some(r)).unwrap();
        check_mesh(&mesh)?;
        check_partition(&mesh, &["top", "bottom", "left", "right", "hole"])?;
        let exact = side * side - std::f64::consts::PI * r * r;
        prop_assert!((mesh.total_area() - exact).abs() <= 0.01 * exact);
        for &v in mesh.node_set("hole").unwrap() {
            let p = mesh.nodes[v];
            prop_assert!((p[0].hypot(p[1]) - r).abs() <= h * h / r);
        }
    }

    #[test]
    fn fiber_meshes_are_valid(side in 1.0f64..6.0, frac in 0.1f64..0.4, cells in 20usize..40) {
        let r = frac * side;
        let mesh = generate_fiber_composite(side, r, side / cells as f64).unwrap();
        check_mesh(&mesh)?;
        prop_assert!(!mesh.node_set("fiber").unwrap().is_empty());
    }

    #[test]
    fn split_halves_are_disjoint(side in 0.5f64..5.0, cells in 2usize..30) {
        let base = generate_square(side, side / cells as f64, None).unwrap();
        let mesh = split_top_edge(&base).unwrap();
        check_mesh(&mesh)?;
        let left = mesh.node_set("top_left_half").unwrap();
        let right = mesh.node_set("top_right_half").unwrap();
        prop_assert!(left.iter().all(|v| !right.contains(v)));
        let tol = 1e-9 * side;
        prop_assert!(left.iter().all(|&v| mesh.nodes[v][0] <= tol));
        prop_assert!(right.iter().all(|&v| mesh.nodes[v][0] >= -tol));
        let duplicated = mesh.num_nodes() - base.num_nodes();
        prop_assert_eq!(duplicated, usize::from(cells % 2 == 0));
    }

    #[test]
    fn tangents_are_symmetric_and_phase_tangent_is_positive(
        seed in any::<u64>(),
        ell in 0.05f64..0.5,
        scale in 1e-4f64..1e-1,
        anti_plane in any::<bool>(),
    ) {
        let mesh = Arc::new(generate_square(1.0, 0.2, None).unwrap());
        let (kind, mat) = if anti_plane {
            (ModelKind::AntiPlaneScalar, MaterialParams::anti_plane(1.0, 1.0, ell).unwrap().with_anisotropy(0.7, 0.3).unwrap())
        } else {
            (ModelKind::PlaneStrainVector, MaterialParams::plane_strain(100.0, 0.3, 1.0, ell).unwrap())
        };
        let disc = Discretization::new(mesh, kind, &[], LinearSolverKind::Cholesky).unwrap();
        let mut next = lcg(seed);
        let mut st = FieldState::zeros(&disc);
        st.u.iter_mut().for_each(|u| *u = scale * (next() - 0.5));
        st.d.iter_mut().for_each(|d| *d = next());
        let ku = disc.tangent_u(&st, &mat).unwrap();
        let kd = disc.tangent_d(&st, &mat).unwrap();
        prop_assert!(ku.asymmetry() <= 1e-12 * ku.max_abs());
        prop_assert!(kd.asymmetry() <= 1e-12 * kd.max_abs());
        for _ in 0..4 {
            let x: Vec<f64> = (0..disc.num_nodes()).map(|_| next() - 0.5).collect();
            let q: f64 = kd.mul_vec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
            prop_assert!(q > 0.0);
        }
        let en = disc.energy(&st, &mat).unwrap();
        prop_assert!(en.elastic >= 0.0 && en.surface >= 0.0);
        prop_assert_eq!(en.total(), en.elastic + en.surface);
    }

    #[test]
    fn staggered_solves_keep_bounds_and_descend(
        load in 0.0f64..0.2,
        floor_seed in any::<u64>(),
        with_floor in any::<bool>(),
    ) {
        let mesh = Arc::new(generate_square(1.0, 0.125, None).unwrap());
        let bc = [BcRule::new("bottom", 0, 0.0), BcRule::new("bottom", 1, 0.0), BcRule::new("top", 1, 1.0)];
        let disc = Discretization::new(mesh, ModelKind::PlaneStrainVector, &bc, LinearSolverKind::Cholesky).unwrap();
        let mat = MaterialParams::plane_strain(100.0, 0.3, 1.0, 0.1).unwrap();
        let mut next = lcg(floor_seed);
        let floor: Vec<f64> = (0..disc.num_nodes()).map(|_| if next() < 0.2 { 0.8 * next() } else { 0.0 }).collect();
        let mut settings = SolveSettings::default();
        if with_floor {
            settings = settings.with_irreversibility(Irreversibility::LowerBound(floor.clone()));
        }
        let init = FieldState { u: vec![0.0; disc.num_u_dofs()], d: if with_floor { floor.clone() } else { vec![0.0; disc.num_nodes()] } };
        let a = staggered_solve(&disc, &init, &mat, load, &settings).unwrap();
        let b = staggered_solve(&disc, &init, &mat, load, &settings).unwrap();
        prop_assert!(a.state.d.iter().all(|&d| (0.0..=1.0).contains(&d)));
        if with_floor {
            prop_assert!(a.state.d.iter().zip(&floor).all(|(d, f)| d >= f));
        }
        prop_assert!(a.max_energy_rise <= 1e-12);
        for w in a.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
        prop_assert_eq!(&a.state, &b.state);
        prop_assert_eq!(a.energy, b.energy);
    }

    #[test]
    fn schedules_must_increase_from_nonnegative(loads in proptest::collection::vec(-1.0f64..1.0, 1..12)) {
        let valid = loads[0] >= 0.0 && loads.windows(2).all(|w| w[1] > w[0]);
        prop_assert_eq!(LoadSchedule::new(loads).is_ok(), valid);
    }

    #[test]
    fn scaled_energy_is_quadratic_in_the_load(el in 0.0f64..1e3, su in 0.0f64..1e3, t in 0.01f64..10.0, s in 0.01f64..10.0) {
        let e = Energy { elastic: el, surface: su };
        let direct = scaled_energy(&e, t, s * t);
        prop_assert!((direct - (s * s * el + su)).abs() <= 1e-12 * (s * s * el + su).max(1e-300));
        prop_assert!((scaled_energy(&e, t, t) - e.total()).abs() <= 1e-12 * e.total().max(1e-300));
    }

    #[test]
    fn config_alpha_must_be_positive(alpha in -10.0f64..10.0) {
        let text = format!("preset = ex3\ndriver = standard\nalpha = {alpha}\n");
        prop_assert_eq!(parse_config(&text).is_ok(), alpha > 0.0);
    }

    #[test]
    fn unknown_config_keys_are_rejected_with_their_line(key in "[a-z]{3,8}\\.[a-z]{3,8}", pad in 0usize..5) {
        prop_assume!(!matches!(key.split('.').next(), Some("geometry" | "material" | "schedule" | "solver" | "guess" | "fracture" | "output" | "phase")));
        let mut text = String::from("preset = ex1\ndriver = standard\n");
        text.push_str(&"# comment\n".repeat(pad));
        text.push_str(&format!("{key} = 1\n"));
        let err = parse_config(&text).unwrap_err();
        prop_assert!(matches!(err, phasefrac::Error::Config { line, .. } if line == 3 + pad), "{}", err);
    }
}
