use std::f64::consts::TAU;

use nalgebra::Matrix2;
use proptest::prelude::*;

use slabforge::coupling::{annulus_radii, build_level, compute_force_moment, polygon_segments, FluidParams};
use slabforge::extrude::{validate_slab, BlockConnectivityCache};
use slabforge::geometry::Point;
use slabforge::io;
use slabforge::mesh::{assign_chainsaw_ids, build_annulus_mesh, generate_mesh, is_chainsaw, BodyShape, MeshParams};
use slabforge::rigid_body::{backfill, implicit_bdf2, increment, integrate_dof, DofParams, DofState, StepControl, Startup};
use slabforge::sliding::AnnulusState;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rotating_annulus_slabs_conform(
        half in 4usize..16,
        r0 in 0.5f64..2.0,
        a1 in 0.5f64..1.5,
        a2 in 0.5f64..1.5,
        steps in prop::collection::vec(-0.49f64..0.49, 1..12),
    ) {
        // Layer widths comparable to the cell arc length.
        let n = 2 * half;
        let arc = r0 * TAU / n as f64;
        let (w1, w2) = (a1 * arc, a2 * arc);
        let mesh = build_annulus_mesh(Point::new(0.2, -0.3), r0, r0 + w1, r0 + w1 + w2, n).unwrap();
        let (a, b, c, m) = annulus_radii(&mesh).unwrap();
        let cache = BlockConnectivityCache::derive(a, b, c, m).unwrap();
        let pitch = TAU / n as f64;
        let mut cur = mesh;
        let mut ann = AnnulusState::from_mesh(&cur).unwrap();
        for (k, f) in steps.iter().enumerate() {
            let level = build_level(&cur, Some(&ann), None, 0.0, 0.0, f * pitch, (k + 1) as f64, Some(&cache)).unwrap();
            let report = validate_slab(&level.slab);
            prop_assert!(report.is_empty(), "slab {k}: {:?}", report.violations.first());
            prop_assert_eq!(level.mesh.id_base, cur.id_base + cur.n_vertices());
            prop_assert_eq!(&level.slab.top, &level.mesh.positions);
            prop_assert_eq!(&level.slab.bottom, &cur.positions);
            cur = level.mesh;
            ann = level.annulus.unwrap();
        }
    }

    #[test]
    fn generated_mesh_round_trips(half_theta in 4usize..20, layers in 1usize..5, hw in 0.2f64..1.0, hh in 0.2f64..1.0) {
        let m = generate_mesh(&MeshParams {
            center: Point::new(1.0, 2.0),
            n_theta: 2 * half_theta,
            body: BodyShape::Rectangle { half_width: hw, half_height: hh },
            inner_layers: layers,
            annulus: Some((2.0, 2.3, 2.6)),
            r_far: 5.0,
            outer_layers: 2,
        })
        .unwrap();
        let text = io::mesh_to_string(&m);
        prop_assert_eq!(&io::mesh_from_str(&text).unwrap(), &m);
        prop_assert_eq!(io::mesh_to_string(&io::mesh_from_str(&text).unwrap()), text);
    }

    #[test]
    fn chainsaw_pools_stay_chainsaw(half in 2usize..60, base in 0usize..1000) {
        let pool: Vec<usize> = (base..base + 2 * half).collect();
        let ring = assign_chainsaw_ids(2 * half, &pool).unwrap();
        prop_assert!(is_chainsaw(&ring));
        let mut sorted = ring.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, pool);
    }

    #[test]
    fn fixed_point_matches_implicit(
        m in 0.5f64..50.0,
        c in 0.0f64..2.0,
        k in 0.0f64..5.0,
        load in -3.0f64..3.0,
        v0 in -1.0f64..1.0,
        r0 in -1.0f64..1.0,
    ) {
        let p = DofParams::new(m, c, k).unwrap();
        let dt = 0.05;
        let tol = 1e-12;
        let ctl = StepControl { dt, tolerance: tol, max_iters: 200, startup: Startup::Taylor };
        let state = DofState::new(0.0, v0, r0);
        let step = integrate_dof(&p, &state, load, |_, _| load, &ctl).unwrap();
        let prev = backfill(&p, v0, r0, load, dt, Startup::Taylor);
        let direct = implicit_bdf2(&p, (v0, r0), prev, load, dt);
        prop_assert!(increment(direct, (step.value, step.rate)) <= 10.0 * tol);
    }

    #[test]
    fn constant_pressure_gives_no_load(
        sides in 3usize..24,
        radius in 0.1f64..5.0,
        cx in -3.0f64..3.0,
        cy in -3.0f64..3.0,
        p in -10.0f64..10.0,
        q in 2usize..6,
    ) {
        let poly: Vec<Point> = (0..sides)
            .map(|i| {
                let a = TAU * i as f64 / sides as f64;
                Point::new(cx + radius * a.cos(), cy + radius * a.sin())
            })
            .collect();
        let fm = compute_force_moment(&polygon_segments(&poly), q, &|_| (p, Matrix2::zeros()), &FluidParams::default(), &Point::new(cx, cy))
            .unwrap();
        let scale = p.abs().max(1.0) * radius * radius.max(1.0);
        prop_assert!(fm.force.norm() <= 1e-13 * scale * sides as f64);
        prop_assert!(fm.moment.abs() <= 1e-13 * scale * sides as f64);
    }
}
