//! Acceptance suite. Each test prints one `PASS` or `FAIL` line for its criterion, then asserts.
//! Run with `cargo test -p slabforge --test acceptance -- --nocapture --test-threads=1`.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slabforge::coupling::{
    annulus_radii, build_level, compute_force_moment, polygon_segments, run_simulation, CouplingConfig, FluidParams,
    Harmonic, MotionBoxes, ProviderSpec, TimeGrid,
};
use slabforge::extrude::{
    all_prism_cuts, block::check_block, cut_prism, extrude_slab, is_valid_cut, reference_block, select_configuration,
    validate_slab, BlockConnectivityCache, SpaceTimeSlab,
};
use slabforge::geometry::{lift, signed_area, simpson_polygon_volume, tet_volume, Point, StPoint};
use slabforge::io;
use slabforge::mesh::{build_annulus_mesh, generate_mesh, BodyShape, MeshParams};
use slabforge::motion::{advance_vertices, AxisBox, MotionMap, Rotation};
use slabforge::rigid_body::{
    backfill, implicit_bdf2, increment, integrate_dof, DofParams, DofState, StepControl, Startup,
};
use slabforge::sliding::{min_sliding_quality, AnnulusState, SwapDirection};
use slabforge::SpatialMesh;

const CENSUS_BUDGET: Duration = Duration::from_millis(1);
const PRISM_COUNT: usize = 1000;
const PRISM_REL_TOL: f64 = 1e-12;
const PRISM_BUDGET: Duration = Duration::from_secs(1);
const REVOLUTION_QUADS: usize = 100;
const REVOLUTION_SLABS: usize = 450;
const REVOLUTION_BUDGET: Duration = Duration::from_secs(60);
const VOLUME_TOL: f64 = 1e-12;
// Wobble period in slabs (divides the slab count) and its peak rate in pitches per slab.
const WOBBLE_PERIOD: f64 = 50.0;
const WOBBLE_RATE: f64 = 0.27;
const NO_SWAP_FRACTION: f64 = 0.45;
const QUALITY_FRACTION: f64 = 0.5;
const BLOCK_BUDGET: Duration = Duration::from_secs(5);
const BLOCK_VOLUME_TOL: f64 = 1e-12;
const ORDER_RANGE: (f64, f64) = (1.8, 2.2);
const FREQUENCY_REL_TOL: f64 = 0.01;
const ODE_TOLERANCE: f64 = 1e-13;
const STAGGERED_TOLERANCE: f64 = 1e-5;
const STAGGERED_STEPS: usize = 200;
const FORCE_ZERO_TOL: f64 = 1e-13;
const FORCE_LINEAR_TOL: f64 = 1e-12;

// Rotational galloping annulus radii.
const R_ROT: f64 = 4.4;
const R_MID: f64 = 4.7;
const R_OUT: f64 = 5.0;

fn report(id: &str, ok: bool, detail: String) {
    println!("{} criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn galloping_annulus() -> SpatialMesh {
    build_annulus_mesh(Point::origin(), R_ROT, R_MID, R_OUT, REVOLUTION_QUADS).unwrap()
}

fn cache_for(mesh: &SpatialMesh) -> BlockConnectivityCache {
    let (r0, r1, r2, n) = annulus_radii(mesh).unwrap();
    BlockConnectivityCache::derive(r0, r1, r2, n).unwrap()
}

struct Revolution {
    slabs: Vec<SpaceTimeSlab>,
    swaps: usize,
    configurations: BTreeSet<usize>,
    max_step_over_pitch: f64,
    min_quality: f64,
}

/// Rotate through the angle schedule `theta(n)`, one slab per entry.
fn revolve(theta: impl Fn(usize) -> f64, slabs: usize) -> Revolution {
    let mesh = galloping_annulus();
    let cache = cache_for(&mesh);
    let pitch = TAU / REVOLUTION_QUADS as f64;
    let mut cur = mesh;
    let mut ann = AnnulusState::from_mesh(&cur).unwrap();
    let mut out = Revolution {
        slabs: Vec::with_capacity(slabs),
        swaps: 0,
        configurations: BTreeSet::new(),
        max_step_over_pitch: 0.0,
        min_quality: min_sliding_quality(&cur),
    };
    for n in 0..slabs {
        let dtheta = theta(n + 1) - theta(n);
        out.max_step_over_pitch = out.max_step_over_pitch.max(dtheta.abs() / pitch);
        let level = build_level(&cur, Some(&ann), None, 0.0, 0.0, dtheta, (n + 1) as f64, Some(&cache)).unwrap();
        if level.swap.is_some() {
            out.swaps += 1;
            out.configurations.extend(level.slab.columns.iter().map(|c| c.configuration).filter(|&c| c > 0));
        }
        out.min_quality = out.min_quality.min(min_sliding_quality(&level.mesh));
        out.slabs.push(level.slab);
        cur = level.mesh;
        ann = level.annulus.unwrap();
    }
    out
}

#[test]
fn criterion_1_valid_cut_census() {
    let start = Instant::now();
    let cuts = all_prism_cuts();
    let valid = cuts.iter().filter(|c| is_valid_cut(c)).count();
    let elapsed = start.elapsed();
    // The invalid ones are the two perfect matchings: no vertex touches two diagonals.
    let matchings = cuts
        .iter()
        .filter(|c| {
            let mut seen = [0; 6];
            c.iter().for_each(|&(a, b)| {
                seen[a as usize] += 1;
                seen[b as usize] += 1;
            });
            seen.iter().all(|&s| s == 1)
        })
        .count();
    let ok = cuts.len() == 8 && valid == 6 && matchings == 2 && elapsed < CENSUS_BUDGET;
    report("1", ok, format!("{valid} valid of {}, {matchings} perfect matchings, {elapsed:?}", cuts.len()));
    assert!(ok);
}

struct PrismSample {
    tets: [f64; 3],
    simpson: f64,
    twist: f64,
}

fn random_prisms(seed: u64) -> Vec<PrismSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_v = 1000;
    let mut out = Vec::with_capacity(PRISM_COUNT);
    while out.len() < PRISM_COUNT {
        let mut ids = [0usize; 3];
        ids[0] = rng.gen_range(0..n_v);
        ids[1] = loop {
            let v = rng.gen_range(0..n_v);
            if v != ids[0] {
                break v;
            }
        };
        ids[2] = loop {
            let v = rng.gen_range(0..n_v);
            if v != ids[0] && v != ids[1] {
                break v;
            }
        };
        let mut b: Vec<Point> = (0..3).map(|_| Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        if signed_area(&b[0], &b[1], &b[2]) < 0.0 {
            b.swap(1, 2);
            ids.swap(1, 2);
        }
        let scale = signed_area(&b[0], &b[1], &b[2]).sqrt();
        if scale < 0.2 {
            continue;
        }
        let top: Vec<Point> = b
            .iter()
            .map(|p| p + nalgebra::Vector2::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)) * scale)
            .collect();
        let dt = rng.gen_range(0.1..1.0);
        let pos = |id: usize| -> StPoint {
            match (0..3).find(|&i| ids[i] == id) {
                Some(i) => lift(0.0, &b[i]),
                None => lift(dt, &top[(0..3).find(|&i| ids[i] + n_v == id).unwrap()]),
            }
        };
        let cut = cut_prism(ids, n_v);
        let tets = cut.map(|t| tet_volume(&pos(t[0]), &pos(t[1]), &pos(t[2]), &pos(t[3])));
        let mut twist = 0.0;
        for i in 0..3 {
            let (u, v) = (ids[i], ids[(i + 1) % 3]);
            let (pu, pv) = (pos(u), pos(v));
            let vf = tet_volume(&StPoint::zeros(), &(pv - pu), &(pos(v + n_v) - pu), &(pos(u + n_v) - pu));
            twist += if u < v { -0.5 * vf } else { 0.5 * vf };
        }
        out.push(PrismSample { tets, simpson: simpson_polygon_volume(&b, &top, dt), twist });
    }
    out
}

#[test]
fn criterion_2_smallest_identifier_decomposition() {
    let start = Instant::now();
    let prisms = random_prisms(2);
    let elapsed = start.elapsed();
    let positive = prisms.iter().all(|p| p.tets.iter().all(|&v| v > 0.0));
    let worst = prisms
        .iter()
        .map(|p| (p.tets.iter().sum::<f64>() - p.simpson).abs() / p.simpson)
        .fold(0.0, f64::max);
    let ok = positive && worst <= PRISM_REL_TOL && elapsed < PRISM_BUDGET;
    report(
        "2",
        ok,
        format!("{PRISM_COUNT} prisms, all positive {positive}, worst |sum - area integral| / integral {worst:.3e} (limit {PRISM_REL_TOL:e}), {elapsed:?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_2_companion_twist_corrected_identity() {
    let prisms = random_prisms(2);
    let positive = prisms.iter().all(|p| p.tets.iter().all(|&v| v > 0.0));
    let worst = prisms
        .iter()
        .map(|p| (p.tets.iter().sum::<f64>() - p.simpson - p.twist).abs() / p.simpson)
        .fold(0.0, f64::max);
    let ok = positive && worst <= PRISM_REL_TOL;
    report(
        "2 (twist-corrected companion)",
        ok,
        format!("worst |sum - area integral - lateral twist| / integral {worst:.3e} (limit {PRISM_REL_TOL:e})"),
    );
    assert!(ok);
}

#[test]
fn criterion_3_full_revolution_conformity() {
    let pitch = TAU / REVOLUTION_QUADS as f64;
    // A steady drift plus a wobble: net angle 2π, with both directions of sliding.
    let omega = TAU / REVOLUTION_SLABS as f64;
    let wobble = WOBBLE_RATE * pitch * WOBBLE_PERIOD / TAU;
    let theta = |n: usize| omega * n as f64 + wobble * (TAU * n as f64 / WOBBLE_PERIOD).sin();
    let start = Instant::now();
    let rev = revolve(theta, REVOLUTION_SLABS);
    let reports: Vec<_> = rev.slabs.iter().map(validate_slab).collect();
    let elapsed = start.elapsed();
    let bad = reports.iter().filter(|r| !r.is_empty()).count();
    let worst_volume = reports.iter().map(|r| r.stats.uncorrected_error()).fold(0.0, f64::max);
    let worst_column = reports.iter().map(|r| r.stats.max_column_error).fold(0.0, f64::max);
    let net = theta(REVOLUTION_SLABS) - theta(0);
    let all_four = rev.configurations == (1..=4).collect();
    let ok = bad == 0
        && worst_volume <= VOLUME_TOL
        && rev.max_step_over_pitch < 0.5
        && (net - TAU).abs() < 1e-9
        && all_four
        && elapsed < REVOLUTION_BUDGET;
    report(
        "3",
        ok,
        format!(
            "{} slabs, {bad} nonconforming, {} swaps, configurations {:?}, max |dtheta|/pitch {:.3}, \
             worst slab volume error {worst_volume:.2e}, worst column error {worst_column:.2e}, {elapsed:?}",
            rev.slabs.len(),
            rev.swaps,
            rev.configurations,
            rev.max_step_over_pitch
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_swap_needed_at_045_pitch() {
    let mesh = galloping_annulus();
    let initial = min_sliding_quality(&mesh);
    let pitch = TAU / REVOLUTION_QUADS as f64;
    // Either sense of rotation; one of them lengthens the present sliding diagonals.
    let ratios: Vec<f64> = [-1.0, 1.0]
        .iter()
        .map(|sign| {
            let map = MotionMap {
                rotation: Some(Rotation { center: mesh.rotation_center, angle: sign * NO_SWAP_FRACTION * pitch }),
                translation: None,
            };
            min_sliding_quality(&advance_vertices(&mesh, &map, 1.0).unwrap()) / initial
        })
        .collect();
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ok = worst < QUALITY_FRACTION;
    report(
        "4 (no swap)",
        ok,
        format!(
            "min quality at {NO_SWAP_FRACTION} pitch without swapping is {:.3} x initial clockwise, {:.3} x anticlockwise (needs < {QUALITY_FRACTION})",
            ratios[0], ratios[1]
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_swapping_keeps_quality() {
    let mesh = galloping_annulus();
    let initial = min_sliding_quality(&mesh);
    let omega = TAU / REVOLUTION_SLABS as f64;
    let rev = revolve(|n| omega * n as f64, REVOLUTION_SLABS);
    let ratio = rev.min_quality / initial;
    let ok = ratio >= QUALITY_FRACTION;
    report(
        "4 (with swaps)",
        ok,
        format!("min quality over a full revolution with {} swaps is {ratio:.3} x initial (needs >= {QUALITY_FRACTION})", rev.swaps),
    );
    assert!(ok);
}

#[test]
fn criterion_5_block_connectivity_derivation() {
    let mesh = galloping_annulus();
    let (r0, r1, r2, n) = annulus_radii(&mesh).unwrap();
    let start = Instant::now();
    let cache = BlockConnectivityCache::derive(r0, r1, r2, n).unwrap();
    let elapsed = start.elapsed();
    let mut lines = Vec::new();
    let mut ok = elapsed < BLOCK_BUDGET;
    let mut seen = BTreeSet::new();
    for dir in [SwapDirection::PrimaryToSecondary, SwapDirection::SecondaryToPrimary] {
        for parity in 0..2 {
            let config = select_configuration(Some(dir), parity).unwrap();
            seen.insert(config);
            let pts = reference_block(r0, r1, r2, n, Some(dir), parity);
            let conn = cache.get(config).expect("cached set");
            let c = check_block(&pts, conn);
            let good = c.boundary_exact && c.interior_paired && c.all_positive && c.volume_error <= BLOCK_VOLUME_TOL;
            ok &= good;
            lines.push(format!("config {config}: {} tets, volume error {:.1e}", conn.tets.len(), c.volume_error));
        }
    }
    ok &= seen.len() == 4 && cache.sets().len() >= 4;
    report("5", ok, format!("{}; derived in {elapsed:?}", lines.join("; ")));
    assert!(ok);
}

/// Free damped oscillator from d = 1 at rest, reporting the max nodal error and the series.
fn oscillator_run(p: &DofParams, dt: f64, t_end: f64, startup: Startup) -> (f64, Vec<(f64, f64)>) {
    let w0 = (p.stiffness / p.inertia).sqrt();
    let zeta = p.damping / (2.0 * (p.stiffness * p.inertia).sqrt());
    let wd = w0 * (1.0 - zeta * zeta).sqrt();
    let exact = |t: f64| (-zeta * w0 * t).exp() * ((wd * t).cos() + zeta * w0 / wd * (wd * t).sin());
    let ctl = StepControl { dt, tolerance: ODE_TOLERANCE, max_iters: 200, startup };
    let steps = (t_end / dt).round() as usize;
    let mut state = DofState::new(0.0, 1.0, 0.0);
    let mut series = vec![(0.0, 1.0)];
    let mut err: f64 = 0.0;
    for n in 1..=steps {
        let s = integrate_dof(p, &state, 0.0, |_, _| 0.0, &ctl).unwrap();
        let t = n as f64 * dt;
        err = err.max((s.value - exact(t)).abs());
        series.push((t, s.value));
        state = state.advanced(t, s.value, s.rate);
    }
    (err, series)
}

fn measured_frequency(series: &[(f64, f64)]) -> f64 {
    let crossings: Vec<f64> = series
        .windows(2)
        .filter(|w| w[0].1 > 0.0 && w[1].1 <= 0.0 || w[0].1 < 0.0 && w[1].1 >= 0.0)
        .map(|w| w[0].0 + (w[1].0 - w[0].0) * w[0].1 / (w[0].1 - w[1].1))
        .collect();
    let half_periods = (crossings.len() - 1) as f64;
    half_periods / (2.0 * (crossings[crossings.len() - 1] - crossings[0]))
}

#[test]
fn criterion_6_bdf2_order_and_frequency() {
    let p = DofParams::new(20.0, 0.00581195, 3.08425).unwrap();
    let dts = [0.2, 0.1, 0.05, 0.025];
    let runs: Vec<_> = dts.iter().map(|&dt| oscillator_run(&p, dt, 50.0, Startup::Taylor)).collect();
    let orders: Vec<f64> = runs.windows(2).map(|w| (w[0].0 / w[1].0).log2()).collect();
    let f = measured_frequency(&runs[3].1);
    let f_ref = (p.stiffness / p.inertia).sqrt() / TAU;
    let ok = orders.iter().all(|&o| o >= ORDER_RANGE.0 && o <= ORDER_RANGE.1) && ((f - f_ref) / f_ref).abs() <= FREQUENCY_REL_TOL;
    let errs: Vec<String> = runs.iter().map(|r| format!("{:.2e}", r.0)).collect();
    report(
        "6",
        ok,
        format!("errors {errs:?}, observed orders {orders:.3?}, frequency {f:.5} vs {f_ref:.5}"),
    );
    let constant: Vec<f64> = dts.iter().map(|&dt| oscillator_run(&p, dt, 50.0, Startup::ConstantRate).0).collect();
    let co: Vec<f64> = constant.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    println!("  note: constant-rate startup gives orders {co:.3?}");
    assert!(ok);
}

#[test]
fn criterion_7_staggered_matches_direct() {
    let mesh = generate_mesh(&MeshParams {
        center: Point::origin(),
        n_theta: 16,
        body: BodyShape::Rectangle { half_width: 0.5, half_height: 0.5 },
        inner_layers: 3,
        annulus: None,
        r_far: 8.0,
        outer_layers: 0,
    })
    .unwrap();
    let dt = 0.1;
    let p = DofParams::new(20.0, 0.00581195, 3.08425).unwrap();
    let mut c = CouplingConfig::new(TimeGrid { t0: 0.0, dt, steps: STAGGERED_STEPS });
    c.tolerance = STAGGERED_TOLERANCE;
    c.translation = Some(p);
    c.boxes = Some(MotionBoxes { inner: AxisBox::new([-1.5, -1.5], [1.5, 1.5]), outer: AxisBox::new([-6.0, -6.0], [6.0, 6.0]) });
    c.provider = ProviderSpec::Prescribed {
        force_y: Harmonic { offset: 0.0, amplitude: 1.0, omega: 1.0, phase: 0.0 },
        moment: Harmonic::default(),
    };
    let res = run_simulation(&c, &mesh, |_, out| {
        assert!(validate_slab(&out.slab).is_empty());
        Ok(())
    })
    .unwrap();
    let limit = 10.0 * STAGGERED_TOLERANCE;
    let mut cur = (0.0, 0.0);
    let mut prev = backfill(&p, 0.0, 0.0, 0.0, dt, Startup::Taylor);
    let mut worst: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let (mut fcur, mut fprev) = ((0.0, 0.0), prev);
    for (n, r) in res.records.iter().enumerate().skip(1) {
        let load = (n as f64 * dt).sin();
        let direct = implicit_bdf2(&p, cur, prev, load, dt);
        worst = worst.max(increment(direct, (r.d, r.d_rate)));
        let free = implicit_bdf2(&p, fcur, fprev, load, dt);
        drift = drift.max(increment(free, (r.d, r.d_rate)));
        prev = cur;
        cur = (r.d, r.d_rate);
        fprev = fcur;
        fcur = free;
    }
    let ok = res.records.len() == STAGGERED_STEPS + 1 && worst <= limit;
    report(
        "7",
        ok,
        format!("{STAGGERED_STEPS} steps, worst per-step deviation {worst:.2e} (limit {limit:.0e}), whole-trajectory deviation {drift:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_8_quadrature_identities() {
    let square = [Point::new(-0.5, -0.5), Point::new(0.5, -0.5), Point::new(0.5, 0.5), Point::new(-0.5, 0.5)];
    let segs = polygon_segments(&square);
    let center = Point::new(0.1, -0.2);
    let fluid = FluidParams { rho: 2.0, nu: 0.01 };
    let constant = compute_force_moment(&segs, 2, &|_| (3.7, Matrix2::zeros()), &fluid, &center).unwrap();
    let zero = constant.force.norm().max(constant.moment.abs());
    let linear = compute_force_moment(&segs, 2, &|p| (p.x, Matrix2::zeros()), &fluid, &center).unwrap();
    let lin_err = (linear.force - nalgebra::Vector2::new(fluid.rho * 1.0, 0.0)).norm();
    let ok = zero <= FORCE_ZERO_TOL && lin_err <= FORCE_LINEAR_TOL;
    report(
        "8",
        ok,
        format!("constant pressure |F|,|M| max {zero:.1e} (limit {FORCE_ZERO_TOL:e}), linear pressure force error {lin_err:.1e} (limit {FORCE_LINEAR_TOL:e})"),
    );
    assert!(ok);
}

#[test]
fn criterion_9_io_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = build_annulus_mesh(Point::new(0.3, -0.1), 1.0, 1.2, 1.4, 24).unwrap();
    let cache = cache_for(&mesh);
    let ann = AnnulusState::from_mesh(&mesh).unwrap();
    // Rotate until a swap so the slab contains annulus blocks.
    let (mut cur, mut st) = (mesh.clone(), ann);
    let slab = (1..10)
        .find_map(|k| {
            let level = build_level(&cur, Some(&st), None, 0.0, 0.0, 0.3 * PI / 12.0, k as f64 * 0.1, Some(&cache)).unwrap();
            if level.swap.is_some() {
                return Some(level.slab);
            }
            cur = level.mesh;
            st = level.annulus.unwrap();
            None
        })
        .expect("a swap within ten slabs");
    let plain = {
        let next = build_level(&mesh, Some(&AnnulusState::from_mesh(&mesh).unwrap()), None, 0.0, 0.0, 0.01, 0.1, Some(&cache)).unwrap();
        extrude_slab(&mesh, &next.mesh, None, None).unwrap()
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, a, b) in [
        ("mesh", io::mesh_to_string(&mesh), io::mesh_to_string(&mesh)),
        ("slab", io::slab_to_string(&slab), io::slab_to_string(&slab)),
        ("vtk", io::slab_to_vtk(&slab).unwrap(), io::slab_to_vtk(&slab).unwrap()),
    ] {
        let (pa, pb) = (dir.path().join(format!("{name}.a")), dir.path().join(format!("{name}.b")));
        std::fs::write(&pa, &a).unwrap();
        std::fs::write(&pb, &b).unwrap();
        let same = std::fs::read(&pa).unwrap() == std::fs::read(&pb).unwrap();
        ok &= same;
        notes.push(format!("{name} identical {same}"));
    }
    let mesh_rt = io::mesh_from_str(&io::mesh_to_string(&mesh)).unwrap() == mesh;
    let slab_rt = io::slab_from_str(&io::slab_to_string(&slab)).unwrap() == slab;
    let plain_rt = io::slab_from_str(&io::slab_to_string(&plain)).unwrap() == plain;
    let vtk_once = io::slab_to_vtk(&slab).unwrap();
    let vtk_rt = io::slab_to_vtk(&io::slab_from_vtk(&vtk_once).unwrap()).unwrap() == vtk_once;
    ok &= mesh_rt && slab_rt && plain_rt && vtk_rt;
    report(
        "9",
        ok,
        format!("{}; round trips mesh {mesh_rt}, swap slab {slab_rt}, plain slab {plain_rt}, vtk rewrite {vtk_rt}", notes.join(", ")),
    );
    assert!(ok);
}
