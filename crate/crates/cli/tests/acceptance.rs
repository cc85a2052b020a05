//! Acceptance criteria. Each test writes one `[PASS]`/`[FAIL]`/`[SKIP]` line
//! to stderr (bypassing the harness capture) and then asserts.
//!
//! Criterion 1 needs the Middlebury interpolation data laid out as
//! `<root>/<Sequence>/{frame10,frame11,frame10i11}.png`, with `<root>` taken
//! from `FLOWINTERP_MIDDLEBURY` or defaulting to `tests/fixtures/middlebury`.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use flowinterp::control::{interpolate_frames, LoopKind, RunConfig};
use flowinterp::grid::{ScalarField, TimeFlow, VectorField};
use flowinterp::metrics::{interpolation_error, mass};
use flowinterp::stokes::{StokesSolver, DEFAULT_TOL};
use flowinterp::synthetic::{gaussian_blob, rotation_field, ManufacturedStokes};
use flowinterp::transport::{backtrace_rk4, superbee, tvd_step, CflPolicy, Scheme};
use flowinterp_cli::{cmd_interp, InterpArgs, InterpMetadata};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Tolerances, one per criterion.
const MIDDLEBURY_LIMITS: [(&str, f64, f64); 2] = [("Dimetrodon", 2.35, 2.70), ("Venus", 4.40, 8.00)];
const MIDDLEBURY_RUNTIME: Duration = Duration::from_secs(30 * 60);
const SYNTHETIC_IE_RATIO: f64 = 0.5;
const SYNTHETIC_RUNTIME: Duration = Duration::from_secs(60);
const LIMITER_TOL: f64 = 1e-15;
const TVD_PROFILES: usize = 200;
const TVD_STEPS: usize = 50;
const TVD_SIGMA: f64 = 0.1;
const RK4_ORDER: (f64, f64) = (3.7, 4.3);
const RK4_STEPS: [f64; 3] = [0.2, 0.1, 0.05];
const STOKES_GRIDS: [usize; 3] = [17, 33, 65];
const STOKES_VELOCITY_ORDER: f64 = 2.5;
const STOKES_PRESSURE_ORDER: f64 = 1.5;
const STOKES_DIV_FACTOR: f64 = 10.0;
const LAMBDA_SCALING_TOL: f64 = 1e-8;
const MASS_TOL: f64 = 1e-6;

fn report(id: u32, name: &str, outcome: Result<String, String>) {
    let line = match &outcome {
        Ok(d) => format!("[PASS] criterion {id:>2} {name}: {d}"),
        Err(d) => format!("[FAIL] criterion {id:>2} {name}: {d}"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(outcome.is_ok(), "{line}");
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn disk_args(out: &Path) -> InterpArgs {
    let mut args = InterpArgs::new(fixture("disk_t0.pgm"), fixture("disk_t1.pgm"), out);
    args.truth = Some(fixture("disk_mid.pgm"));
    // weights for 64-pixel scenes; the defaults target Middlebury frames
    args.solver.lambda_star = Some(RunConfig::small_scene().lambda_star);
    args.solver.levels = Some(RunConfig::small_scene().pyramid_levels);
    args.solver.loop_kind = Some(LoopKind::Two);
    args
}

#[test]
fn criterion_01_middlebury_regression() {
    let root = std::env::var_os("FLOWINTERP_MIDDLEBURY")
        .map(PathBuf::from)
        .unwrap_or_else(|| fixture("middlebury"));
    let present = MIDDLEBURY_LIMITS
        .iter()
        .all(|(seq, _, _)| ["frame10.png", "frame11.png", "frame10i11.png"].iter().all(|f| root.join(seq).join(f).exists()));
    if !present {
        let _ = writeln!(
            std::io::stderr(),
            "[SKIP] criterion  1 Middlebury regression: fixtures not found under {} (warning: criterion not checked)",
            root.display()
        );
        return;
    }
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for (seq, limit_ii, limit_i) in MIDDLEBURY_LIMITS {
        for (kind, limit) in [(LoopKind::Two, limit_ii), (LoopKind::One, limit_i)] {
            let dir = tempfile::tempdir().unwrap();
            let d = root.join(seq);
            let mut args = InterpArgs::new(d.join("frame10.png"), d.join("frame11.png"), dir.path());
            args.truth = Some(d.join("frame10i11.png"));
            args.solver.loop_kind = Some(kind);
            let start = Instant::now();
            let meta = cmd_interp(&args).unwrap();
            let elapsed = start.elapsed();
            let ie = meta.evaluation.unwrap().ie;
            lines.push(format!("{seq} loop {kind} IE {ie:.3} (limit {limit}) in {:.0} s", elapsed.as_secs_f64()));
            if ie > limit || elapsed > MIDDLEBURY_RUNTIME {
                failures.push(lines.last().unwrap().clone());
            }
        }
    }
    let text = lines.join("; ");
    report(1, "Middlebury regression", if failures.is_empty() { Ok(text) } else { Err(text) });
}

#[test]
fn criterion_02_synthetic_translated_disk() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let meta = cmd_interp(&disk_args(dir.path())).unwrap();
    let elapsed = start.elapsed();
    let e = meta.evaluation.unwrap();
    let text = format!(
        "IE {:.3} vs static average {:.3} (ratio {:.3}, limit {SYNTHETIC_IE_RATIO}) in {:.2} s",
        e.ie,
        e.baseline_ie,
        e.ie / e.baseline_ie,
        elapsed.as_secs_f64()
    );
    let ok = e.ie < SYNTHETIC_IE_RATIO * e.baseline_ie && elapsed < SYNTHETIC_RUNTIME;
    report(2, "synthetic interpolation", if ok { Ok(text) } else { Err(text) });
}

#[test]
fn criterion_03_superbee_values() {
    let mut worst: f64 = 0.0;
    for r in [-1.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0f64] {
        let closed = 0f64.max((2.0 * r).min(1.0)).max(r.min(2.0));
        worst = worst.max((superbee(r) - closed).abs());
    }
    let text = format!("max deviation {worst:e} over 9 points");
    report(3, "superbee limiter", if worst <= LIMITER_TOL { Ok(text) } else { Err(text) });
}

#[test]
fn criterion_04_tvd_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (w, h) = (48, 4);
    let tv = |u: &ScalarField<f64>, y: usize| u.row(y).windows(2).map(|p| (p[1] - p[0]).abs()).sum::<f64>();
    let mut violation = None;
    'profiles: for p in 0..TVD_PROFILES {
        let mut profile: Vec<f64> = (0..w).map(|_| rng.gen_range(0.0..255.0)).collect();
        profile.sort_by(f64::total_cmp);
        if rng.gen_bool(0.5) {
            profile.reverse();
        }
        let speed: f64 = rng.gen_range(0.25..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let b = VectorField::uniform(w, h, speed, 0.0).unwrap();
        let dt = CflPolicy::new(TVD_SIGMA).unwrap().step(speed.abs(), 1.0);
        let mut u = ScalarField::from_fn(w, h, |x, _| profile[x]).unwrap();
        for step in 0..TVD_STEPS {
            let next = tvd_step(&u, &b, dt).unwrap();
            for y in 0..h {
                // monotone rows keep their endpoints, so TV is exactly conserved up to rounding
                if tv(&next, y) > tv(&u, y) * (1.0 + 1e-12) {
                    violation = Some(format!("profile {p}, step {step}, row {y}"));
                    break 'profiles;
                }
            }
            u = next;
        }
    }
    let outcome = match violation {
        None => Ok(format!("{TVD_PROFILES} profiles x {TVD_STEPS} steps, no increase")),
        Some(v) => Err(format!("total variation grew at {v}")),
    };
    report(4, "TVD property", outcome);
}

#[test]
fn criterion_05_rk4_order() {
    let n = 64;
    let omega = std::f64::consts::FRAC_PI_2;
    let flow = TimeFlow::stationary(1.0, rotation_field(n, n, omega).unwrap()).unwrap();
    let c = (n - 1) as f64 / 2.0;
    let (s, co) = omega.sin_cos();
    let errs: Vec<f64> = RK4_STEPS
        .iter()
        .map(|&dt| {
            let map = backtrace_rk4(&flow, 1.0, dt).unwrap();
            let mut worst: f64 = 0.0;
            for j in 0..n {
                for i in 0..n {
                    let (dx, dy) = (i as f64 - c, j as f64 - c);
                    if dx.hypot(dy) <= 12.0 {
                        let (x, y) = map.get(i, j);
                        worst = worst.max((x - (c + co * dx + s * dy)).hypot(y - (c - s * dx + co * dy)));
                    }
                }
            }
            worst
        })
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|p| (p[0] / p[1]).log2()).collect();
    let text = format!("orders {:.3}, {:.3} (errors {:.2e}, {:.2e}, {:.2e})", orders[0], orders[1], errs[0], errs[1], errs[2]);
    let ok = orders.iter().all(|o| (RK4_ORDER.0..=RK4_ORDER.1).contains(o));
    report(5, "RK4 order", if ok { Ok(text) } else { Err(text) });
}

#[test]
fn criterion_06_stokes_manufactured_solution() {
    let problem = ManufacturedStokes { lambda: 1.0 };
    let results: Vec<(f64, f64, f64)> = STOKES_GRIDS.iter().map(|&n| problem.errors(n).unwrap()).collect();
    let max_div = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut orders = Vec::new();
    for k in 1..results.len() {
        orders.push(((results[k - 1].0 / results[k].0).log2(), (results[k - 1].1 / results[k].1).log2()));
    }
    let ok = orders.iter().all(|&(v, p)| v >= STOKES_VELOCITY_ORDER && p >= STOKES_PRESSURE_ORDER)
        && max_div <= STOKES_DIV_FACTOR * DEFAULT_TOL;
    let text = format!(
        "velocity orders {:.2}, {:.2}; pressure orders {:.2}, {:.2}; max |Cb|/|f| {max_div:.1e}",
        orders[0].0, orders[1].0, orders[0].1, orders[1].1
    );
    report(6, "Stokes manufactured solution", if ok { Ok(text) } else { Err(text) });
}

#[test]
fn criterion_07_lambda_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 24;
    let f = VectorField::from_fn(n, n, |_, _| (rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0))).unwrap();
    let solver = StokesSolver::<f64>::for_grid(n, n, 1.0).unwrap();
    let lambda = 37.0;
    let a = solver.solve(&f, lambda).unwrap();
    let b = solver.solve(&f, 10.0 * lambda).unwrap();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff_b: Vec<f64> = a.b.v().iter().chain(a.b.w()).zip(b.b.v().iter().chain(b.b.w())).map(|(x, y)| x / 10.0 - y).collect();
    let ref_b: Vec<f64> = a.b.v().iter().chain(a.b.w()).map(|x| x / 10.0).collect();
    let rel_b = norm(&diff_b) / norm(&ref_b);
    let diff_q: Vec<f64> = a.q.values().iter().zip(b.q.values()).map(|(x, y)| x - y).collect();
    let rel_q = norm(&diff_q) / norm(a.q.values());
    let text = format!("relative deviation {rel_b:.1e} (velocity), {rel_q:.1e} (pressure)");
    let ok = rel_b <= LAMBDA_SCALING_TOL && rel_q <= LAMBDA_SCALING_TOL;
    report(7, "lambda scaling identity", if ok { Ok(text) } else { Err(text) });
}

#[test]
fn criterion_08_mass_conservation() {
    let n = 64;
    let b = rotation_field(n, n, 0.1).unwrap();
    let dt = CflPolicy::new(0.1).unwrap().step(b.max_speed(), 1.0);
    let mut u: ScalarField<f64> = gaussian_blob(n, n, (40.0, 31.5), 3.0, 200.0).unwrap();
    let mut worst: f64 = 0.0;
    let steps = 200;
    for _ in 0..steps {
        let next = tvd_step(&u, &b, dt).unwrap();
        let (m0, m1) = (mass(&u), mass(&next));
        worst = worst.max(((m1 - m0) / m0).abs());
        u = next;
    }
    let text = format!("max relative change per step {worst:.1e} over {steps} steps");
    report(8, "mass conservation", if worst < MASS_TOL { Ok(text) } else { Err(text) });
}

#[test]
fn criterion_09_fixed_point() {
    let u = ScalarField::from_fn(32, 32, |x, y| {
        120.0 + 70.0 * ((x as f64) * 0.35).sin() * ((y as f64) * 0.25).cos()
    })
    .unwrap();
    let mut bad = Vec::new();
    for kind in [LoopKind::One, LoopKind::Two] {
        for scheme in [Scheme::Characteristic, Scheme::Tvd] {
            let cfg = RunConfig {
                scheme,
                ..RunConfig::small_scene()
            };
            let out = interpolate_frames(&u, &u, &cfg, kind, &[0.5], true).unwrap();
            let mismatch_zero = out
                .forward
                .levels
                .iter()
                .chain(out.backward.as_ref().unwrap().levels.iter())
                .all(|l| l.history.iter().all(|r| r.terminal_mismatch == 0.0));
            let ie = interpolation_error(&out.frames[0], &u).unwrap();
            if !(out.forward.flow.is_zero() && out.backward.as_ref().unwrap().flow.is_zero() && mismatch_zero && ie == 0.0) {
                bad.push(format!("loop {kind} {scheme:?}"));
            }
        }
    }
    let outcome = if bad.is_empty() {
        Ok("zero flow, zero mismatch, IE = 0 for loops I/II and both schemes".to_string())
    } else {
        Err(format!("not a fixed point: {}", bad.join(", ")))
    };
    report(9, "fixed point", outcome);
}

fn directory_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_determinism() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    // metadata records the output directory nowhere, so whole directories compare
    let _: InterpMetadata = cmd_interp(&disk_args(a.path())).unwrap();
    let _: InterpMetadata = cmd_interp(&disk_args(b.path())).unwrap();
    let (fa, fb) = (directory_bytes(a.path()), directory_bytes(b.path()));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    let text = format!("{} files compared: {}", fa.len(), names.join(", "));
    report(10, "determinism", if fa == fb && !fa.is_empty() { Ok(text) } else { Err(text) });
}
