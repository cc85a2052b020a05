use flowinterp::control::{interpolate_frames, LoopKind, RunConfig};
use flowinterp::grid::{ScalarField, TimeFlow, VectorField};
use flowinterp::metrics::interpolation_error;
use flowinterp::stokes::StokesSolver;
use flowinterp::synthetic::{rotation_field, translated_disk, ManufacturedStokes};
use flowinterp::transport::{backtrace_rk4, tvd_step, CflPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy)]
pub struct SelftestOptions {
    /// Skip the convergence studies.
    pub quick: bool,
    /// Limiter under test; swapping it is the suite's negative control.
    pub limiter: fn(f64) -> f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            quick: false,
            limiter: flowinterp::transport::superbee::<f64>,
        }
    }
}

/// Minmod, used as the deliberately wrong limiter.
pub fn corrupted_limiter(r: f64) -> f64 {
    r.clamp(0.0, 1.0)
}

fn check(name: &'static str, outcome: Result<String, String>) -> CheckResult {
    match outcome {
        Ok(detail) => CheckResult {
            name,
            passed: true,
            detail,
        },
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn limiter_table(limiter: fn(f64) -> f64) -> Result<String, String> {
    let rs: [f64; 9] = [-1.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];
    for r in rs {
        let expected = 0f64.max((2.0 * r).min(1.0)).max(r.min(2.0));
        let got = limiter(r);
        if (got - expected).abs() > 1e-15 {
            return Err(format!("chi({r}) = {got}, expected {expected}"));
        }
    }
    Ok(format!("{} closed-form values", rs.len()))
}

fn tvd_monotone(profiles: usize) -> Result<String, String> {
    let (w, h) = (40, 4);
    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for p in 0..profiles {
        let mut profile: Vec<f64> = (0..w).map(|_| 255.0 * next()).collect();
        profile.sort_by(f64::total_cmp);
        let speed = if p % 2 == 0 { 0.5 + next() } else { -0.5 - next() };
        let b = VectorField::uniform(w, h, speed, 0.0).map_err(err)?;
        let dt = CflPolicy::new(0.1).map_err(err)?.step(speed.abs(), 1.0);
        let mut u = ScalarField::from_fn(w, h, |x, _| profile[x]).map_err(err)?;
        let tv = |u: &ScalarField<f64>, y: usize| u.row(y).windows(2).map(|q| (q[1] - q[0]).abs()).sum::<f64>();
        for step in 0..50 {
            let next_u = tvd_step(&u, &b, dt).map_err(err)?;
            for y in 0..h {
                if tv(&next_u, y) > tv(&u, y) * (1.0 + 1e-12) {
                    return Err(format!("profile {p}, step {step}: total variation grew"));
                }
            }
            u = next_u;
        }
    }
    Ok(format!("{profiles} profiles x 50 steps"))
}

/// Largest distance between RK4 backtraced points and the exact rotation.
fn rk4_error(dt: f64) -> Result<f64, String> {
    let n = 64;
    let omega = std::f64::consts::FRAC_PI_2;
    let flow = TimeFlow::stationary(1.0, rotation_field(n, n, omega).map_err(err)?).map_err(err)?;
    let map = backtrace_rk4(&flow, 1.0, dt).map_err(err)?;
    let c = (n - 1) as f64 / 2.0;
    let (s, co) = omega.sin_cos();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let (dx, dy) = (i as f64 - c, j as f64 - c);
            if dx.hypot(dy) <= 12.0 {
                let (x, y) = map.get(i, j);
                worst = worst.max((x - c - co * dx - s * dy).hypot(y - c + s * dx - co * dy));
            }
        }
    }
    Ok(worst)
}

pub(crate) fn rk4_orders() -> Result<Vec<f64>, String> {
    let e = [rk4_error(0.2)?, rk4_error(0.1)?, rk4_error(0.05)?];
    Ok(vec![(e[0] / e[1]).log2(), (e[1] / e[2]).log2()])
}

fn rk4_order() -> Result<String, String> {
    let orders = rk4_orders()?;
    let text = format!("orders {:.3}, {:.3}", orders[0], orders[1]);
    if orders.iter().all(|o| (3.7..=4.3).contains(o)) {
        Ok(text)
    } else {
        Err(text)
    }
}

fn stokes_manufactured(quick: bool) -> Result<String, String> {
    let problem = ManufacturedStokes { lambda: 1.0 };
    let sizes: &[usize] = if quick { &[17] } else { &[17, 33, 65] };
    let mut errs = Vec::new();
    for &n in sizes {
        let (ev, ep, div) = problem.errors(n).map_err(err)?;
        if div > 10.0 * flowinterp::stokes::DEFAULT_TOL {
            return Err(format!("divergence residual {div:.2e} on {n}x{n}"));
        }
        errs.push((ev, ep));
    }
    if quick {
        let (ev, ep) = errs[0];
        return if ev < 1e-4 && ep < 0.05 {
            Ok(format!("17x17 errors {ev:.2e} / {ep:.2e}"))
        } else {
            Err(format!("17x17 errors too large: {ev:.2e} / {ep:.2e}"))
        };
    }
    let mut text = Vec::new();
    for k in 1..errs.len() {
        let ov = (errs[k - 1].0 / errs[k].0).log2();
        let op = (errs[k - 1].1 / errs[k].1).log2();
        text.push(format!("{ov:.2}/{op:.2}"));
        if ov < 2.5 || op < 1.5 {
            return Err(format!("velocity/pressure orders {}", text.join(", ")));
        }
    }
    Ok(format!("velocity/pressure orders {}", text.join(", ")))
}

fn lambda_scaling() -> Result<String, String> {
    let n = 20;
    let f = VectorField::from_fn(n, n, |x, y| {
        let (x, y) = (x as f64, y as f64);
        ((0.3 * x).sin() * (0.2 * y).cos() * 50.0, (0.25 * x * y / n as f64).cos() * 30.0)
    })
    .map_err(err)?;
    let solver = StokesSolver::for_grid(n, n, 1.0).map_err(err)?;
    let a = solver.solve(&f, 10.0).map_err(err)?;
    let b = solver.solve(&f, 100.0).map_err(err)?;
    let scale = a.b.v().iter().chain(a.b.w()).fold(0f64, |m, v| m.max(v.abs()));
    let dv = a.b.v().iter().zip(b.b.v()).chain(a.b.w().iter().zip(b.b.w()));
    let worst_b = dv.fold(0f64, |m, (x, y)| m.max((x - 10.0 * y).abs())) / scale;
    let qscale = a.q.values().iter().fold(0f64, |m, v| m.max(v.abs()));
    let worst_q = a.q.values().iter().zip(b.q.values()).fold(0f64, |m, (x, y)| m.max((x - y).abs())) / qscale;
    let text = format!("relative deviation {worst_b:.1e} (velocity), {worst_q:.1e} (pressure)");
    if worst_b <= 1e-8 && worst_q <= 1e-8 {
        Ok(text)
    } else {
        Err(text)
    }
}

fn fixed_point() -> Result<String, String> {
    let u = ScalarField::from_fn(24, 24, |x, y| 100.0 + 50.0 * ((x as f64) * 0.5).sin() + y as f64).map_err(err)?;
    let cfg = RunConfig {
        n_loop: 2,
        ..RunConfig::small_scene()
    };
    for kind in [LoopKind::One, LoopKind::Two] {
        let out = interpolate_frames(&u, &u, &cfg, kind, &[0.5], true).map_err(err)?;
        if !out.forward.flow.is_zero() || interpolation_error(&out.frames[0], &u).map_err(err)? != 0.0 {
            return Err(format!("loop {kind} moved identical frames"));
        }
    }
    Ok("zero flow and IE = 0 for both loops".into())
}

fn translated_disk_check() -> Result<String, String> {
    let scene = translated_disk::<f64>(64, 4.0).map_err(err)?;
    let out = interpolate_frames(&scene.first, &scene.last, &RunConfig::small_scene(), LoopKind::Two, &[0.5], true)
        .map_err(err)?;
    let ie = interpolation_error(&out.frames[0], &scene.middle).map_err(err)?;
    let baseline = interpolation_error(&scene.first.average(&scene.last).map_err(err)?, &scene.middle).map_err(err)?;
    let text = format!("IE {ie:.3} vs static average {baseline:.3}");
    if ie < 0.5 * baseline {
        Ok(text)
    } else {
        Err(text)
    }
}

/// Runs the embedded synthetic suite; needs no external data.
pub fn cmd_selftest(opts: &SelftestOptions) -> Vec<CheckResult> {
    vec![
        check("superbee limiter", limiter_table(opts.limiter)),
        check("TVD monotone profiles", tvd_monotone(if opts.quick { 20 } else { 200 })),
        check("RK4 backtrace order", rk4_order()),
        check("Stokes manufactured solution", stokes_manufactured(opts.quick)),
        check("Stokes lambda scaling", lambda_scaling()),
        check("identical frames fixed point", fixed_point()),
        check("translated disk", translated_disk_check()),
    ]
}
