use flowinterp::control::{
    effective_levels, hierarchical_solve, interpolate_at, interpolate_frames, regularization, segregation_loop_i,
    segregation_loop_ii, transport_for, LoopContext, LoopKind, RunConfig,
};
use flowinterp::grid::{ScalarField, TimeFlow, VectorField};
use flowinterp::metrics::interpolation_error;
use flowinterp::synthetic::translated_disk;
use flowinterp::transport::Scheme;

fn textured(w: usize, h: usize) -> ScalarField<f64> {
    ScalarField::from_fn(w, h, |x, y| {
        128.0 + 60.0 * ((x as f64) * 0.4).sin() * ((y as f64) * 0.3).cos() + (x + y) as f64
    })
    .unwrap()
}

#[test]
fn identical_frames_are_a_fixed_point_for_every_loop_and_scheme() {
    let u = textured(32, 24);
    for kind in [LoopKind::One, LoopKind::Two] {
        for scheme in [Scheme::Characteristic, Scheme::Tvd] {
            let cfg = RunConfig {
                scheme,
                n_loop: 3,
                ..RunConfig::small_scene()
            };
            let out = interpolate_frames(&u, &u, &cfg, kind, &[0.5], true).unwrap();
            assert!(out.forward.flow.is_zero(), "{kind} {scheme:?}");
            assert!(out.backward.as_ref().unwrap().flow.is_zero());
            assert_eq!(out.forward.final_mismatch(), Some(0.0));
            assert_eq!(interpolation_error(&out.frames[0], &u).unwrap(), 0.0);
        }
    }
}

fn disk_pair(size: usize, shift: f64) -> (ScalarField<f64>, ScalarField<f64>, ScalarField<f64>) {
    let d = translated_disk(size, shift).unwrap();
    (d.first, d.last, d.middle)
}

#[test]
fn loop_ii_bookkeeping() {
    let (u0, ut, _) = disk_pair(32, 2.0);
    let cfg = RunConfig {
        n_loop: 4,
        stop_tol: 0.0,
        ..RunConfig::small_scene()
    };
    let ctx = LoopContext::new(32, 32, 1.0, &cfg).unwrap();
    let init = TimeFlow::zeros(32, 32, 1.0, 1).unwrap();
    let out = segregation_loop_ii(&ctx, &u0, &ut, &cfg, 3e3, init.clone()).unwrap();
    assert_eq!(out.history.len(), cfg.n_loop + 1);
    assert_eq!(out.history[0].flow, init);
    assert_eq!(out.history.last().unwrap().flow, out.flow);
    for (n, s) in out.history.iter().enumerate() {
        assert_eq!(s.iteration, n);
        assert_eq!(s.lambda, 3e3);
        let m = s.terminal_mismatch;
        assert!((s.data_term - 0.5 * m * m).abs() <= 1e-12 * s.data_term.max(1.0));
        let reg = regularization(&s.flow, s.lambda);
        assert!((s.reg_term - reg).abs() <= 1e-12 * reg.max(1.0));
        let rec = s.record();
        assert_eq!(rec.cost, s.data_term + s.reg_term);
    }
}

#[test]
fn loops_reduce_the_terminal_mismatch() {
    let (u0, ut, _) = disk_pair(32, 2.0);
    let cfg = RunConfig {
        n_loop: 5,
        ..RunConfig::small_scene()
    };
    let ctx = LoopContext::new(32, 32, 1.0, &cfg).unwrap();
    let zero = TimeFlow::zeros(32, 32, 1.0, 1).unwrap();
    for out in [
        segregation_loop_i(&ctx, &u0, &ut, &cfg, 3e3, zero.clone()).unwrap(),
        segregation_loop_ii(&ctx, &u0, &ut, &cfg, 3e3, zero.clone()).unwrap(),
    ] {
        let first = out.history.first().unwrap().terminal_mismatch;
        let last = out.history.last().unwrap().terminal_mismatch;
        assert!(last < first, "mismatch {first} -> {last}");
        assert!(out.history.iter().all(|s| s.div_residual <= 10.0 * cfg.stokes_tol));
    }
}

#[test]
fn loops_record_their_seed_as_iteration_zero() {
    let u = textured(24, 24);
    let cfg = RunConfig {
        n_loop: 2,
        ..RunConfig::small_scene()
    };
    let ctx = LoopContext::new(24, 24, 1.0, &cfg).unwrap();
    let seed = TimeFlow::stationary(1.0, VectorField::uniform(24, 24, 0.5, 0.0).unwrap()).unwrap();
    let one = segregation_loop_i(&ctx, &u, &u, &cfg, 3e3, seed.clone()).unwrap();
    let two = segregation_loop_ii(&ctx, &u, &u, &cfg, 3e3, seed.clone()).unwrap();
    assert_eq!(one.history[0].flow, seed);
    assert_eq!(two.history[0].flow, seed);
    // a nonzero seed moves identical frames apart
    assert!(one.history[0].terminal_mismatch > 0.0);
    assert_eq!(one.history[0].terminal_mismatch, two.history[0].terminal_mismatch);
}

#[test]
fn interpolate_at_endpoints() {
    let (u0, ut, _) = disk_pair(24, 2.0);
    let cfg = RunConfig::small_scene();
    let tr = transport_for::<f64>(&cfg).unwrap();
    let b = TimeFlow::stationary(1.0, VectorField::uniform(24, 24, 1.0, 0.0).unwrap()).unwrap();
    let zero = TimeFlow::zeros(24, 24, 1.0, 1).unwrap();

    // at t = 0 the forward half is u0 itself
    let at0 = interpolate_at(&tr, &u0, &ut, &b, &zero, 0.0).unwrap();
    assert_eq!(at0, u0.average(&ut).unwrap());
    let at1 = interpolate_at(&tr, &u0, &ut, &zero, &b, 1.0).unwrap();
    assert_eq!(at1, u0.average(&ut).unwrap());
    assert!(interpolate_at(&tr, &u0, &ut, &b, &b, -0.1).is_err());
}

#[test]
fn swapping_the_frames_mirrors_time() {
    let (u0, ut, _) = disk_pair(32, 3.0);
    let cfg = RunConfig {
        n_loop: 3,
        ..RunConfig::small_scene()
    };
    let a = interpolate_frames(&u0, &ut, &cfg, LoopKind::Two, &[0.25, 0.5], true).unwrap();
    let b = interpolate_frames(&ut, &u0, &cfg, LoopKind::Two, &[0.75, 0.5], true).unwrap();
    assert_eq!(a.frames[0], b.frames[0]);
    assert_eq!(a.frames[1], b.frames[1]);
}

#[test]
fn hierarchy_beats_single_level_on_large_motion() {
    let (u0, ut, mid) = disk_pair(64, 8.0);
    assert_eq!(effective_levels(64, 64, 2), 2);
    let ie = |levels: usize| {
        let cfg = RunConfig {
            pyramid_levels: levels,
            ..RunConfig::small_scene()
        };
        let out = interpolate_frames(&u0, &ut, &cfg, LoopKind::Two, &[0.5], true).unwrap();
        assert_eq!(out.forward.levels.len(), levels + 1);
        interpolation_error(&out.frames[0], &mid).unwrap()
    };
    let (flat, pyramid) = (ie(0), ie(2));
    assert!(pyramid < flat, "hierarchy {pyramid} vs single level {flat}");
}

#[test]
fn hierarchy_reports_levels_coarsest_first() {
    let (u0, ut, _) = disk_pair(32, 2.0);
    let cfg = RunConfig {
        n_loop: 2,
        ..RunConfig::small_scene()
    };
    let out = hierarchical_solve(&u0, &ut, &cfg, LoopKind::Two).unwrap();
    let sizes: Vec<usize> = out.levels.iter().map(|l| l.width).collect();
    assert_eq!(sizes, vec![8, 16, 32]);
    let lambdas: Vec<f64> = out.levels.iter().map(|l| l.lambda).collect();
    assert_eq!(lambdas[0], cfg.lambda_star);
    assert!(lambdas.windows(2).all(|p| p[1] > p[0]));
}
