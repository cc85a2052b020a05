use std::path::{Path, PathBuf};

use flowinterp::control::{
    interpolate_at, interpolate_frames, interpolate_one_sided, transport_for, HierarchyOutcome, LevelReport, LoopKind,
    RunConfig,
};
use flowinterp::io::{read_image, write_flo, write_image, ImageFormat};
use flowinterp::metrics::{interpolation_error_cropped, EvalReport};
use flowinterp::{ScalarField, TimeFlow, VectorField};
use serde::Serialize;

use crate::{CliError, CliResult, EvalArgs, FlowArgs, InterpArgs};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub t: f64,
    pub file: String,
}

/// IE of the frame at `time` against `--truth`, next to the static average
/// `(u0 + uT) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthReport {
    pub truth: String,
    pub time: f64,
    pub crop_border: usize,
    pub ie: f64,
    pub baseline_ie: f64,
    /// `1 - ie / baseline_ie`.
    pub improvement: f64,
}

/// Contents of `metadata.json`. Holds no timings, so identical runs give identical files.
#[derive(Debug, Clone, Serialize)]
pub struct InterpMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub frame0: String,
    pub frame_t: String,
    pub width: usize,
    pub height: usize,
    #[serde(rename = "loop")]
    pub loop_kind: LoopKind,
    pub average: bool,
    pub config: RunConfig,
    pub frames: Vec<FrameRecord>,
    pub flows: Vec<String>,
    pub forward_levels: Vec<LevelReport>,
    pub backward_levels: Option<Vec<LevelReport>>,
    pub max_div_residual: f64,
    pub evaluation: Option<TruthReport>,
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn read_pair(a: &Path, b: &Path) -> CliResult<(ScalarField<f64>, ScalarField<f64>)> {
    let u0: ScalarField<f64> = read_image(a).map_err(|e| with_path(e, a))?;
    let ut: ScalarField<f64> = read_image(b).map_err(|e| with_path(e, b))?;
    if u0.dims() != ut.dims() {
        return Err(CliError::Usage(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            u0.width(),
            u0.height(),
            ut.width(),
            ut.height()
        )));
    }
    Ok((u0, ut))
}

fn with_path(e: flowinterp::Error, p: &Path) -> CliError {
    match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", p.display())),
        other => other,
    }
}

/// The frame exactly as it will read back from disk in `format`.
fn as_stored(f: &ScalarField<f64>, format: ImageFormat) -> ScalarField<f64> {
    match format {
        ImageFormat::Pfm => f.map(|v| v as f32 as f64),
        ImageFormat::Png | ImageFormat::Pgm => f.map(|v| v.clamp(0.0, 255.0).round()),
    }
}

fn resolve_times(args: &InterpArgs, horizon: f64) -> CliResult<Vec<f64>> {
    let times = match (args.frames, args.times.is_empty()) {
        (Some(0), _) => return Err(CliError::Usage("--frames must be at least 1".into())),
        (Some(n), _) => (1..=n).map(|k| horizon * k as f64 / (n + 1) as f64).collect(),
        (None, true) => vec![horizon / 2.0],
        (None, false) => args.times.clone(),
    };
    if let Some(&t) = times.iter().find(|&&t| !(0.0..=horizon).contains(&t)) {
        return Err(CliError::Usage(format!("time {t} outside [0, {horizon}]")));
    }
    Ok(times)
}

/// Time average of the flow samples, i.e. the mean velocity over `[0, T]`.
fn mean_flow(flow: &TimeFlow<f64>) -> CliResult<VectorField<f64>> {
    let n = flow.len() as f64;
    let mut acc = flow.samples()[0].clone();
    for s in &flow.samples()[1..] {
        acc = acc.add(s)?;
    }
    Ok(acc.scale(1.0 / n))
}

fn write_flows(out: &Path, stem: &str, flow: &TimeFlow<f64>, names: &mut Vec<String>) -> CliResult<()> {
    let name = format!("{stem}.flo");
    write_flo(out.join(&name), &mean_flow(flow)?)?;
    names.push(name);
    if flow.len() > 1 {
        for (k, s) in flow.samples().iter().enumerate() {
            let name = format!("{stem}_{k:02}.flo");
            write_flo(out.join(&name), s)?;
            names.push(name);
        }
    }
    Ok(())
}

fn max_div(a: &HierarchyOutcome<f64>, b: Option<&HierarchyOutcome<f64>>) -> f64 {
    b.map_or(0.0, |b| b.max_div_residual()).max(a.max_div_residual())
}

/// Estimates the flows, writes one frame per requested time, the flows as
/// `.flo` and `metadata.json` into the output directory.
pub fn cmd_interp(args: &InterpArgs) -> CliResult<InterpMetadata> {
    let cfg = args.solver.run_config()?;
    let kind = args.solver.loop_kind();
    let (u0, ut) = read_pair(&args.frame0, &args.frame_t)?;
    let times = resolve_times(args, cfg.horizon)?;
    let truth = match &args.truth {
        Some(p) => {
            let f: ScalarField<f64> = read_image(p).map_err(|e| with_path(e, p))?;
            if f.dims() != u0.dims() {
                return Err(CliError::Usage(format!("{} does not match the frame size", p.display())));
            }
            Some(f)
        }
        None => None,
    };
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", args.out.display())))?;

    let average = !args.no_average;
    let result = interpolate_frames(&u0, &ut, &cfg, kind, &times, average)?;
    let format = args.image_format();

    let mut frames = Vec::with_capacity(times.len());
    for (k, (t, f)) in result.times.iter().zip(&result.frames).enumerate() {
        let file = format!("frame_{k:03}.{}", format.extension());
        write_image(args.out.join(&file), f)?;
        frames.push(FrameRecord { t: *t, file });
    }
    let mut flows = Vec::new();
    write_flows(&args.out, "flow", &result.forward.flow, &mut flows)?;
    if let Some(b) = &result.backward {
        write_flows(&args.out, "flow_backward", &b.flow, &mut flows)?;
    }

    let evaluation = match truth {
        Some(truth) => {
            let time = args.truth_time.unwrap_or(cfg.horizon / 2.0);
            let transport = transport_for::<f64>(&cfg)?;
            let frame = match &result.backward {
                Some(b) => interpolate_at(&transport, &u0, &ut, &result.forward.flow, &b.flow, time)?,
                None => interpolate_one_sided(&transport, &u0, &result.forward.flow, time)?,
            };
            let ie = interpolation_error_cropped(&as_stored(&frame, format), &truth, args.crop_border)?;
            let baseline = as_stored(&u0.average(&ut)?, format);
            let baseline_ie = interpolation_error_cropped(&baseline, &truth, args.crop_border)?;
            Some(TruthReport {
                truth: display(args.truth.as_deref().expect("truth path")),
                time,
                crop_border: args.crop_border,
                ie,
                baseline_ie,
                improvement: if baseline_ie > 0.0 { 1.0 - ie / baseline_ie } else { 0.0 },
            })
        }
        None => None,
    };

    let meta = InterpMetadata {
        tool: "flowinterp",
        version: env!("CARGO_PKG_VERSION"),
        frame0: display(&args.frame0),
        frame_t: display(&args.frame_t),
        width: u0.width(),
        height: u0.height(),
        loop_kind: kind,
        average,
        max_div_residual: max_div(&result.forward, result.backward.as_ref()),
        config: cfg,
        frames,
        flows,
        forward_levels: result.forward.levels.clone(),
        backward_levels: result.backward.as_ref().map(|b| b.levels.clone()),
        evaluation,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(args.out.join("metadata.json"), json + "\n")?;
    Ok(meta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutput {
    pub interp: String,
    pub truth: String,
    pub crop_border: usize,
    pub ie: f64,
    /// Relative difference in total intensity.
    pub mass_drift: f64,
    /// Total variation relative to the reference.
    pub tv_ratio: f64,
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<EvalOutput> {
    let (u, truth) = read_pair(&args.interp, &args.truth)?;
    let r = EvalReport::compute(&u, &truth, args.crop_border, 0.0)?;
    let out = EvalOutput {
        interp: display(&args.interp),
        truth: display(&args.truth),
        crop_border: args.crop_border,
        ie: r.ie,
        mass_drift: r.mass_drift,
        tv_ratio: r.tv_ratio,
    };
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&out).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowOutput {
    pub frame0: String,
    pub frame_t: String,
    pub flow: PathBuf,
    #[serde(rename = "loop")]
    pub loop_kind: LoopKind,
    pub config: RunConfig,
    pub levels: Vec<LevelReport>,
    pub max_speed: f64,
    pub final_mismatch: f64,
}

pub fn cmd_flow(args: &FlowArgs) -> CliResult<FlowOutput> {
    let cfg = args.solver.run_config()?;
    let kind = args.solver.loop_kind();
    let (u0, ut) = read_pair(&args.frame0, &args.frame_t)?;
    let out = flowinterp::hierarchical_solve(&u0, &ut, &cfg, kind)?;
    let mean = mean_flow(&out.flow)?;
    write_flo(&args.out, &mean)?;
    let report = FlowOutput {
        frame0: display(&args.frame0),
        frame_t: display(&args.frame_t),
        flow: args.out.clone(),
        loop_kind: kind,
        config: cfg,
        max_speed: mean.max_speed(),
        final_mismatch: out.final_mismatch().unwrap_or(0.0),
        levels: out.levels,
    };
    if let Some(path) = &args.metadata {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_selection() {
        let mut a = InterpArgs::new("a", "b", "o");
        assert_eq!(resolve_times(&a, 1.0).unwrap(), vec![0.5]);
        a.frames = Some(3);
        assert_eq!(resolve_times(&a, 2.0).unwrap(), vec![0.5, 1.0, 1.5]);
        a.frames = None;
        a.times = vec![0.1, 1.2];
        assert_eq!(resolve_times(&a, 1.0).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn stored_values_match_what_the_codecs_write() {
        let f = ScalarField::from_fn(4, 4, |x, _| [-3.0, 12.49, 12.5, 400.0][x]).unwrap();
        let q = as_stored(&f, ImageFormat::Png);
        assert_eq!(q.row(0), &[0.0, 12.0, 13.0, 255.0]);
    }
}
