use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::transport::Scheme;

/// Smallest and largest admissible ratio between regularization weights of
/// adjacent pyramid levels.
pub const LEVEL_RATIO_BOUNDS: (f64, f64) = (1.584_893_192_461_113_5, 3.162_277_660_168_379_5);

/// Which segregation loop drives the control update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopKind {
    /// `b^n = S(lambda^n) rhs` with a decreasing weight schedule.
    #[serde(rename = "I")]
    One,
    /// `b^n = b^{n-1} + S(lambda) rhs` at fixed weight.
    #[default]
    #[serde(rename = "II")]
    Two,
}

impl FromStr for LoopKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1" | "I" => Ok(LoopKind::One),
            "2" | "II" => Ok(LoopKind::Two),
            other => Err(Error::InvalidConfig(format!("unknown loop `{other}` (expected 1 or 2)"))),
        }
    }
}

impl fmt::Display for LoopKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoopKind::One => "I",
            LoopKind::Two => "II",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LambdaSchedule {
    Constant,
    /// `lambda^n = lambda_star * kappa^(n_loop - n)`.
    Geometric { kappa: f64 },
}

impl Default for LambdaSchedule {
    fn default() -> Self {
        LambdaSchedule::Geometric {
            kappa: 10f64.powf(0.1),
        }
    }
}

/// Every knob of the interpolation pipeline.
///
/// `lambda_star` is the weight at the coarsest pyramid level; level `l`
/// (0 = finest) uses `lambda_star * lambda_level_ratio^(L - l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub horizon: f64,
    pub n_loop: usize,
    pub lambda_star: f64,
    pub lambda_schedule: LambdaSchedule,
    pub pyramid_levels: usize,
    pub lambda_level_ratio: f64,
    pub sigma_cfl: f64,
    pub dt_ode: f64,
    pub n_t: usize,
    pub scheme: Scheme,
    pub stop_tol: f64,
    pub stokes_tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            n_loop: 10,
            lambda_star: 10f64.powf(5.25),
            lambda_schedule: LambdaSchedule::default(),
            pyramid_levels: 3,
            lambda_level_ratio: 10f64.powf(0.35),
            sigma_cfl: 0.1,
            dt_ode: 0.1,
            n_t: 1,
            scheme: Scheme::Characteristic,
            stop_tol: 1e-3,
            stokes_tol: 1e-8,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse `{value}` for `{key}`")))
}

impl RunConfig {
    /// Weights tuned for small synthetic scenes (about 64 pixels across);
    /// the defaults target Middlebury-sized frames.
    pub fn small_scene() -> Self {
        Self {
            lambda_star: 3e3,
            pyramid_levels: 2,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.n_loop == 0 {
            return bad("n_loop must be at least 1".into());
        }
        if !(self.lambda_star > 0.0 && self.lambda_star.is_finite()) {
            return bad(format!("lambda_star must be positive, got {}", self.lambda_star));
        }
        if let LambdaSchedule::Geometric { kappa } = self.lambda_schedule {
            if !(kappa > 1.0 && kappa.is_finite()) {
                return bad(format!("kappa must exceed 1, got {kappa}"));
            }
        }
        let (lo, hi) = LEVEL_RATIO_BOUNDS;
        let r = self.lambda_level_ratio;
        if !(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)) {
            return bad(format!("lambda_level_ratio must lie in [10^0.2, 10^0.5], got {r}"));
        }
        if !(self.sigma_cfl > 0.0 && self.sigma_cfl <= 1.0) {
            return bad(format!("sigma_cfl must lie in (0, 1], got {}", self.sigma_cfl));
        }
        if !(self.dt_ode > 0.0 && self.dt_ode.is_finite()) {
            return bad(format!("dt_ode must be positive, got {}", self.dt_ode));
        }
        if self.n_t == 0 {
            return bad("n_t must be at least 1".into());
        }
        if !(self.stop_tol >= 0.0) {
            return bad(format!("stop_tol must be non-negative, got {}", self.stop_tol));
        }
        if !(self.stokes_tol > 0.0 && self.stokes_tol < 1.0) {
            return bad(format!("stokes_tol must lie in (0, 1), got {}", self.stokes_tol));
        }
        Ok(())
    }

    /// Weight used on pyramid level `level` of a hierarchy with coarsest level `coarsest`.
    pub fn level_lambda(&self, level: usize, coarsest: usize) -> f64 {
        let steps = coarsest.saturating_sub(level) as i32;
        self.lambda_star * self.lambda_level_ratio.powi(steps)
    }

    /// Weight at iteration `n` (1-based) of a loop whose final weight is `lambda`.
    pub fn iteration_lambda(&self, lambda: f64, n: usize) -> f64 {
        match self.lambda_schedule {
            LambdaSchedule::Constant => lambda,
            LambdaSchedule::Geometric { kappa } => lambda * kappa.powi(self.n_loop.saturating_sub(n) as i32),
        }
    }

    /// Sets one knob by name. Names follow the struct fields; `kappa`
    /// switches to a geometric schedule, `schedule = constant` disables it.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        match key.as_str() {
            "horizon" | "t" => self.horizon = parse(&key, value)?,
            "n_loop" => self.n_loop = parse(&key, value)?,
            "lambda_star" | "lambda" => self.lambda_star = parse(&key, value)?,
            "kappa" => {
                self.lambda_schedule = LambdaSchedule::Geometric {
                    kappa: parse(&key, value)?,
                }
            }
            "schedule" | "lambda_schedule" => match value.trim().to_ascii_lowercase().as_str() {
                "constant" => self.lambda_schedule = LambdaSchedule::Constant,
                "geometric" => {
                    if self.lambda_schedule == LambdaSchedule::Constant {
                        self.lambda_schedule = LambdaSchedule::default();
                    }
                }
                other => return Err(Error::InvalidConfig(format!("unknown schedule `{other}`"))),
            },
            "pyramid_levels" | "levels" => self.pyramid_levels = parse(&key, value)?,
            "lambda_level_ratio" => self.lambda_level_ratio = parse(&key, value)?,
            "sigma_cfl" => self.sigma_cfl = parse(&key, value)?,
            "dt_ode" => self.dt_ode = parse(&key, value)?,
            "n_t" | "nt" => self.n_t = parse(&key, value)?,
            "scheme" => self.scheme = value.trim().parse()?,
            "stop_tol" => self.stop_tol = parse(&key, value)?,
            "stokes_tol" => self.stokes_tol = parse(&key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` document. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_loop, 10);
        assert_eq!(cfg.pyramid_levels, 3);
        assert!(cfg.lambda_star >= 1e5 && cfg.lambda_star <= 10f64.powf(5.5));
    }

    #[test]
    fn level_weights_grow_towards_fine_levels() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.level_lambda(3, 3), cfg.lambda_star);
        let r = cfg.level_lambda(2, 3) / cfg.level_lambda(3, 3);
        assert!((r - 10f64.powf(0.35)).abs() < 1e-12);
    }

    #[test]
    fn geometric_schedule_ends_at_target() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.iteration_lambda(7.0, cfg.n_loop), 7.0);
        let first = cfg.iteration_lambda(1.0, 1);
        assert!((first - 10f64.powf(0.9)).abs() < 1e-12);
    }

    #[test]
    fn text_overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# comment\nn_loop = 4\nscheme = tvd\n\nkappa=2 # inline\nlevels = 1")
            .unwrap();
        assert_eq!(cfg.n_loop, 4);
        assert_eq!(cfg.scheme, Scheme::Tvd);
        assert_eq!(cfg.pyramid_levels, 1);
        assert_eq!(cfg.lambda_schedule, LambdaSchedule::Geometric { kappa: 2.0 });
        assert!(cfg.apply_text("bogus = 1").is_err());
        assert!(cfg.apply_text("n_loop 3").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = RunConfig {
            lambda_level_ratio: 10.0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.lambda_level_ratio = 2.0;
        cfg.lambda_star = -1.0;
        assert!(cfg.validate().is_err());
        assert_eq!("2".parse::<LoopKind>().unwrap(), LoopKind::Two);
        assert!("3".parse::<LoopKind>().is_err());
    }
}
