use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use stokes_summa::pde::classify;
use stokes_summa::stokes::{lateral_eps, stokes_line};
use stokes_summa::verify::{euler_problem, resolvable_moduli};
use stokes_summa::{CauchyProblem, Error, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Classify,
    Sum,
    Stokes,
    Jump,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Samples `t = ρ e^{i arg}` with `ρ` evenly spaced in `[modulus_min, modulus_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub modulus_min: f64,
    pub modulus_max: f64,
    pub count: usize,
    #[serde(default)]
    pub arg: Option<f64>,
}

impl TGrid {
    pub fn moduli(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.modulus_min];
        }
        let step = (self.modulus_max - self.modulus_min) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.modulus_min + step * i as f64).collect()
    }
}

/// The run description read from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: CauchyProblem,
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub quadrature: Option<QuadratureConfig>,
    /// Point `z` in the datum's disc, `[re, im]`.
    #[serde(default)]
    pub z: Option<Complex64>,
    /// Summation direction for `sum`.
    #[serde(default)]
    pub direction: Option<f64>,
    /// Stokes line index for `jump`.
    #[serde(default)]
    pub line: Option<i64>,
    /// Lateral offset for `jump`.
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub t_grid: Option<TGrid>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn euler() -> Self {
        RunConfig {
            problem: euler_problem(),
            command: None,
            quadrature: None,
            z: None,
            direction: None,
            line: None,
            eps: None,
            t_grid: None,
            out: None,
            format: None,
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))
            .map_err(Into::into)
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

/// A config with every default filled in; embedded in each output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: Command,
    pub problem: CauchyProblem,
    pub quadrature: QuadratureConfig,
    pub z: Complex64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<TGrid>,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn validation(msg: String) -> anyhow::Error {
    Error::Validation(msg).into()
}

/// Direction halfway between the first two singular directions, or 0 when
/// there are none.
fn default_direction(cp: &CauchyProblem, z: Complex64) -> f64 {
    match stokes_line(cp, 0, z) {
        Ok(line) => line.direction + PI / cp.q1(),
        Err(_) => 0.0,
    }
}

pub fn resolve(cfg: RunConfig, command: Command, ov: &Overrides) -> anyhow::Result<Resolved> {
    if let Some(c) = cfg.command {
        if c != command {
            bail!(validation(format!("config names command {c:?} but {command:?} was requested")));
        }
    }
    cfg.problem.validate()?;
    let mut quadrature = cfg.quadrature.unwrap_or_default();
    if let Some(tol) = ov.tol {
        if tol <= 0.0 || !tol.is_finite() {
            bail!(validation(format!("--tol must be positive, got {tol}")));
        }
        quadrature.abs_tol = tol;
        quadrature.rel_tol = tol;
    }
    let z = cfg.z.unwrap_or_default();
    if let Some(g) = &cfg.t_grid {
        if g.count == 0 || g.modulus_min.is_nan() || g.modulus_min <= 0.0 || g.modulus_max < g.modulus_min || !g.modulus_max.is_finite() {
            bail!(validation(format!("invalid t grid {g:?}")));
        }
    }
    let cp = &cfg.problem;
    let (direction, line, eps, t_grid) = match command {
        Command::Classify | Command::Stokes | Command::Verify => (None, None, None, None),
        Command::Sum => {
            let d = cfg.direction.unwrap_or_else(|| default_direction(cp, z));
            let grid = cfg.t_grid.unwrap_or(TGrid {
                modulus_min: 0.1,
                modulus_max: 0.3,
                count: 3,
                arg: None,
            });
            let grid = TGrid {
                arg: Some(grid.arg.unwrap_or(d)),
                ..grid
            };
            (Some(d), None, None, Some(grid))
        }
        Command::Jump => {
            if !classify(cp).tag.is_summable() {
                bail!(validation(format!("regime {} has no Stokes lines", classify(cp).tag)));
            }
            let index = cfg.line.unwrap_or(0);
            let l = stokes_line(cp, index, z)?;
            let eps = lateral_eps(cp, ov.eps.or(cfg.eps))?;
            let grid = match cfg.t_grid {
                Some(g) => g,
                None => {
                    let [lo, hi] = resolvable_moduli(cp, z)?;
                    TGrid {
                        modulus_min: lo,
                        modulus_max: hi,
                        count: 3,
                        arg: None,
                    }
                }
            };
            let grid = TGrid {
                arg: Some(grid.arg.unwrap_or(l.direction)),
                ..grid
            };
            (None, Some(index), Some(eps), Some(grid))
        }
    };
    Ok(Resolved {
        command,
        problem: cfg.problem,
        quadrature,
        z,
        direction,
        line,
        eps,
        t_grid,
        format: ov.format.or(cfg.format).unwrap_or_default(),
        out: ov.out.clone().or(cfg.out),
    })
}
