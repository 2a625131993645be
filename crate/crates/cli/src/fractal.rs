use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use cubic_newton::fractal::{render, write_image, FractalSpec, OptimizerKind};
use cubic_newton::objectives::Window;
use cubic_newton::Error;

use crate::{CliError, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FractalMethod {
    Newton2,
    Ton,
}

#[derive(Debug, Args)]
pub struct FractalArgs {
    /// bohachevsky, mccormick, beale, himmelblau, quadratic or quartic.
    #[arg(long)]
    pub objective: String,
    #[arg(long, value_enum)]
    pub optimizer: FractalMethod,
    /// Identity shift tried when the unshifted subproblem fails (`ton` only).
    #[arg(long)]
    pub shift: Option<f64>,
    /// `x_min,x_max,y_min,y_max`; defaults to the objective's window.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<Window>,
    /// Resolution as `WxH`.
    #[arg(long, value_parser = parse_resolution, default_value = "400x400")]
    pub res: (usize, usize),
    /// Iteration budget per pixel [default: 50].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Output base path, or a directory to receive `<objective>_<optimizer>[_shiftN].*`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_window(s: &str) -> Result<Window, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [x0, x1, y0, y1] = v[..] else {
        return Err(format!("expected 4 comma-separated numbers, got {}", v.len()));
    };
    let w = Window::new(x0, x1, y0, y1);
    if w.is_degenerate() {
        return Err("window must satisfy x_min < x_max and y_min < y_max".into());
    }
    Ok(w)
}

pub fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: usize = w.parse().map_err(|e| format!("width `{w}`: {e}"))?;
    let h: usize = h.parse().map_err(|e| format!("height `{h}`: {e}"))?;
    if w < 2 || h < 2 {
        return Err("resolution must be at least 2x2".into());
    }
    Ok((w, h))
}

impl FractalArgs {
    fn spec(&self) -> Result<FractalSpec, CliError> {
        let kind = match (self.optimizer, self.shift) {
            (FractalMethod::Newton2, Some(_)) => return Err(CliError::usage_msg("--shift applies to `ton` only")),
            (FractalMethod::Newton2, None) => OptimizerKind::SecondOrder,
            (FractalMethod::Ton, None) => OptimizerKind::ThirdOrder,
            (FractalMethod::Ton, Some(s)) if !(s >= 0.0) || !s.is_finite() => {
                return Err(CliError::usage_msg("--shift must be a finite non-negative number"))
            }
            (FractalMethod::Ton, Some(s)) if s == 0.0 => OptimizerKind::ThirdOrder,
            (FractalMethod::Ton, Some(s)) => OptimizerKind::ThirdOrderWithShift(s),
        };
        let mut spec = FractalSpec::new(&self.objective, kind).map_err(|_| CliError::unknown_objective(&self.objective))?;
        if let Some(w) = self.window {
            spec.window = w;
        }
        (spec.width, spec.height) = self.res;
        if let Some(k) = self.max_iters {
            spec.config.max_iters = k;
        }
        Ok(spec)
    }
}

fn output_base(out: &Path, spec: &FractalSpec) -> PathBuf {
    if out.is_dir() {
        out.join(spec.file_stem())
    } else {
        out.to_path_buf()
    }
}

pub fn run(args: &FractalArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let spec = args.spec()?;
    let img = render(&spec).map_err(CliError::usage)?;
    let paths = write_image(&img, &output_base(&args.out, &spec)).map_err(|e| match e {
        Error::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::usage(other),
    })?;
    let w = |out: &mut dyn Write, line: String| writeln!(out, "{line}").map_err(CliError::stdout);
    for p in [&paths.ppm, &paths.labels, &paths.catalogue] {
        w(out, format!("wrote {}", p.display()))?;
    }
    w(out, format!("catalogue entries: {}", img.catalogue.len()))?;
    w(out, format!("converged pixels: {} / {}", img.converged_count(), img.labels.len()))?;
    Ok(EXIT_OK)
}
