use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::Args;
use cubic_newton::objectives::by_name;
use cubic_newton::optimizers::Termination;
use cubic_newton::OptimizerConfigF64;
use nalgebra::DVector;

use crate::method::Method;
use crate::{CliError, EXIT_MAX_ITERATIONS, EXIT_OK, EXIT_STEP_FAILED};

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    /// bohachevsky, mccormick, beale, himmelblau, quadratic or quartic.
    #[arg(long)]
    pub objective: String,
    #[arg(long, value_enum)]
    pub optimizer: Method,
    /// Starting point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub x0: Vec<f64>,
    /// Stop once the gradient norm is at most this [default: 1e-6].
    #[arg(long)]
    pub eps: Option<f64>,
    /// Iteration budget [default: 100].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Fixed step for `gd` [default: 0.01].
    #[arg(long)]
    pub step: Option<f64>,
    /// Identity shifts for `ton`, starting with 0 [default: 0,5,10].
    #[arg(long, value_delimiter = ',')]
    pub shifts: Option<Vec<f64>>,
    /// Write the iterates to this CSV file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl MinimizeArgs {
    fn config(&self) -> OptimizerConfigF64 {
        let mut cfg = OptimizerConfigF64::default();
        if let Some(e) = self.eps {
            cfg.grad_eps = e;
        }
        if let Some(k) = self.max_iters {
            cfg.max_iters = k;
        }
        if let Some(c) = self.step {
            cfg.step_size = c;
        }
        if let Some(s) = &self.shifts {
            cfg.shifts = s.clone();
        }
        cfg
    }
}

fn fmt_point(x: &DVector<f64>) -> String {
    x.iter().map(|v| format!("{v:.12}")).collect::<Vec<_>>().join(",")
}

pub fn run(args: &MinimizeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let f = by_name::<f64>(&args.objective).ok_or_else(|| CliError::unknown_objective(&args.objective))?;
    let x0 = DVector::from_vec(args.x0.clone());
    let trace = args.optimizer.run(f.as_ref(), &x0, &args.config()).map_err(CliError::usage)?;

    if let Some(path) = &args.trace {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(file);
        trace.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))?;
    }

    let w = |out: &mut dyn Write, line: String| writeln!(out, "{line}").map_err(CliError::stdout);
    w(out, format!("point: {}", fmt_point(trace.final_point())))?;
    w(out, format!("f: {:.6e}", trace.final_value()))?;
    w(out, format!("grad_norm: {:.3e}", trace.final_grad_norm()))?;
    w(out, format!("iterations: {}", trace.iterations()))?;
    w(out, format!("termination: {}", trace.termination))?;
    if let Some(why) = &trace.failure {
        w(out, format!("failure: {why}"))?;
    }
    w(
        out,
        format!(
            "RESULT {} {} iters={} grad={:.3e} status={}",
            args.objective,
            args.optimizer,
            trace.iterations(),
            trace.final_grad_norm(),
            trace.termination
        ),
    )?;
    Ok(match trace.termination {
        Termination::Converged => EXIT_OK,
        Termination::StepFailed => EXIT_STEP_FAILED,
        Termination::MaxIterations => EXIT_MAX_ITERATIONS,
    })
}
