use std::fmt;

use clap::ValueEnum;
use cubic_newton::objectives::Objective;
use cubic_newton::optimizers::{
    gradient_descent_fixed, gradient_descent_quadratic_fit, second_order_newton, third_order_newton,
};
use cubic_newton::{OptimizerConfigF64, OptimizerTraceF64, Result};
use nalgebra::DVector;
use serde::Deserialize;

/// Optimizers reachable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Undamped second-order Newton.
    Newton2,
    /// Third-order Newton.
    Ton,
    /// Gradient descent with a fixed step.
    Gd,
    /// Gradient descent with the quadratic-fit line search.
    Qfit,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Newton2 => "newton2",
            Method::Ton => "ton",
            Method::Gd => "gd",
            Method::Qfit => "qfit",
        }
    }

    pub fn run(self, f: &dyn Objective<f64>, x0: &DVector<f64>, cfg: &OptimizerConfigF64) -> Result<OptimizerTraceF64> {
        match self {
            Method::Newton2 => second_order_newton(f, x0, cfg),
            Method::Ton => third_order_newton(f, x0, cfg),
            Method::Gd => gradient_descent_fixed(f, x0, cfg),
            Method::Qfit => gradient_descent_quadratic_fit(f, x0, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
