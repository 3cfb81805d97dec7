//! Noise-strength sweeps of the incompatibility report.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::holevo::{r_figure_with, HolevoOptions, IncompatReport};
use crate::model::{NoiseSpec, StatisticalModel};

pub const CSV_HEADER: [&str; 9] = ["lambda", "I", "Istar", "r", "C_S", "C_H", "C_Z", "purity", "status"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    /// `Err` rows keep their place in the sweep and are written with empty fields.
    pub report: std::result::Result<IncompatReport, Error>,
}

impl SweepRow {
    pub fn status(&self) -> &'static str {
        match &self.report {
            Ok(_) => "ok",
            Err(e) => status_code(e),
        }
    }
}

fn status_code(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::SingularMatrix => "singular_matrix",
        Error::ModelNotDifferentiable(_) => "not_differentiable",
        Error::SingularFisher { .. } => "singular_fisher",
        Error::DegenerateModel(_) => "degenerate_model",
        Error::NoIncompatibility => "no_incompatibility",
        Error::NoConstructionNeeded => "no_construction_needed",
        Error::Solver(_) => "solver_failure",
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub holevo: HolevoOptions,
    /// Thread count for the parallel build; `None` uses the rayon default.
    pub workers: Option<usize>,
}

/// `steps` equally spaced values from `from` to `to` inclusive.
pub fn lambda_grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if !from.is_finite() || !to.is_finite() {
        return invalid("sweep bounds must be finite");
    }
    match steps {
        0 => invalid("a sweep needs at least one step"),
        1 => Ok(vec![from]),
        n => Ok((0..n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect()),
    }
}

/// Report for the model with its noise strength replaced by `lambda`.
pub fn evaluate(model: &StatisticalModel, lambda: f64, opts: &HolevoOptions) -> SweepRow {
    let report = model.with_noise(model.noise.with_lambda(lambda)).and_then(|m| m.encode()).and_then(|enc| r_figure_with(&enc, opts));
    SweepRow { lambda, report }
}

fn check_noisy(model: &StatisticalModel) -> Result<()> {
    if model.noise == NoiseSpec::None {
        return invalid("a noise sweep needs a model with a noise channel");
    }
    Ok(())
}

/// Rows in the order of `lambdas`, evaluated on the current thread.
pub fn sweep_sequential(model: &StatisticalModel, lambdas: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    check_noisy(model)?;
    Ok(lambdas.iter().map(|&l| evaluate(model, l, &opts.holevo)).collect())
}

/// Rows in the order of `lambdas`, one task per grid point.
#[cfg(feature = "parallel")]
pub fn sweep_parallel(model: &StatisticalModel, lambdas: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    check_noisy(model)?;
    let run = || lambdas.par_iter().map(|&l| evaluate(model, l, &opts.holevo)).collect();
    match opts.workers {
        None => Ok(run()),
        Some(0) => invalid("worker count must be positive"),
        Some(n) => {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn sweep(model: &StatisticalModel, lambdas: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    #[cfg(feature = "parallel")]
    return sweep_parallel(model, lambdas, opts);
    #[cfg(not(feature = "parallel"))]
    sweep_sequential(model, lambdas, opts)
}

/// Shortest decimal with 12 significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let parsed: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let plain = format!("{parsed}");
    let sci = format!("{parsed:e}");
    if plain.len() <= sci.len() {
        plain
    } else {
        sci
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        let mut rec = vec![format_sig(row.lambda)];
        match &row.report {
            Ok(r) => {
                rec.extend([r.incompat, r.istar, r.r, r.c_s_identity, r.c_h_identity, r.c_z_identity, r.purity].into_iter().map(format_sig))
            }
            Err(_) => rec.extend(std::iter::repeat_n(String::new(), 7)),
        }
        rec.push(row.status().to_string());
        w.write_record(&rec)?;
    }
    w.flush()
}
