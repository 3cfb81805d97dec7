//! Shared numerical tolerances.
//!
//! Every tolerance used by the library lives in [`Numerics`]. The record is
//! installed once per process (see [`install`]); library code reads it
//! through [`numerics`]. The command-line front end loads an alternate
//! record from the file named by `QINCOMPAT_NUMERICS`.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the environment variable pointing at a JSON numerics file.
pub const NUMERICS_ENV: &str = "QINCOMPAT_NUMERICS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    /// Asymmetry below which Hermitian symmetrization is silent.
    pub hermitian_silent: f64,
    /// Asymmetry above which a matrix is rejected as non-Hermitian.
    pub hermitian_max: f64,
    /// Relative PSD clamping window: eigenvalues in `[-psd_clamp * |M|, 0]` become 0.
    pub psd_clamp: f64,
    /// Below this modulus `(e^z - 1)/z` is evaluated by its Taylor series.
    pub phi_taylor: f64,
    /// Absolute trace / tracelessness tolerance.
    pub trace_tol: f64,
    /// Support threshold relative to the largest eigenvalue of rho.
    pub support_rel: f64,
    /// Largest tolerated norm of the off-support block of a derivative.
    pub off_support: f64,
    /// Relative threshold on the smallest QFI eigenvalue.
    pub singular_fisher: f64,
    /// Frobenius norm under which the commutator matrix counts as zero.
    pub a_zero: f64,
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            hermitian_silent: 1e-12,
            hermitian_max: 1e-6,
            psd_clamp: 1e-12,
            phi_taylor: 1e-4,
            trace_tol: 1e-10,
            support_rel: 1e-12,
            off_support: 1e-8,
            singular_fisher: 1e-10,
            a_zero: 1e-10,
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl Numerics {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("numerics config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read numerics config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

static GLOBAL: OnceLock<Numerics> = OnceLock::new();

/// The process-wide numerics record (defaults unless [`install`] ran first).
pub fn numerics() -> &'static Numerics {
    GLOBAL.get_or_init(Numerics::default)
}

/// Install a numerics record. Fails if one is already in use.
pub fn install(n: Numerics) -> std::result::Result<(), Numerics> {
    GLOBAL.set(n)
}
