//! JSON model files. Complex numbers are `[re, im]`, matrices are lists of rows.

use serde::{Deserialize, Serialize};

use crate::matcore::{c, CMatrix, CVector, HermitianMatrix};
use crate::model::{DensityMatrix, GeneratorSet, NoiseSpec, StatisticalModel};

pub type ComplexJson = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexJson>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dimension: usize,
    pub parameters: usize,
    pub generators: Vec<MatrixJson>,
    pub probe: ProbeConfig,
    /// Zero vector when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default)]
    pub noise: NoiseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeConfig {
    Pure(Vec<ComplexJson>),
    Mixed(MatrixJson),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    None,
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default = "unit")]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub site_dims: Vec<usize>,
}

fn unit() -> f64 {
    1.0
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { kind: NoiseKind::None, lambda: 1.0, site_dims: Vec::new() }
    }
}

impl NoiseConfig {
    pub fn to_spec(&self) -> NoiseSpec {
        match self.kind {
            NoiseKind::None => NoiseSpec::None,
            NoiseKind::Global => NoiseSpec::GlobalDepolarizing { lambda: self.lambda },
            NoiseKind::Local => NoiseSpec::LocalDepolarizing { lambda: self.lambda, site_dims: self.site_dims.clone() },
        }
    }

    pub fn from_spec(spec: &NoiseSpec) -> Self {
        match spec {
            NoiseSpec::None => NoiseConfig::default(),
            NoiseSpec::GlobalDepolarizing { lambda } => NoiseConfig { kind: NoiseKind::Global, lambda: *lambda, site_dims: Vec::new() },
            NoiseSpec::LocalDepolarizing { lambda, site_dims } => {
                NoiseConfig { kind: NoiseKind::Local, lambda: *lambda, site_dims: site_dims.clone() }
            }
        }
    }
}

/// Generator file for the `design` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorsConfig {
    pub generators: Vec<MatrixJson>,
    #[serde(default)]
    pub theta: Option<Vec<f64>>,
    /// Orthonormal basis for the basis-product design.
    #[serde(default)]
    pub states: Option<Vec<Vec<ComplexJson>>>,
    #[serde(default)]
    pub noise: NoiseConfig,
}

/// Parse failure, located either by byte offset or by field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn at(field: impl std::fmt::Display) -> impl Fn(crate::Error) -> ConfigError {
    move |e| ConfigError(format!("{field}: {e}"))
}

/// Byte offset of serde_json's 1-based line/column position.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, ConfigError> {
    serde_json::from_str(text).map_err(|e| {
        let offset = byte_offset(text, e.line(), e.column());
        ConfigError(format!("malformed config at byte {offset} (line {}, column {}): {e}", e.line(), e.column()))
    })
}

pub fn vector_from_json(v: &[ComplexJson]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|z| c(z[0], z[1])))
}

pub fn vector_to_json(v: &CVector) -> Vec<ComplexJson> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn matrix_from_json(m: &MatrixJson, field: &str) -> Result<CMatrix, ConfigError> {
    let n = m.len();
    if let Some(i) = m.iter().position(|row| row.len() != n) {
        return Err(ConfigError(format!("{field}: row {i} has {} entries, expected {n}", m[i].len())));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| c(m[i][j][0], m[i][j][1])))
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn generators_from_json(gens: &[MatrixJson], dim: Option<usize>) -> Result<GeneratorSet, ConfigError> {
    let mut out = Vec::with_capacity(gens.len());
    for (k, g) in gens.iter().enumerate() {
        let field = format!("generators[{k}]");
        let m = matrix_from_json(g, &field)?;
        if let Some(d) = dim {
            if m.nrows() != d {
                return Err(ConfigError(format!("{field}: size {} does not match dimension {d}", m.nrows())));
            }
        }
        out.push(HermitianMatrix::new(m).map_err(at(&field))?);
    }
    GeneratorSet::new(out).map_err(at("generators"))
}

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        parse_json(text)
    }

    pub fn to_model(&self) -> Result<StatisticalModel, ConfigError> {
        let d = self.dimension;
        let generators = generators_from_json(&self.generators, Some(d))?;
        if generators.len() != self.parameters {
            return Err(ConfigError(format!("parameters: {} declared but {} generators given", self.parameters, generators.len())));
        }
        let probe = match &self.probe {
            ProbeConfig::Pure(v) => {
                if v.len() != d {
                    return Err(ConfigError(format!("probe.pure: length {} does not match dimension {d}", v.len())));
                }
                DensityMatrix::pure(&vector_from_json(v)).map_err(at("probe.pure"))?
            }
            ProbeConfig::Mixed(m) => {
                let m = matrix_from_json(m, "probe.mixed")?;
                if m.nrows() != d {
                    return Err(ConfigError(format!("probe.mixed: size {} does not match dimension {d}", m.nrows())));
                }
                DensityMatrix::new(HermitianMatrix::new(m).map_err(at("probe.mixed"))?).map_err(at("probe.mixed"))?
            }
        };
        let theta = self.theta.clone().unwrap_or_else(|| vec![0.0; self.parameters]);
        let noise = self.noise.to_spec();
        noise.validate(d).map_err(at("noise"))?;
        StatisticalModel::new(probe, generators, noise, theta).map_err(at("theta"))
    }

    /// Config for a pure probe.
    pub fn pure(generators: &GeneratorSet, probe: &CVector, theta: &[f64], noise: &NoiseSpec) -> Self {
        ModelConfig {
            dimension: generators.dim(),
            parameters: generators.len(),
            generators: generators.as_slice().iter().map(|h| matrix_to_json(h.matrix())).collect(),
            probe: ProbeConfig::Pure(vector_to_json(probe)),
            theta: Some(theta.to_vec()),
            noise: NoiseConfig::from_spec(noise),
        }
    }
}
