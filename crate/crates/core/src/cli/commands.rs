use std::fs;
use std::io::Write;
use std::path::Path;

use super::config::{generators_from_json, parse_json, vector_from_json, GeneratorsConfig, ModelConfig};
use super::{CliError, DesignArgs, DesignKind, Encoding};
use crate::designs::{
    ancilla_generators, antiparallel_pair, basis_product_model, certify, max_entangled_state, product_state, AntiparallelSpec,
    CompatibilityCertificate,
};
use crate::holevo::{r_figure_with, HolevoOptions};
use crate::model::{effective_generators, lift_local_generators, StatisticalModel};
use crate::sweep::{lambda_grid, sweep as run_sweep, write_csv, SweepOptions, SweepRow};
use crate::Error;

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<StatisticalModel, CliError> {
    Ok(ModelConfig::parse(&read(path)?)?.to_model()?)
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    fs::File::create(path).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::input(format!("write failed: {e}"))
}

/// Stdout write that tolerates a closed pipe.
fn emit(text: &str) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_error(e)),
        _ => Ok(()),
    }
}

pub fn report(model: &Path, out: Option<&Path>, opts: &HolevoOptions) -> Result<(), CliError> {
    let model = load_model(model)?;
    let r = r_figure_with(&model.encode()?, opts)?;
    let sep = if r.separable.exact { "=" } else { ">=" };
    emit(&format!(
        "I        {:.9}\nI*       {:.9}\nr        {:.9}\nC_S(1)   {:.9}\nC_H(1)   {:.9}\nC_Z(1)   {:.9}\n\
         r_sep    {sep} {:.9}\npurity   {:.9}\nsdp      {:?}, gap {:.2e}, {} iterations\n",
        r.incompat,
        r.istar,
        r.r,
        r.c_s_identity,
        r.c_h_identity,
        r.c_z_identity,
        r.separable.value,
        r.purity,
        r.sdp_status,
        r.sdp_gap,
        r.sdp_iterations
    ))?;
    if let Some(path) = out {
        let row = SweepRow { lambda: model.noise.lambda().unwrap_or(1.0), report: Ok(r) };
        write_csv(&[row], create(path)?).map_err(io_error)?;
    }
    Ok(())
}

pub fn sweep(
    model: &Path,
    from: f64,
    to: f64,
    steps: usize,
    out: Option<&Path>,
    workers: Option<usize>,
    opts: &HolevoOptions,
) -> Result<(), CliError> {
    let model = load_model(model)?;
    if steps < 2 {
        return Err(CliError::input("a sweep needs --steps >= 2"));
    }
    for end in [from, to] {
        model.noise.with_lambda(end).validate(model.dim())?;
    }
    let grid = lambda_grid(from, to, steps)?;
    let rows = run_sweep(&model, &grid, &SweepOptions { holevo: *opts, workers })?;
    match out {
        Some(path) => write_csv(&rows, create(path)?),
        None => match write_csv(&rows, std::io::stdout().lock()) {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            other => other,
        },
    }
    .map_err(io_error)
}

fn print_certificate(cert: &CompatibilityCertificate) -> Result<(), CliError> {
    let mut text = format!("verdict  {:?}\n|A|_F    {:.3e}\n", cert.verdict, cert.a_norm);
    if let Some(r) = cert.sdp_r {
        text += &format!("r (SDP)  {r:.9}\n");
    }
    emit(&text)
}

fn antiparallel_spec(args: &DesignArgs) -> Result<AntiparallelSpec, CliError> {
    let k = args.subset.len();
    let or_default = |v: &[f64]| if v.is_empty() { vec![0.0; k] } else { v.to_vec() };
    let signs = if args.signs.is_empty() { vec![0; k] } else { args.signs.clone() };
    if signs.iter().any(|&s| s > 1) {
        return Err(CliError::input("--signs takes 0 or 1 per subset entry"));
    }
    Ok(AntiparallelSpec {
        subset: args.subset.clone(),
        signs: signs.into_iter().map(|s| s == 1).collect(),
        phases1: or_default(&args.phases),
        phases2: or_default(&args.phases2),
        zero_mode: args.zero_mode,
    })
}

fn design_config(args: &DesignArgs, gc: &GeneratorsConfig) -> Result<Option<ModelConfig>, CliError> {
    let gens = generators_from_json(&gc.generators, None)?;
    let theta = gc.theta.clone().unwrap_or_else(|| vec![0.0; gens.len()]);
    let noise = gc.noise.to_spec();
    let config = match args.kind {
        DesignKind::MaxEntangled => {
            let lifted = match args.encoding {
                Encoding::Ancilla => ancilla_generators(&gens)?,
                Encoding::Double => lift_local_generators(&gens, 2)?,
            };
            ModelConfig::pure(&lifted, &max_entangled_state(gens.dim())?, &theta, &noise)
        }
        DesignKind::Antiparallel => {
            if gens.len() != 2 {
                return Err(CliError::input("the anti-parallel design needs exactly two generators"));
            }
            let heff = effective_generators(&gens, &theta)?;
            let (psi1, psi2) = match antiparallel_pair(&heff[0], &heff[1], &antiparallel_spec(args)?) {
                Err(Error::NoConstructionNeeded) => {
                    emit(&format!("{}\n", Error::NoConstructionNeeded))?;
                    return Ok(None);
                }
                other => other?,
            };
            ModelConfig::pure(&lift_local_generators(&gens, 2)?, &product_state(&[psi1, psi2]), &theta, &noise)
        }
        DesignKind::BasisProduct => {
            let states: Vec<_> = gc
                .states
                .as_ref()
                .ok_or_else(|| CliError::input("the basis-product design needs `states` in the generator file"))?
                .iter()
                .map(|s| vector_from_json(s))
                .collect();
            let model = basis_product_model(&states, &gens, &theta)?;
            ModelConfig::pure(&model.generators, &product_state(&states), &theta, &noise)
        }
    };
    Ok(Some(config))
}

pub fn design(args: &DesignArgs, opts: &HolevoOptions) -> Result<(), CliError> {
    let gc: GeneratorsConfig = parse_json(&read(&args.generators)?)?;
    let Some(config) = design_config(args, &gc)? else { return Ok(()) };
    let model = config.to_model()?;
    print_certificate(&certify(&model, (!args.skip_sdp).then_some(opts))?)?;
    if let Some(path) = &args.out {
        let mut f = create(path)?;
        let text = serde_json::to_string_pretty(&config).map_err(|e| CliError::input(e.to_string()))?;
        writeln!(f, "{text}").map_err(io_error)?;
    }
    Ok(())
}
