//! Data-source loading and learner-config construction shared by the
//! subcommands.

use ramol::learner::{AblationFlags, LearnerConfig, Variant};
use ramol::model::Activation;
use ramol::stream::{load_regimes_toml, open_csv_stream, CsvSchema, RegimeSpec, StreamData};
use ramol::{Error, Result};
use sha2::{Digest, Sha256};

use crate::args::{HyperArgs, SourceArgs};
use crate::manifest::DatasetInfo;

pub struct LoadedSource {
    pub data: StreamData<f64>,
    pub info: DatasetInfo,
    /// Present for synthetic sources; enables regret accounting.
    pub regimes: Option<Vec<RegimeSpec<f64>>>,
}

pub fn sha256_file(path: &std::path::Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

pub fn load_source(args: &SourceArgs) -> Result<LoadedSource> {
    match (&args.data, &args.synthetic) {
        (Some(csv), None) => load_csv(csv, args),
        (None, Some(spec)) => load_synthetic(spec, args.stream_seed),
        _ => Err(Error::Config(
            "exactly one of --data and --synthetic is required".into(),
        )),
    }
}

fn csv_schema(args: &SourceArgs) -> Result<CsvSchema> {
    let delim = args.delimiter.as_bytes();
    if delim.len() != 1 {
        return Err(Error::Config("delimiter must be a single byte".into()));
    }
    Ok(CsvSchema {
        label_col: args.label_col.clone(),
        feature_cols: args.feature_cols.clone(),
        delimiter: delim[0],
        label_values: args.label_values.clone(),
    })
}

fn load_csv(path: &std::path::Path, args: &SourceArgs) -> Result<LoadedSource> {
    let schema = csv_schema(args)?;
    let stream = open_csv_stream::<f64>(path, &schema)?;
    let label_mapping = stream.label_mapping().to_vec();
    let data = stream.collect_data()?;
    let info = DatasetInfo {
        kind: "csv".into(),
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
        rows: data.len(),
        dim: data.dim,
        classes: data.classes,
        label_mapping: Some(label_mapping),
        label_col: Some(args.label_col.clone()),
        feature_cols: args.feature_cols.clone(),
        delimiter: Some(args.delimiter.clone()),
        stream_seed: None,
    };
    Ok(LoadedSource {
        data,
        info,
        regimes: None,
    })
}

fn load_synthetic(spec: &std::path::Path, stream_seed: u64) -> Result<LoadedSource> {
    let regimes = load_regimes_toml::<f64>(spec)?;
    let stream = ramol::stream::gen_piecewise_stream(regimes.clone(), stream_seed)?;
    let data = stream.collect_data()?;
    let info = DatasetInfo {
        kind: "synthetic".into(),
        path: spec.display().to_string(),
        sha256: sha256_file(spec)?,
        rows: data.len(),
        dim: data.dim,
        classes: data.classes,
        label_mapping: None,
        label_col: None,
        feature_cols: None,
        delimiter: None,
        stream_seed: Some(stream_seed),
    };
    Ok(LoadedSource {
        data,
        info,
        regimes: Some(regimes),
    })
}

/// Reload the source recorded in a manifest, verifying the content hash.
pub fn reload_from_info(info: &DatasetInfo) -> Result<LoadedSource> {
    let path = std::path::PathBuf::from(&info.path);
    let hash = sha256_file(&path)?;
    if hash != info.sha256 {
        return Err(Error::Data(format!(
            "{} changed since the manifest was written (sha256 {hash} != {})",
            info.path, info.sha256
        )));
    }
    if info.kind == "synthetic" {
        load_synthetic(&path, info.stream_seed.unwrap_or(0))
    } else {
        let args = SourceArgs {
            data: Some(path),
            synthetic: None,
            stream_seed: 0,
            label_col: info.label_col.clone().unwrap_or_else(|| "class".into()),
            feature_cols: info.feature_cols.clone(),
            delimiter: info.delimiter.clone().unwrap_or_else(|| ",".into()),
            // Pin the recorded mapping so class indices reproduce exactly.
            label_values: info.label_mapping.clone(),
        };
        load_source(&args)
    }
}

pub fn parse_ablation(flags: &Option<Vec<String>>) -> Result<AblationFlags> {
    let mut out = AblationFlags::default();
    if let Some(flags) = flags {
        for flag in flags {
            match flag.as_str() {
                "no_time" => out.no_time = true,
                "no_sim" => out.no_sim = true,
                "no_decay" => out.no_decay = true,
                other => {
                    return Err(Error::Config(format!(
                        "unknown ablation flag `{other}` (expected no_time, no_sim, no_decay)"
                    )))
                }
            }
        }
    }
    Ok(out)
}

pub fn build_config(
    hyper: &HyperArgs,
    variant: Variant,
    ablation: AblationFlags,
    seed: u64,
) -> Result<LearnerConfig<f64>> {
    let cfg = LearnerConfig::<f64> {
        variant,
        buffer_capacity: hyper.buffer,
        k: hyper.k,
        horizon: hyper.horizon.or(match variant {
            Variant::RamGated => Some(2000),
            _ => None,
        }),
        tau: hyper.tau,
        adaptive_tau: hyper.adaptive_tau,
        rho: hyper.rho,
        alpha: hyper.alpha,
        beta: hyper.beta,
        lr: hyper.lr,
        lr_decay: hyper.lr_decay,
        hidden_dim: hyper.hidden,
        activation: hyper.activation.parse::<Activation>()?,
        seed,
        ablation,
        standardize: !hyper.no_standardize,
        renormalize_after_gate: !hyper.no_renormalize_gate,
    };
    cfg.validate()?;
    Ok(cfg)
}
