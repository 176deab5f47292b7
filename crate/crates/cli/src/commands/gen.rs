//! `ramol gen`: materialise a synthetic stream to CSV, with a sidecar file
//! recording regime boundaries and per-step Bayes-optimal labels.

use std::io::Write;

use ramol::stream::{gen_piecewise_stream, load_regimes_toml};
use ramol::{Error, Result};

use crate::manifest::{write_json, DatasetInfo, RunManifest};
use crate::source::sha256_file;

pub fn cmd_gen(args: crate::args::GenArgs) -> Result<()> {
    let regimes = load_regimes_toml::<f64>(&args.spec)?;
    let stream = gen_piecewise_stream(regimes.clone(), args.seed)?;
    let schedule = stream.schedule();
    let dim = stream.dim();

    let out = &args.out;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let sidecar = out.with_extension("sidecar.csv");
    let manifest_path = out.with_extension("manifest.json");

    let mut manifest = RunManifest::new(
        "gen",
        DatasetInfo {
            kind: "synthetic".into(),
            path: args.spec.display().to_string(),
            sha256: sha256_file(&args.spec)?,
            rows: schedule.total_steps() as usize,
            dim,
            classes: stream.classes(),
            label_mapping: None,
            label_col: Some("class".into()),
            feature_cols: None,
            delimiter: Some(",".into()),
            stream_seed: Some(args.seed),
        },
        vec![args.seed],
        0,
    );
    manifest.outputs = vec![
        out.display().to_string(),
        sidecar.display().to_string(),
    ];
    write_json(&manifest_path, &manifest)?;

    let result = (|| -> Result<()> {
        let mut csv = std::io::BufWriter::new(std::fs::File::create(out)?);
        let headers: Vec<String> = (0..dim).map(|i| format!("f{i}")).collect();
        writeln!(csv, "{},class", headers.join(","))?;

        let mut side = std::io::BufWriter::new(std::fs::File::create(&sidecar)?);
        writeln!(side, "step,regime,bayes_label")?;

        for example in stream {
            let regime_idx = schedule
                .regime_index_at(example.step)
                .ok_or_else(|| Error::Data("step outside schedule".into()))?;
            let regime = &regimes[regime_idx];
            let bayes = regime.bayes_predict(&example.features)?;
            let fields: Vec<String> = example.features.iter().map(|v| format!("{v}")).collect();
            writeln!(csv, "{},{}", fields.join(","), example.label)?;
            writeln!(side, "{},{},{bayes}", example.step, regime.id)?;
        }
        csv.flush()?;
        side.flush()?;
        Ok(())
    })();

    if let Err(e) = result {
        let _ = std::fs::remove_file(out);
        let _ = std::fs::remove_file(&sidecar);
        let _ = std::fs::remove_file(&manifest_path);
        return Err(e);
    }
    println!(
        "wrote {} ({} rows), sidecar {}, manifest {}",
        out.display(),
        schedule.total_steps(),
        sidecar.display(),
        manifest_path.display()
    );
    Ok(())
}
