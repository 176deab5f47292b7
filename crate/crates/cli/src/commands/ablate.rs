//! `ramol ablate`: the six-variant ablation table under one seed.

use ramol::eval::ablation_suite;
use ramol::learner::Variant;
use ramol::Result;

use crate::args::AblateArgs;
use crate::manifest::{create_run_dir, with_cleanup, RunManifest};
use crate::source::{build_config, load_source};

fn cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "--".into(),
    }
}

pub fn cmd_ablate(args: AblateArgs) -> Result<()> {
    // Hyperparameters are interpreted through the gated variant; each row's
    // config is derived from it.
    let base = build_config(&args.hyper, Variant::RamGated, Default::default(), args.seed)?;
    let source = load_source(&args.source)?;

    let mut manifest = RunManifest::new("ablate", source.info.clone(), vec![args.seed], args.window);
    manifest.config = Some(base.clone());
    manifest.variants = Some(
        ramol::eval::ablation_variants()
            .iter()
            .map(|(name, _, _)| name.to_string())
            .collect(),
    );
    manifest.outputs.push("ablation.csv".into());
    let dir = create_run_dir(&args.out, &manifest)?;

    with_cleanup(&dir, || {
        let rows = ablation_suite(&base, &source.data, args.seed, args.window)?;
        let mut csv = String::from(
            "method,final_acc,avg_acc,coverage,label_match,label_match_pre_gate\n",
        );
        for (name, m) in &rows {
            let line = format!(
                "{name},{:.4},{:.4},{},{},{}\n",
                m.final_acc,
                m.avg_acc,
                cell(m.coverage),
                cell(m.label_match),
                cell(m.label_match_pre_gate),
            );
            print!("{line}");
            csv.push_str(&line);
        }
        std::fs::write(dir.join("ablation.csv"), csv)?;
        println!("outputs in {}", dir.display());
        Ok(())
    })
}
