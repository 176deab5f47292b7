//! `ramol tune`: small grid search on a validation prefix. A convenience for
//! picking replay hyperparameters; kept out of any accuracy claims.

use ramol::eval::prequential_run;
use ramol::learner::Variant;
use ramol::stream::StreamData;
use ramol::{Error, Result};

use crate::args::TuneArgs;
use crate::manifest::{create_run_dir, with_cleanup, RunManifest};
use crate::source::{build_config, load_source};

pub fn cmd_tune(args: TuneArgs) -> Result<()> {
    if args.prefix == 0 {
        return Err(Error::Config("prefix must be positive".into()));
    }
    let source = load_source(&args.source)?;
    let take = args.prefix.min(source.data.len());
    let prefix = StreamData::new(
        source.data.dim,
        source.data.classes,
        source.data.examples[..take].to_vec(),
    )?;

    let mut manifest = RunManifest::new("tune", source.info.clone(), vec![args.seed], args.window);
    manifest.outputs.push("tune.csv".into());
    let dir = create_run_dir(&args.out, &manifest)?;

    with_cleanup(&dir, || {
        let mut rows: Vec<(String, f64)> = Vec::new();

        let base = build_config(&args.hyper, Variant::Baseline, Default::default(), args.seed)?;
        let m = prequential_run(&base, &prefix, args.window.min(take))?;
        rows.push(("baseline".into(), m.avg_acc));

        for beta in [0.25, 0.5, 1.0, 2.0] {
            let mut cfg =
                build_config(&args.hyper, Variant::RamNaive, Default::default(), args.seed)?;
            cfg.beta = beta;
            let m = prequential_run(&cfg, &prefix, args.window.min(take))?;
            rows.push((format!("ram_naive beta={beta}"), m.avg_acc));
        }
        for alpha in [0.25, 0.5, 1.0] {
            for rho in [0.0, 0.1, 0.3] {
                let mut cfg =
                    build_config(&args.hyper, Variant::RamGated, Default::default(), args.seed)?;
                cfg.alpha = alpha;
                cfg.rho = rho;
                let m = prequential_run(&cfg, &prefix, args.window.min(take))?;
                rows.push((format!("ram_gated alpha={alpha} rho={rho}"), m.avg_acc));
            }
        }

        rows.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut csv = String::from("config,prefix_avg_acc\n");
        for (name, acc) in &rows {
            let line = format!("{name},{acc:.4}\n");
            print!("{line}");
            csv.push_str(&line);
        }
        std::fs::write(dir.join("tune.csv"), csv)?;
        println!("best on {take}-step prefix: {}", rows[0].0);
        println!("outputs in {}", dir.display());
        Ok(())
    })
}
