//! `ramol run`: prequential evaluation of one variant over a seed list.

use rayon::prelude::*;

use ramol::eval::{aggregate, prequential_run_full, regret_run_full, RegretRecord, RunMetrics};
use ramol::learner::{Learner, LearnerConfig, Variant};
use ramol::{Error, Result};

use crate::args::RunArgs;
use crate::manifest::{create_run_dir, with_cleanup, write_json, RunManifest};
use crate::source::{build_config, load_source, parse_ablation, reload_from_info, LoadedSource};

pub fn cmd_run(args: RunArgs) -> Result<()> {
    if let Some(manifest_path) = &args.manifest {
        let manifest = RunManifest::load(manifest_path)?;
        if manifest.command != "run" {
            return Err(Error::Config(format!(
                "manifest records a `{}` invocation, not `run`",
                manifest.command
            )));
        }
        let source = reload_from_info(&manifest.dataset)?;
        let cfg = manifest
            .config
            .clone()
            .ok_or_else(|| Error::Data("manifest lacks a learner config".into()))?;
        cfg.validate()?;
        return execute(source, cfg, manifest.seeds.clone(), manifest.window, &args.out,
            manifest.dump_buffer, manifest.drift_samples.unwrap_or(20_000));
    }

    let variant: Variant = args.variant.parse()?;
    let ablation = parse_ablation(&args.ablation)?;
    let cfg = build_config(&args.hyper, variant, ablation, 0)?;
    if args.seeds.is_empty() {
        return Err(Error::Config("at least one seed required".into()));
    }
    let source = load_source(&args.source)?;
    execute(
        source,
        cfg,
        args.seeds.clone(),
        args.window,
        &args.out,
        args.dump_buffer,
        args.hyper.drift_samples,
    )
}

fn execute(
    source: LoadedSource,
    cfg: LearnerConfig<f64>,
    seeds: Vec<u64>,
    window: usize,
    out_root: &std::path::Path,
    dump_buffer: bool,
    drift_samples: usize,
) -> Result<()> {
    let mut manifest = RunManifest::new("run", source.info.clone(), seeds.clone(), window);
    manifest.config = Some(cfg.clone());
    manifest.dump_buffer = dump_buffer;
    manifest.drift_samples = source.regimes.as_ref().map(|_| drift_samples);
    for s in &seeds {
        manifest.outputs.push(format!("metrics-seed{s}.json"));
        manifest.outputs.push(format!("curve-seed{s}.csv"));
        manifest.outputs.push(format!("params-seed{s}.json"));
        if source.regimes.is_some() {
            manifest.outputs.push(format!("regret-seed{s}.json"));
        }
        if dump_buffer {
            manifest.outputs.push(format!("buffer-seed{s}.json"));
        }
    }
    manifest.outputs.push("aggregate.json".into());
    manifest.outputs.push("aggregate.csv".into());
    let dir = create_run_dir(out_root, &manifest)?;

    with_cleanup(&dir, || {
        type SeedOutcome = (RunMetrics, Option<RegretRecord>, Learner<f64>);
        let results: Vec<(u64, SeedOutcome)> = seeds
            .par_iter()
            .map(|&seed| {
                let cfg = cfg.clone().with_seed(seed);
                let outcome = match &source.regimes {
                    Some(regimes) => {
                        let stream_seed = source.info.stream_seed.unwrap_or(0);
                        let (metrics, record, learner) = regret_run_full(
                            &cfg,
                            regimes,
                            stream_seed,
                            window,
                            drift_samples,
                            stream_seed,
                        )?;
                        (metrics, Some(record), learner)
                    }
                    None => {
                        let (metrics, learner) = prequential_run_full(&cfg, &source.data, window)?;
                        (metrics, None, learner)
                    }
                };
                Ok((seed, outcome))
            })
            .collect::<Result<_>>()?;

        let mut runs = Vec::with_capacity(results.len());
        for (seed, (metrics, regret, learner)) in results {
            write_json(&dir.join(format!("metrics-seed{seed}.json")), &metrics)?;
            let curve = std::fs::File::create(dir.join(format!("curve-seed{seed}.csv")))?;
            metrics.write_curve_csv(std::io::BufWriter::new(curve))?;
            std::fs::write(
                dir.join(format!("params-seed{seed}.json")),
                learner.params().to_json(),
            )?;
            if let Some(record) = regret {
                write_json(&dir.join(format!("regret-seed{seed}.json")), &record)?;
            }
            if dump_buffer {
                std::fs::write(
                    dir.join(format!("buffer-seed{seed}.json")),
                    learner.buffer().snapshot_json(),
                )?;
            }
            println!(
                "seed {seed}: avg_acc {:.4} final_acc {:.4} ({} steps, {:.2}s)",
                metrics.avg_acc, metrics.final_acc, metrics.steps, metrics.wall_clock_s
            );
            runs.push(metrics);
        }
        let agg = aggregate(&runs)?;
        write_json(&dir.join("aggregate.json"), &agg)?;
        std::fs::write(
            dir.join("aggregate.csv"),
            format!(
                "method,final_mean,final_std,avg_mean,avg_std\n{},{:.4},{:.4},{:.4},{:.4}\n",
                agg.variant, agg.final_mean, agg.final_std, agg.avg_mean, agg.avg_std
            ),
        )?;
        println!(
            "{} over {} seed(s): avg {:.4} +/- {:.4}, final {:.4} +/- {:.4}",
            agg.variant, agg.n_runs, agg.avg_mean, agg.avg_std, agg.final_mean, agg.final_std
        );
        println!("outputs in {}", dir.display());
        Ok(())
    })
}
