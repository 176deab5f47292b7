//! `ramol bench`: seed variability and runtime factors per variant.

use ramol::eval::{aggregate, timed_prequential_run, AggregateMetrics};
use ramol::learner::Variant;
use ramol::{Error, Result};

use crate::args::BenchArgs;
use crate::manifest::{create_run_dir, with_cleanup, write_json, RunManifest};
use crate::source::{build_config, load_source};

pub fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.variants.is_empty() {
        return Err(Error::Config("at least one variant required".into()));
    }
    if args.seeds.is_empty() {
        return Err(Error::Config("at least one seed required".into()));
    }
    let variants: Vec<Variant> = args
        .variants
        .iter()
        .map(|v| v.parse())
        .collect::<Result<_>>()?;
    let source = load_source(&args.source)?;

    let mut manifest = RunManifest::new("bench", source.info.clone(), args.seeds.clone(), args.window);
    manifest.variants = Some(args.variants.clone());
    manifest.repeats = Some(args.repeats);
    manifest.outputs.push("bench.csv".into());
    manifest.outputs.push("bench.json".into());
    let dir = create_run_dir(&args.out, &manifest)?;

    with_cleanup(&dir, || {
        // Timing runs stay sequential so measurements do not contend.
        let mut aggregates: Vec<AggregateMetrics> = Vec::new();
        for &variant in &variants {
            let runs: Vec<_> = args
                .seeds
                .iter()
                .map(|&seed| {
                    let cfg = build_config(&args.hyper, variant, Default::default(), seed)?;
                    timed_prequential_run(&cfg, &source.data, args.window, args.repeats)
                })
                .collect::<Result<_>>()?;
            aggregates.push(aggregate(&runs)?);
        }
        // Factors are relative to the baseline row when present, otherwise
        // to the first row.
        let reference = aggregates
            .iter()
            .position(|a| a.variant == "baseline")
            .unwrap_or(0);
        let reference_wall = aggregates[reference].wall_clock_mean_s;
        for agg in &mut aggregates {
            agg.runtime_factor = Some(agg.wall_clock_mean_s / reference_wall);
        }

        let mut csv = String::from("variant,final_std,avg_std,time_factor\n");
        for agg in &aggregates {
            let line = format!(
                "{},{:.4},{:.4},{:.2}\n",
                agg.variant,
                agg.final_std,
                agg.avg_std,
                agg.runtime_factor.unwrap_or(1.0)
            );
            print!("{line}");
            csv.push_str(&line);
        }
        std::fs::write(dir.join("bench.csv"), csv)?;
        write_json(&dir.join("bench.json"), &aggregates)?;
        println!("outputs in {}", dir.display());
        Ok(())
    })
}
