use std::path::PathBuf;

use clap::Args;

use atransn::synth::{check_ratio, SynthConfig, SynthWorld};

use crate::manifest::Manifest;
use crate::usage;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// JSON world configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Alignment ratios in (0, 1]; each set contains the smaller ones.
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 1.0])]
    pub ratios: Vec<f64>,
    #[arg(long)]
    pub entities: Option<usize>,
    #[arg(long)]
    pub relations: Option<usize>,
    #[arg(long)]
    pub triplets: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| atransn::Error::io(path, e))?;
            serde_json::from_str::<SynthConfig>(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => SynthConfig::default(),
    };
    for (slot, value) in [
        (&mut config.entities, args.entities),
        (&mut config.relations, args.relations),
        (&mut config.triplets, args.triplets),
        (&mut config.clusters, args.clusters),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    for &r in &args.ratios {
        check_ratio(r)?;
    }
    let world = SynthWorld::generate(&config, args.seed)?;
    let files = world.write(&args.out, &args.ratios)?;

    let mut manifest = Manifest::new("synth", args.seed, &config, &[])?;
    manifest.artifact("teacher", &files.teacher);
    manifest.artifact("train", &files.train);
    manifest.artifact("valid", &files.valid);
    manifest.artifact("test", &files.test);
    for (ratio, path) in &files.alignments {
        manifest.artifact(&format!("align_{ratio}"), path);
    }
    manifest.write(&args.out.join("manifest.json"))?;
    println!(
        "teacher {} triplets, target {} / {} / {} triplets, {} alignment file(s)",
        world.teacher.triplets.len(),
        world.splits.train.len(),
        world.splits.valid.len(),
        world.splits.test.len(),
        files.alignments.len()
    );
    Ok(())
}
