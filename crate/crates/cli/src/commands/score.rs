use std::path::PathBuf;

use arglab_core::corpus;
use arglab_core::score::{
    join_records, load_predictions, score, score_by_distance, ScoreOptions,
};
use arglab_core::Result;

use crate::manifest::Manifest;
use crate::CommonArgs;

pub fn run(common: &CommonArgs, pred: PathBuf, gold: PathBuf, conn_in_arg2: bool) -> Result<()> {
    let mut manifest = Manifest::new("score").with_config(common.config())?;
    manifest.add_input(&pred)?;
    manifest.add_input(&gold)?;

    let predictions = load_predictions(&pred)?;
    let gold_relations = corpus::load_relations(&gold)?;
    let records = join_records(&predictions, &gold_relations)?;
    let opts = ScoreOptions {
        conn_into_arg2: conn_in_arg2,
    };
    let report = score(&records, opts);
    let by_distance = score_by_distance(&records, opts);

    println!("{report}");
    println!();
    println!("{:<10} {:>8} {:>10} {:>10} {:>10}", "Distance", "Count", "F1 Arg1", "F1 Arg2", "F1 Both");
    for (label, group) in &by_distance.by_bin {
        println!(
            "{:<10} {:>8} {:>10.4} {:>10.4} {:>10.4}",
            label, group.both.total, group.arg1.f1, group.arg2.f1, group.both.f1
        );
    }

    if let Some(out) = common.out() {
        super::ensure_out_dir(out)?;
        super::write_json(&out.join("score.json"), &report)?;
        super::write_json(&out.join("distance.json"), &by_distance)?;
        std::fs::write(out.join("distance.csv"), by_distance.to_csv())
            .map_err(|e| arglab_core::Error::io(out.join("distance.csv"), e))?;
        for name in ["score.json", "distance.json", "distance.csv"] {
            manifest.add_output(name);
        }
        manifest.write(out)?;
    }
    Ok(())
}
