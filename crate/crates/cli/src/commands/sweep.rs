use std::path::PathBuf;

use cpca::eval::{good_range_width, sweep, Metric, SweepOptions};
use cpca::Method;

use super::{load_data, resolve, write_file};
use crate::cli::SweepArgs;
use crate::error::CliResult;

pub fn run(args: &SweepArgs) -> CliResult<()> {
    let loaded = load_data(&args.data)?;
    let method: Method = args.method.into();
    let metric: Metric = args.metric.into();
    let grid = args.grid.values();
    let mut report = sweep(
        &loaded.data,
        method,
        &grid,
        args.k,
        metric,
        SweepOptions { center: args.center },
    )?;

    let (value, relative) = match (args.threshold, metric) {
        (Some(t), _) => (t, args.relative),
        (None, Metric::Lda) => (0.9, args.relative),
        (None, Metric::SymKl) => (0.5, true),
    };
    let threshold = if relative {
        value * report.max_score().unwrap_or(f64::NAN)
    } else {
        value
    };
    let width = good_range_width(&mut report, threshold);

    let stem = resolve(&args.out, &format!("sweep-{}-{}", method, metric.name()));
    let with_ext = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    let json_path = with_ext(".json");
    let csv_path = with_ext(".csv");
    write_file(&json_path, report.to_json()? + "\n")?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    write_file(&csv_path, csv)?;

    let missing = report.scores.iter().filter(|s| s.is_none()).count();
    println!(
        "method={} metric={} k={} points={} missing={}",
        method,
        metric.name(),
        args.k,
        grid.len(),
        missing
    );
    if let Some(best) = report.max_score() {
        println!("max_score={best:.6}");
    }
    println!("good_range_width={width:.6} (threshold {threshold:.6})");
    println!("wrote {} and {}", json_path.display(), csv_path.display());
    Ok(())
}
