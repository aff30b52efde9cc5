use std::path::Path;

use cpca::eval::EvalReport;
use cpca::Error;

use super::{resolve, write_file};
use crate::cli::{PlotArgs, PlotKind};
use crate::error::{io_err, CliError, CliResult};
use crate::svg::{Frame, Svg, HEIGHT, WIDTH};

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const UNTAGGED: &str = "#9e9e9e";

pub fn run(args: &PlotArgs) -> CliResult<()> {
    let title = args.title.as_deref();
    let (svg, name) = match args.kind {
        PlotKind::Scatter => (scatter(&args.input, title)?, "scatter.svg"),
        PlotKind::Curve => (curve(&args.input, title)?, "curve.svg"),
        PlotKind::Barcode => (barcode(&args.input, args.threshold, title)?, "barcode.svg"),
    };
    let path = resolve(&args.out, name);
    write_file(&path, svg)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn read_csv(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let parse = |e: csv::Error| CliError::Core(Error::parse(path, e.to_string()));
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader.headers().map_err(parse)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record.map_err(parse)?.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

fn column(path: &Path, header: &[String], name: &str) -> CliResult<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Core(Error::parse(path, format!("missing column {name:?}"))))
}

fn number(path: &Path, row: usize, text: &str) -> CliResult<f64> {
    text.trim().parse().map_err(|_| {
        CliError::Core(Error::parse(
            path,
            format!("row {}: {text:?} is not a number", row + 1),
        ))
    })
}

/// Projection CSV with columns `tag`, `c1` and optionally `c2`.
fn scatter(path: &Path, title: Option<&str>) -> CliResult<String> {
    let (header, rows) = read_csv(path)?;
    let tag_col = column(path, &header, "tag")?;
    let c1 = column(path, &header, "c1")?;
    let c2 = header.iter().position(|h| h == "c2");
    let mut points = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let x = number(path, i, &row[c1])?;
        let y = match c2 {
            Some(j) => number(path, i, &row[j])?,
            None => 0.0,
        };
        let tag = match row[tag_col].trim() {
            "" => None,
            t => Some(number(path, i, t)? as usize),
        };
        points.push((x, y, tag));
    }
    let frame = Frame::fit(points.iter().map(|p| p.0), points.iter().map(|p| p.1));
    let mut svg = Svg::new(title);
    frame.axes(&mut svg, "component 1", if c2.is_some() { "component 2" } else { "" });
    for (x, y, tag) in &points {
        let color = tag.map(|t| PALETTE[t % PALETTE.len()]).unwrap_or(UNTAGGED);
        svg.circle(frame.px(*x), frame.py(*y), 3.0, color);
    }
    Ok(svg.finish())
}

/// Sweep report JSON (score against contrast) or stream CSV (mean
/// alignment against samples seen).
fn curve(path: &Path, title: Option<&str>) -> CliResult<String> {
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    let (xs, ys, xlabel, ylabel): (Vec<f64>, Vec<Option<f64>>, &str, String) = if is_csv {
        let (header, rows) = read_csv(path)?;
        let t = column(path, &header, "t")?;
        let mean = column(path, &header, "mean")?;
        let mut xs = Vec::with_capacity(rows.len());
        let mut ys = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            xs.push(number(path, i, &row[t])?);
            ys.push(match row[mean].trim() {
                "" => None,
                v => Some(number(path, i, v)?),
            });
        }
        (xs, ys, "samples seen", "mean alignment".into())
    } else {
        let report = EvalReport::load(path)?;
        (report.grid, report.scores, "contrast", report.metric_name)
    };
    let frame = Frame::fit(xs.iter().copied(), ys.iter().flatten().copied());
    let mut svg = Svg::new(title);
    frame.axes(&mut svg, xlabel, &ylabel);
    let mut run = Vec::new();
    for (x, y) in xs.iter().zip(&ys) {
        match y {
            Some(y) => run.push((frame.px(*x), frame.py(*y))),
            None if !run.is_empty() => svg.polyline(&std::mem::take(&mut run), PALETTE[0]),
            None => {}
        }
    }
    if !run.is_empty() {
        svg.polyline(&run, PALETTE[0]);
    }
    Ok(svg.finish())
}

/// One cell per grid point, dark where the score exceeds the threshold.
fn barcode(path: &Path, threshold: Option<f64>, title: Option<&str>) -> CliResult<String> {
    let report = EvalReport::load(path)?;
    let threshold = threshold.or(report.threshold).unwrap_or(0.9);
    let n = report.grid.len().max(1) as f64;
    let (left, width) = (50.0, WIDTH - 100.0);
    let (top, height) = (HEIGHT / 2.0 - 30.0, 60.0);
    let cell = width / n;
    let mut svg = Svg::new(title);
    for (i, s) in report.scores.iter().enumerate() {
        let x = left + i as f64 * cell;
        match s {
            Some(v) if *v > threshold => svg.rect("cell on", x, top, cell, height, "#222222"),
            Some(_) => svg.rect("cell off", x, top, cell, height, "#eeeeee"),
            None => svg.rect("cell na", x, top, cell, height, "#ffffff"),
        }
    }
    let first = report.grid.first().copied().unwrap_or(0.0);
    let last = report.grid.last().copied().unwrap_or(0.0);
    svg.text(left, top + height + 18.0, &crate::svg::num(first), "start", 12.0);
    svg.text(left + width, top + height + 18.0, &crate::svg::num(last), "end", 12.0);
    svg.text(
        WIDTH / 2.0,
        top + height + 36.0,
        &format!(
            "{} {} > {}",
            report.method,
            report.metric_name,
            crate::svg::num(threshold)
        ),
        "middle",
        12.0,
    );
    Ok(svg.finish())
}
