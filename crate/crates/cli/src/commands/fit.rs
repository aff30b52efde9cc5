use std::fmt::Write as _;

use cpca::eval::{lda_accuracy, lda_holdout_accuracy, symmetric_kl, tagged_positives};
use cpca::offline::{fit_dataset, project};
use cpca::{ContrastConfig, Method};
use ndarray::{ArrayView1, Axis};
use serde_json::Value;

use super::{fmt_values, load_data, resolve, write_file, SCALE_KEY};
use crate::cli::FitArgs;
use crate::error::{CliError, CliResult};

pub fn run(args: &FitArgs) -> CliResult<()> {
    let loaded = load_data(&args.data)?;
    let data = &loaded.data;
    let method: Method = args.method.into();
    let mut config = ContrastConfig::new(method, args.contrast, args.k).centered(args.center);
    if let Some(r) = args.ridge {
        if method != Method::CpcaStar {
            return Err(CliError::Usage("--ridge applies to cpca-star only".into()));
        }
        config = config.with_ridge(r);
    }
    let mut model = fit_dataset(data, &config)?;
    if let Some(scale) = &loaded.scale {
        model.meta.insert(SCALE_KEY.into(), Value::from(scale.clone()));
    }
    if let Some(name) = args.data.data.file_name().and_then(|n| n.to_str()) {
        model.meta.insert("data".into(), Value::from(name));
    }

    println!("d={} n_pos={} n_neg={}", data.dim(), data.n_pos(), data.n_neg());
    println!("method={} contrast={} k={}", method, args.contrast, args.k);
    println!("eigenvalues: {}", fmt_values(&model.values));

    if data.has_tags() {
        match tagged_positives(data) {
            Ok((xpos, tags)) if tags.iter().any(|&t| t) && tags.iter().any(|&t| !t) => {
                let proj = project(&model, xpos.view())?;
                println!("lda_accuracy={:.6}", lda_accuracy(proj.view(), &tags)?);
                if let Some(frac) = args.holdout {
                    let acc = lda_holdout_accuracy(proj.view(), &tags, frac, args.split_seed)?;
                    println!("lda_holdout_accuracy={acc:.6} (fraction {frac})");
                }
                let a: Vec<usize> = (0..tags.len()).filter(|&i| !tags[i]).collect();
                let b: Vec<usize> = (0..tags.len()).filter(|&i| tags[i]).collect();
                match symmetric_kl(proj.select(Axis(1), &a).view(), proj.select(Axis(1), &b).view()) {
                    Ok(kl) => println!("sym_kl={kl:.6}"),
                    Err(e) => println!("sym_kl=NA ({e})"),
                }
            }
            _ => println!("tags present but not two classes among positives; metrics skipped"),
        }
    }

    let path = resolve(&args.out, "model.json");
    write_file(&path, model.to_json()? + "\n")?;
    println!("wrote model to {}", path.display());

    if let Some(proj_path) = &args.projections {
        let mut text = String::from("label,tag");
        for j in 0..args.k {
            let _ = write!(text, ",c{}", j + 1);
        }
        text.push('\n');
        for (s, tag) in data.samples().iter().zip(data.tags()) {
            let x = ArrayView1::from(&s.x[..]);
            let coords = model.basis().t().dot(&x);
            let _ = write!(
                text,
                "{},{}",
                s.label.indicator(),
                tag.map(|t| t.to_string()).unwrap_or_default()
            );
            for c in coords.iter() {
                let _ = write!(text, ",{c}");
            }
            text.push('\n');
        }
        write_file(proj_path, text)?;
        println!("wrote projections to {}", proj_path.display());
    }
    Ok(())
}
