use cpca::eval::{lda_accuracy, projector_alignment, symmetric_kl, tagged_positives};
use cpca::offline::project;
use cpca::SubspaceModel;
use ndarray::Axis;
use serde::Serialize;

use super::{apply_model_scale, load_any};
use crate::cli::EvalArgs;
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct MetricValue {
    metric_name: &'static str,
    value: f64,
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let model = SubspaceModel::load(&args.model)?;
    let metrics = match (&args.other, &args.data) {
        (Some(other), None) => {
            let other = SubspaceModel::load(other)?;
            vec![MetricValue {
                metric_name: "alignment",
                value: projector_alignment(model.basis(), other.basis())?,
            }]
        }
        (None, Some(path)) => {
            let data = apply_model_scale(&model, load_any(path, &args.csv)?)?;
            let (xpos, tags) = tagged_positives(&data)?;
            if !(tags.iter().any(|&t| t) && tags.iter().any(|&t| !t)) {
                return Err(CliError::Domain(
                    "the tagged positives do not cover two classes".into(),
                ));
            }
            let proj = project(&model, xpos.view())?;
            let a: Vec<usize> = (0..tags.len()).filter(|&i| !tags[i]).collect();
            let b: Vec<usize> = (0..tags.len()).filter(|&i| tags[i]).collect();
            vec![
                MetricValue {
                    metric_name: "lda",
                    value: lda_accuracy(proj.view(), &tags)?,
                },
                MetricValue {
                    metric_name: "sym_kl",
                    value: symmetric_kl(
                        proj.select(Axis(1), &a).view(),
                        proj.select(Axis(1), &b).view(),
                    )?,
                },
            ]
        }
        _ => {
            return Err(CliError::Usage(
                "give either a second model or --data".into(),
            ))
        }
    };
    if args.json {
        let text = serde_json::to_string_pretty(&metrics).map_err(|e| CliError::Core(e.into()))?;
        println!("{text}");
    } else {
        for m in &metrics {
            println!("{}={:.6}", m.metric_name, m.value);
        }
    }
    Ok(())
}
