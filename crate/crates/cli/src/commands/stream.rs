use std::fmt::Write as _;

use cpca::offline::fit_dataset;
use cpca::online::{run_stream, LearningRate, TrajectoryPoint};
use cpca::{ContrastConfig, LabeledDataset, Method, OnlineState, SubspaceModel};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fmt_values, load_data, model_scale, resolve, write_file};
use crate::cli::StreamArgs;
use crate::error::{CliError, CliResult};

struct SeedRun {
    seed: u64,
    trajectory: Vec<TrajectoryPoint>,
    state: OnlineState,
}

fn check_oracle(oracle: &SubspaceModel, args: &StreamArgs, d: usize) -> CliResult<()> {
    if oracle.d != d || oracle.k != args.k {
        return Err(CliError::Domain(format!(
            "oracle has d={}, k={}; stream has d={d}, k={}",
            oracle.d, oracle.k, args.k
        )));
    }
    if oracle.method != Method::CpcaStar || (oracle.contrast - args.beta).abs() > 1e-12 {
        return Err(CliError::Domain(format!(
            "oracle is {} with contrast {}; stream needs cpca-star with beta {}",
            oracle.method, oracle.contrast, args.beta
        )));
    }
    let scaled = model_scale(oracle)?.is_some();
    if scaled != args.data.normalize {
        return Err(CliError::Domain(format!(
            "oracle was fit {} --normalize but the stream runs {} it",
            if scaled { "with" } else { "without" },
            if args.data.normalize { "with" } else { "without" }
        )));
    }
    Ok(())
}

fn run_seed(
    data: &LabeledDataset,
    args: &StreamArgs,
    oracle: &SubspaceModel,
    seed: u64,
) -> cpca::Result<SeedRun> {
    let mut state = OnlineState::init(data.dim(), args.k, args.beta, args.eta, args.tau, seed)?;
    if let Some(t0) = args.decay_t0 {
        state = state.with_schedule(LearningRate::InverseTime { t0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // separate stream from the one that drew the initial weights
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trajectory = Vec::new();
    for _ in 0..args.epochs {
        if !args.no_shuffle {
            order.shuffle(&mut rng);
        }
        let samples = order.iter().map(|&i| &data.samples()[i]);
        trajectory.extend(run_stream(&mut state, samples, args.record_every, Some(oracle))?);
    }
    Ok(SeedRun {
        seed,
        trajectory,
        state,
    })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run(args: &StreamArgs) -> CliResult<()> {
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    if args.record_every == 0 {
        return Err(CliError::Usage("--record-every must be at least 1".into()));
    }
    let loaded = load_data(&args.data)?;
    let data = &loaded.data;
    // validate hyper-parameters before any work
    OnlineState::init(data.dim(), args.k, args.beta, args.eta, args.tau, 0)?;

    let oracle = match &args.oracle {
        Some(path) => {
            let o = SubspaceModel::load(path)?;
            check_oracle(&o, args, data.dim())?;
            o
        }
        None => fit_dataset(data, &ContrastConfig::new(Method::CpcaStar, args.beta, args.k))?,
    };
    println!(
        "d={} n={} beta={} k={} eta={} tau={} epochs={} seeds={}",
        data.dim(),
        data.len(),
        args.beta,
        args.k,
        args.eta,
        args.tau,
        args.epochs,
        args.seeds
    );
    println!("oracle eigenvalues: {}", fmt_values(&oracle.values));

    let seeds: Vec<u64> = (0..args.seeds).map(|i| args.seed_base + i).collect();
    let runs = seeds
        .par_iter()
        .map(|&s| run_seed(data, args, &oracle, s))
        .collect::<cpca::Result<Vec<_>>>()?;

    let mut text = String::from("t");
    for r in &runs {
        let _ = write!(text, ",seed{}", r.seed);
    }
    text.push_str(",mean,std\n");
    let rows = runs[0].trajectory.len();
    let mut last = None;
    for i in 0..rows {
        let values: Vec<f64> = runs
            .iter()
            .map(|r| r.trajectory[i].alignment.unwrap_or(f64::NAN))
            .collect();
        let (mean, std) = mean_std(&values);
        let _ = write!(text, "{}", runs[0].trajectory[i].t);
        for v in &values {
            let _ = write!(text, ",{v}");
        }
        let _ = writeln!(text, ",{mean},{std}");
        last = Some((values, mean, std));
    }
    let path = resolve(&args.out, "stream.csv");
    write_file(&path, text)?;

    if let Some(dir) = &args.state_dir {
        for r in &runs {
            write_file(&dir.join(format!("state-seed{}.json", r.seed)), r.state.to_json()? + "\n")?;
        }
    }

    match last {
        None => println!("empty trajectory (no steps were recorded)"),
        Some((values, mean, std)) => {
            for (r, v) in runs.iter().zip(&values) {
                println!("seed {}: final alignment {v:.6} (t={}, p={:.4})", r.seed, r.state.t, r.state.p);
            }
            println!("final mean alignment {mean:.6} (std {std:.6}) over {} seeds", runs.len());
        }
    }
    println!("wrote trajectories to {}", path.display());
    Ok(())
}
