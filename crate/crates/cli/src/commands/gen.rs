use cpca::datasets::{gen_artificial_with, gen_noisy_digits, gen_synthetic_digits, ArtificialParams};

use super::{resolve, write_file};
use crate::cli::{GenArgs, GenKind};
use crate::error::{CliError, CliResult};

pub fn run(args: &GenArgs) -> CliResult<()> {
    let (data, name) = match args.kind {
        GenKind::Artificial => {
            let params = ArtificialParams {
                n_pos: args.n_pos,
                n_neg: args.n_neg,
                ..ArtificialParams::default()
            };
            (gen_artificial_with(&params, args.seed)?, "artificial")
        }
        GenKind::SyntheticDigits => (gen_synthetic_digits(args.count, args.seed), "synthetic-digits"),
        GenKind::NoisyDigits => {
            let need = |p: &Option<std::path::PathBuf>, flag: &str| {
                p.clone()
                    .ok_or_else(|| CliError::Usage(format!("noisy-digits needs --{flag}")))
            };
            let data = gen_noisy_digits(
                need(&args.images, "images")?,
                need(&args.labels, "labels")?,
                need(&args.backgrounds, "backgrounds")?,
                args.count,
                args.seed,
            )?;
            (data, "noisy-digits")
        }
    };
    let path = resolve(&args.out, &format!("{name}-seed{}.jsonl", args.seed));
    let mut bytes = Vec::new();
    data.write_jsonl(&mut bytes)?;
    write_file(&path, bytes)?;
    println!(
        "wrote {} samples ({} positive, {} negative), d={} to {}",
        data.len(),
        data.n_pos(),
        data.n_neg(),
        data.dim(),
        path.display()
    );
    Ok(())
}
