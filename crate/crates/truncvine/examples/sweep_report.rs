//! Run the full pipeline over a range of truncation levels and walk the
//! report it leaves behind. Mirrors what the `fit` subcommand does.

use std::fs;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use truncvine::pipeline::{self, RunConfig};
use truncvine::synth;

fn main() -> truncvine::Result<()> {
    let dir = std::env::temp_dir().join("truncvine_sweep_example");
    fs::create_dir_all(&dir).expect("temp dir");

    // Six variables in two dependence blocks, written the way the CLI
    // would read them.
    let corr = synth::block_correlation(6, &[(vec![0, 1, 2], 0.8), (vec![3, 4, 5], 0.6)]);
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let data = synth::gaussian_sample(&mut rng, &corr, 800)?;
    let input = dir.join("data.csv");
    let mut text = data.column_names().join(",");
    text.push('\n');
    for r in 0..data.n_rows() {
        let row: Vec<String> = data.columns().iter().map(|c| c[r].to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&input, text).expect("write input");

    let mut config = RunConfig::new(&input, dir.join("out"));
    config.t_min = Some(2);
    config.t_max = Some(4);
    let report = pipeline::run_fit(&config)?;

    println!("{} variables, {} rows, config {}", report.n, report.m, &report.config_hash[..12]);
    for rec in &report.levels {
        match rec.weight_bits {
            Some(w) => println!(
                "  t={}: {:.4} bits in {:.2}s -> {}",
                rec.trunc_level,
                w,
                rec.wall_time_secs,
                rec.matrix_file.as_deref().unwrap_or("")
            ),
            None => println!(
                "  t={}: failed: {}",
                rec.trunc_level,
                rec.error.as_deref().unwrap_or("")
            ),
        }
    }
    println!("full report: {}", dir.join("out").join("report.json").display());
    Ok(())
}
