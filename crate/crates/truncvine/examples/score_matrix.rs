//! Score a vine matrix against data: fit a structure, encode it, then
//! price the encoded matrix as if it came from somewhere else.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use truncvine::builder;
use truncvine::dataset::{self, PobsDivisor};
use truncvine::estimator::{EstimatorConfig, InfoEngine};
use truncvine::scoring;
use truncvine::synth;
use truncvine::vine;

fn main() -> truncvine::Result<()> {
    let corr = synth::block_correlation(5, &[(vec![0, 1, 2], 0.7), (vec![3, 4], 0.7)]);
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let data = synth::gaussian_sample(&mut rng, &corr, 1000)?;
    let po = dataset::pobs(&data, PobsDivisor::M);

    let mut engine = InfoEngine::new(po, EstimatorConfig::new(3, 0))?;
    let seq = builder::build_cherry_sequence(&mut engine)?;
    let fitted = scoring::weight_of_tree(&mut engine, seq.top())?;
    let matrix = vine::encode(&seq, true)?;

    // Decoding the matrix recovers the same tree, and the shared cache
    // hands back the same information values, so the scores agree exactly.
    let rescored = scoring::score_external_matrix(&mut engine, &matrix, 3)?;
    assert_eq!(fitted.weight, rescored.weight);

    println!("weight at level 3: {:.4} bits\n", rescored.weight);
    println!("per cluster:");
    for (k, info) in &rescored.per_cluster {
        println!("  {k:?}: {info:.4}");
    }
    println!("per separator, weighted by multiplicity minus one:");
    for (s, (nu, info)) in &rescored.per_separator {
        println!("  {s:?} x{nu}: {info:.4}");
    }
    Ok(())
}
