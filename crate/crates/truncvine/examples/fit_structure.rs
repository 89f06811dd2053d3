//! Grow a cherry tree sequence on synthetic data with two dependence
//! blocks and print what the greedy search saw at every level.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use truncvine::builder;
use truncvine::dataset::{self, PobsDivisor};
use truncvine::estimator::{EstimatorConfig, InfoEngine};
use truncvine::synth;

fn main() -> truncvine::Result<()> {
    // Variables 0..3 move together, 4..6 move together, the blocks are
    // independent of each other. A good structure keeps them apart.
    let corr = synth::block_correlation(
        7,
        &[(vec![0, 1, 2, 3], 0.75), (vec![4, 5, 6], 0.75)],
    );
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    let data = synth::gaussian_sample(&mut rng, &corr, 1500)?;
    let po = dataset::pobs(&data, PobsDivisor::M);

    let mut engine = InfoEngine::new(po, EstimatorConfig::new(4, 0))?;
    let (seq, audits) = builder::build_cherry_sequence_audited(&mut engine)?;

    for (tree, weight) in seq.trees().iter().zip(seq.weights()) {
        println!("order {} tree, weight {:.4} bits", tree.order(), weight);
        for k in tree.clusters() {
            println!("  cluster {:?}", k);
        }
        for (s, nu) in tree.separators() {
            println!("  separator {:?} x{nu}", s);
        }
    }

    println!("\ngreedy decisions:");
    for audit in &audits {
        for step in &audit.steps {
            println!(
                "  level {}: took {:?} out of {} candidates",
                audit.level,
                step.chosen,
                step.candidates.len()
            );
        }
    }
    Ok(())
}
