//! Estimate the information content of a correlated Gaussian pair at
//! growing sample sizes and watch the estimate settle on the closed form.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use truncvine::dataset::{self, PobsDivisor};
use truncvine::estimator::{EstimatorConfig, InfoEngine};
use truncvine::synth;

fn main() -> truncvine::Result<()> {
    let rho: f64 = 0.8;
    let corr = vec![vec![1.0, rho], vec![rho, 1.0]];
    let truth = -0.5 * (1.0 - rho * rho).log2();
    println!("true information content: {truth:.4} bits");

    for m in [250, 1000, 4000, 16000] {
        let mut rng = ChaCha20Rng::seed_from_u64(m as u64);
        let data = synth::gaussian_sample(&mut rng, &corr, m)?;
        let po = dataset::pobs(&data, PobsDivisor::M);
        let mut engine = InfoEngine::new(po, EstimatorConfig::new(2, 0))?;
        let est = engine.info(&[0, 1])?;
        println!("m = {m:>5}: {est:.4} bits (error {:+.4})", est - truth);
    }
    Ok(())
}
