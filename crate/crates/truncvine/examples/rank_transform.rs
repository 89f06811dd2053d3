//! Rank-transform a small table into pseudo-observations and show how the
//! two divisor conventions differ.

use truncvine::dataset::{self, PobsDivisor, RawDataset};

fn main() -> truncvine::Result<()> {
    let data = RawDataset::new(
        vec!["temp".into(), "yield".into()],
        vec![
            vec![21.5, 19.0, 25.2, 19.0, 30.1],
            vec![1.2, 0.7, 2.9, 1.4, 2.9],
        ],
    )?;

    println!("raw rows:");
    for r in 0..data.n_rows() {
        println!("  {:>6}  {:>6}", data.columns()[0][r], data.columns()[1][r]);
    }

    for divisor in [PobsDivisor::M, PobsDivisor::MPlusOne] {
        let po = dataset::pobs(&data, divisor);
        println!("\npseudo-observations, divisor {divisor:?}:");
        for r in 0..po.n_rows() {
            println!("  {:>6.4}  {:>6.4}", po.columns()[0][r], po.columns()[1][r]);
        }
    }

    // Ties break by row order, so the grades in a column are always the
    // exact lattice 1/m .. m/m with no repeats.
    let po = dataset::pobs(&data, PobsDivisor::M);
    assert!(po.columns()[0][1] < po.columns()[0][3], "earlier 19.0 ranks first");
    assert!(po.columns()[1][2] < po.columns()[1][4], "earlier 2.9 ranks first");
    Ok(())
}
