//! Encode a hand-built cherry tree sequence as a vine matrix, decode it
//! back, and list the pair-copula factors the matrix stands for.

use truncvine::builder::CherrySequence;
use truncvine::cherry::CherryTree;
use truncvine::vine;

fn main() -> truncvine::Result<()> {
    // A path over five variables, thickened to order 3.
    let pairs = CherryTree::from_clusters(
        5,
        vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 4]],
    )?;
    let triples = CherryTree::from_clusters(
        5,
        vec![vec![0, 1, 2], vec![1, 2, 3], vec![2, 3, 4]],
    )?;
    let seq = CherrySequence::from_parts(vec![pairs, triples], vec![0.0, 0.0])?;

    let matrix = vine::encode(&seq, true)?;
    println!("matrix, truncation level {}:", matrix.trunc_level());
    for row in matrix.rows() {
        println!("  {row:?}");
    }
    assert!(vine::validate(&matrix).is_empty());

    let decoded = vine::decode(&matrix, matrix.trunc_level())?;
    println!("\nfactors:");
    for f in &decoded.factors {
        println!("  {f}");
    }

    // The other orientation holds the same structure upside down.
    let flipped = matrix.reorient();
    println!("\nsame vine, {} orientation:", flipped.orientation());
    for row in flipped.rows() {
        println!("  {row:?}");
    }
    Ok(())
}
