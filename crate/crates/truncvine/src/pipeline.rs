//! End-to-end fitting runs: load a dataset once, then for every truncation
//! level in the requested range fit a structure, encode it, score it, and
//! write the artifacts (matrix CSV with meta sidecar, structure JSON, and a
//! levels-by-measures report). A failure at one level is recorded in the
//! report and the sweep moves on; only setup problems abort the run.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::builder;
use crate::dataset::{self, PobsDivisor, PseudoObservations};
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, InfoEngine};
use crate::grid::DEFAULT_GRID_BUDGET;
use crate::scoring::{self, TruncatedVineScore};
use crate::vine::{self, Orientation, VineMatrix};

/// Everything a fitting run needs. `t_min`/`t_max` of `None` resolve to 3
/// and min(n, 20) once the data width n is known.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub drop_columns: Vec<String>,
    pub t_min: Option<usize>,
    pub t_max: Option<usize>,
    pub seed: u64,
    pub k_neighbors: usize,
    pub pobs_divisor: PobsDivisor,
    pub orientation: Orientation,
    pub out_dir: PathBuf,
    pub grid_budget: u64,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            drop_columns: Vec::new(),
            t_min: None,
            t_max: None,
            seed: 0,
            k_neighbors: 5,
            pobs_divisor: PobsDivisor::M,
            orientation: Orientation::Paper,
            out_dir: out_dir.into(),
            grid_budget: DEFAULT_GRID_BUDGET,
        }
    }
}

/// Outcome of one truncation level. File names are relative to the output
/// directory so reports compare equal across runs in different places.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub trunc_level: usize,
    pub weight_bits: Option<f64>,
    pub wall_time_secs: f64,
    pub matrix_file: Option<String>,
    pub meta_file: Option<String>,
    pub structure_file: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub t_min: usize,
    pub t_max: usize,
    /// Digest of the semantic knobs (data shape, column names, seed,
    /// estimator settings), so reports can be matched to their inputs.
    pub config_hash: String,
    pub levels: Vec<LevelRecord>,
}

fn config_hash(
    config: &RunConfig,
    names: &[String],
    m: usize,
    t_min: usize,
    t_max: usize,
) -> String {
    let desc = serde_json::json!({
        "columns": names,
        "rows": m,
        "t_min": t_min,
        "t_max": t_max,
        "seed": config.seed,
        "k_neighbors": config.k_neighbors,
        "pobs_divisor": config.pobs_divisor,
        "orientation": config.orientation,
        "grid_budget": config.grid_budget,
    });
    let digest = Sha256::digest(desc.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Fit one level: fresh estimator (subsampling depends on t), greedy build,
/// score of the top tree, encoded matrix in the requested orientation.
fn fit_level(
    po: &PseudoObservations,
    config: &RunConfig,
    t: usize,
) -> Result<(VineMatrix, TruncatedVineScore)> {
    let mut est = EstimatorConfig::new(t, config.seed);
    est.k_neighbors = config.k_neighbors;
    est.grid_budget = config.grid_budget;
    let mut engine = InfoEngine::new(po.clone(), est)?;
    let seq = builder::build_cherry_sequence(&mut engine)?;
    let score = scoring::weight_of_tree(&mut engine, seq.top())?;
    let matrix = vine::encode(&seq, true)?;
    let oriented = match config.orientation {
        Orientation::Paper => matrix,
        Orientation::RPackage => matrix.reorient(),
    };
    Ok((oriented, score))
}

/// Run the full sweep. Returns the report that was also written to
/// `report.json` and `report.csv` in the output directory.
pub fn run_fit(config: &RunConfig) -> Result<RunReport> {
    let data = dataset::load_csv(&config.input, &config.drop_columns)?;
    let names = data.column_names().to_vec();
    let po = dataset::pobs(&data, config.pobs_divisor);
    let n = po.n_cols();
    let m = po.n_rows();

    let t_min = config.t_min.unwrap_or(3);
    let t_max = config.t_max.unwrap_or(n.min(20));
    if t_min < 2 || t_min > t_max || t_max > n {
        return Err(Error::Usage(format!(
            "level range {t_min}..={t_max} invalid for {n} variables (need 2 <= t_min <= t_max <= n)"
        )));
    }

    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;

    let mut levels = Vec::new();
    for t in t_min..=t_max {
        let started = Instant::now();
        let fitted = fit_level(&po, config, t);
        let wall_time_secs = started.elapsed().as_secs_f64();
        match fitted {
            Ok((matrix, score)) => {
                let matrix_file = format!("matrix_t{t}.csv");
                let meta_file = format!("matrix_t{t}.meta.json");
                let structure_file = format!("structure_t{t}.json");
                vine::write_matrix_csv(&matrix, &config.out_dir.join(&matrix_file))?;
                vine::write_matrix_meta(&matrix, &config.out_dir.join(&meta_file))?;
                let structure = vine::structure_json(&matrix)?;
                let structure_path = config.out_dir.join(&structure_file);
                fs::write(&structure_path, structure)
                    .map_err(|e| Error::io(&structure_path, e))?;
                levels.push(LevelRecord {
                    trunc_level: t,
                    weight_bits: Some(score.weight),
                    wall_time_secs,
                    matrix_file: Some(matrix_file),
                    meta_file: Some(meta_file),
                    structure_file: Some(structure_file),
                    error: None,
                });
            }
            Err(e) => levels.push(LevelRecord {
                trunc_level: t,
                weight_bits: None,
                wall_time_secs,
                matrix_file: None,
                meta_file: None,
                structure_file: None,
                error: Some(e.to_string()),
            }),
        }
    }

    let report = RunReport {
        n,
        m,
        seed: config.seed,
        t_min,
        t_max,
        config_hash: config_hash(config, &names, m, t_min, t_max),
        levels,
    };
    write_report(&report, &config.out_dir)?;
    Ok(report)
}

fn write_report(report: &RunReport, out_dir: &Path) -> Result<()> {
    let json_path = out_dir.join("report.json");
    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::InvalidInput(format!("report serialization failed: {e}")))?;
    json.push('\n');
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;

    let csv_path = out_dir.join("report.csv");
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| Error::Csv(e.to_string()))?;
    w.write_record([
        "trunc_level",
        "weight_bits",
        "wall_time_secs",
        "matrix_file",
        "structure_file",
        "error",
    ])
    .map_err(|e| Error::Csv(e.to_string()))?;
    for rec in &report.levels {
        w.write_record([
            rec.trunc_level.to_string(),
            rec.weight_bits.map(|v| v.to_string()).unwrap_or_default(),
            format!("{:.6}", rec.wall_time_secs),
            rec.matrix_file.clone().unwrap_or_default(),
            rec.structure_file.clone().unwrap_or_default(),
            rec.error.clone().unwrap_or_default(),
        ])
        .map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    /// Write a synthetic gaussian table as a plain comma CSV.
    fn write_input(dir: &Path, n: usize, m: usize, seed: u64) -> PathBuf {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let corr = synth::block_correlation(n, &[(vec![0, 1, 2], 0.6)]);
        let data = synth::gaussian_sample(&mut rng, &corr, m).unwrap();
        let path = dir.join("input.csv");
        let mut text = data.column_names().join(",");
        text.push('\n');
        for row in 0..m {
            let cells: Vec<String> = data.columns().iter().map(|c| c[row].to_string()).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn fit_writes_matrices_structures_and_reports() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_input(dir.path(), 4, 120, 1);
        let out = dir.path().join("out");
        let mut config = RunConfig::new(&input, &out);
        config.t_min = Some(2);
        config.t_max = Some(3);
        let report = run_fit(&config).expect("run succeeds");

        assert_eq!(report.n, 4);
        assert_eq!(report.m, 120);
        assert_eq!(report.levels.len(), 2);
        for rec in &report.levels {
            assert!(rec.error.is_none(), "level {} failed: {:?}", rec.trunc_level, rec.error);
            let w = rec.weight_bits.expect("weight present");
            assert!(w.is_finite());
            let matrix = vine::read_matrix_csv(
                &out.join(rec.matrix_file.as_ref().unwrap()),
                Some(&vine::read_matrix_meta(&out.join(rec.meta_file.as_ref().unwrap())).unwrap()),
            )
            .expect("emitted matrix loads");
            assert!(
                vine::validate(&matrix).is_empty(),
                "emitted matrix must be clean"
            );
            let structure: serde_json::Value = serde_json::from_str(
                &fs::read_to_string(out.join(rec.structure_file.as_ref().unwrap())).unwrap(),
            )
            .expect("structure json parses");
            assert_eq!(structure["trunc_level"], rec.trunc_level);
        }
        assert!(out.join("report.json").exists());
        assert!(out.join("report.csv").exists());
    }

    #[test]
    fn level_defaults_follow_the_data_width() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_input(dir.path(), 4, 100, 2);
        let config = RunConfig::new(&input, dir.path().join("out"));
        let report = run_fit(&config).expect("run succeeds");
        let levels: Vec<usize> = report.levels.iter().map(|r| r.trunc_level).collect();
        assert_eq!(levels, vec![3, 4], "defaults are 3..=min(n,20)");
    }

    #[test]
    fn grid_budget_failure_stays_confined_to_its_level() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_input(dir.path(), 4, 120, 3);
        let out = dir.path().join("out");
        let mut config = RunConfig::new(&input, &out);
        config.t_min = Some(2);
        config.t_max = Some(4);
        // Sides for m=120: 11^2, 5^3, 4^4. The budget passes 121 and 125
        // points but refuses 256, so only t=4 can fail.
        config.grid_budget = 200;
        let report = run_fit(&config).expect("run itself succeeds");
        assert_eq!(report.levels.len(), 3);
        assert!(report.levels[0].error.is_none(), "t=2 fits");
        assert!(report.levels[1].error.is_none(), "t=3 fits");
        let failed = &report.levels[2];
        assert!(failed.weight_bits.is_none());
        assert!(
            failed.error.as_ref().unwrap().contains("budget"),
            "got: {:?}",
            failed.error
        );
        assert!(!out.join("matrix_t4.csv").exists());
    }

    #[test]
    fn bad_level_range_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_input(dir.path(), 4, 80, 4);
        let mut config = RunConfig::new(&input, dir.path().join("out"));
        config.t_min = Some(3);
        config.t_max = Some(9); // only 4 variables
        let err = run_fit(&config).expect_err("must refuse");
        assert!(matches!(err, Error::Usage(_)), "got {err:?}");
    }

    #[test]
    fn missing_input_aborts_before_any_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let config = RunConfig::new(dir.path().join("nope.csv"), &out);
        assert!(run_fit(&config).is_err());
        assert!(!out.exists(), "no partial output on setup failure");
    }

    #[test]
    fn reruns_with_one_seed_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let input = write_input(dir.path(), 4, 120, 5);
        let mut outputs = Vec::new();
        for name in ["a", "b"] {
            let out = dir.path().join(name);
            let mut config = RunConfig::new(&input, &out);
            config.t_min = Some(3);
            config.t_max = Some(3);
            config.seed = 42;
            run_fit(&config).expect("run succeeds");
            outputs.push(out);
        }
        for file in ["matrix_t3.csv", "matrix_t3.meta.json", "structure_t3.json"] {
            let a = fs::read(outputs[0].join(file)).unwrap();
            let b = fs::read(outputs[1].join(file)).unwrap();
            assert_eq!(a, b, "{file} must be byte-identical across reruns");
        }
        // Reports match except for wall time.
        let mut docs: Vec<serde_json::Value> = outputs
            .iter()
            .map(|o| {
                serde_json::from_str(&fs::read_to_string(o.join("report.json")).unwrap()).unwrap()
            })
            .collect();
        for doc in &mut docs {
            for level in doc["levels"].as_array_mut().unwrap() {
                level["wall_time_secs"] = serde_json::json!(0);
            }
        }
        assert_eq!(docs[0], docs[1], "reports differ beyond wall time");
    }
}
