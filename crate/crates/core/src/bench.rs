//! Parallel optimization batches from one shared initial solution, with
//! per-batch curve CSVs and a summary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimizer::{run, OptimizerConfig, OptimizerError, RepairProblem, TraceRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("a bench needs at least one batch")]
    NoBatches,
    #[error("batch {batch}: {source}")]
    Optimizer { batch: usize, source: OptimizerError },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

/// One optimizer configuration per batch, all started from `initial`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec<S> {
    pub batches: Vec<OptimizerConfig>,
    pub initial: S,
    /// Overrides every batch's evaluation budget when set.
    pub max_evaluations: Option<usize>,
    /// Directory for `batch_<i>.csv` and `summary.csv`.
    pub output: Option<PathBuf>,
}

impl<S> BenchSpec<S> {
    /// `base` once per seed.
    pub fn seeded(base: &OptimizerConfig, seeds: &[u64], initial: S) -> Self {
        Self {
            batches: seeds.iter().map(|&seed| OptimizerConfig { seed, ..base.clone() }).collect(),
            initial,
            max_evaluations: None,
            output: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult<S> {
    pub config: OptimizerConfig,
    pub best: S,
    pub best_score: f64,
    pub evaluations: usize,
    pub trace: Vec<TraceRow>,
    /// Hardware-dependent; informational only.
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub batch: usize,
    pub algorithm: String,
    pub seed: u64,
    pub final_best: f64,
    pub evaluations: usize,
    pub wall_secs: f64,
}

impl<S> BatchResult<S> {
    pub fn summary(&self, batch: usize) -> SummaryRow {
        SummaryRow {
            batch,
            algorithm: self.config.algorithm.name().into(),
            seed: self.config.seed,
            final_best: self.best_score,
            evaluations: self.evaluations,
            wall_secs: self.wall_secs,
        }
    }
}

/// Runs every batch on its own thread. Results are in batch order and,
/// apart from wall time, depend only on the configs.
pub fn run_bench<P>(p: &P, spec: &BenchSpec<P::State>) -> Result<Vec<BatchResult<P::State>>, BenchError>
where
    P: RepairProblem + Sync,
    P::State: Send + Sync,
{
    if spec.batches.is_empty() {
        return Err(BenchError::NoBatches);
    }
    let configs: Vec<OptimizerConfig> = spec
        .batches
        .iter()
        .map(|c| OptimizerConfig {
            max_evaluations: spec.max_evaluations.unwrap_or(c.max_evaluations),
            ..c.clone()
        })
        .collect();
    let outcomes: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| {
                scope.spawn(move || {
                    let t = Instant::now();
                    run(p, &spec.initial, cfg).map(|r| (r, t.elapsed().as_secs_f64()))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench batch panicked")).collect()
    });
    let results = outcomes
        .into_iter()
        .zip(configs)
        .enumerate()
        .map(|(batch, (out, config))| {
            let (r, wall_secs) = out.map_err(|source| BenchError::Optimizer { batch, source })?;
            Ok(BatchResult {
                config,
                best: r.best,
                best_score: r.best_score,
                evaluations: r.evaluations,
                trace: r.trace,
                wall_secs,
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    if let Some(dir) = &spec.output {
        write_bench(dir, &results)?;
    }
    Ok(results)
}

/// Trace as CSV with header `eval_index,current,best`.
pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eval_index", "current", "best"]).expect("in-memory write");
    for r in trace {
        w.write_record([r.evaluation.to_string(), r.current.to_string(), r.best.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn write(path: PathBuf, text: String) -> Result<(), BenchError> {
    std::fs::write(&path, text).map_err(|e| BenchError::Io {
        path,
        message: e.to_string(),
    })
}

/// Writes `batch_<i>.csv` per batch and `summary.csv` into `dir`.
pub fn write_bench<S>(dir: &Path, results: &[BatchResult<S>]) -> Result<(), BenchError> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    for (i, r) in results.iter().enumerate() {
        write(dir.join(format!("batch_{i}.csv")), trace_csv(&r.trace))?;
    }
    let rows: Vec<SummaryRow> = results.iter().enumerate().map(|(i, r)| r.summary(i)).collect();
    write(dir.join("summary.csv"), summary_csv(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::queens::QueensBoard;
    use crate::optimizer::{Algorithm, QueensProblem};

    fn spec(seeds: &[u64]) -> BenchSpec<QueensBoard> {
        let mut base = OptimizerConfig::new(Algorithm::RandomHill);
        base.max_evaluations = 300;
        BenchSpec::seeded(&base, seeds, QueensBoard::new(vec![0; 12]))
    }

    #[test]
    fn same_seed_gives_identical_curves() {
        let r = run_bench(&QueensProblem::new(12), &spec(&[5, 5, 5, 5])).unwrap();
        assert_eq!(r.len(), 4);
        assert!(r.iter().all(|b| b.trace == r[0].trace && b.best == r[0].best));
    }

    #[test]
    fn global_best_curves_are_monotone() {
        let r = run_bench(&QueensProblem::new(12), &spec(&[1, 2, 3, 4])).unwrap();
        for b in &r {
            assert!(b.trace.windows(2).all(|w| w[1].best >= w[0].best));
            assert_eq!(b.trace.last().unwrap().best, b.best_score);
        }
    }

    #[test]
    fn budget_override_and_empty_spec() {
        let mut s = spec(&[1]);
        s.initial = QueensBoard::new(vec![0; 40]);
        s.max_evaluations = Some(17);
        let r = run_bench(&QueensProblem::new(40), &s).unwrap();
        assert_eq!(r[0].evaluations, 17);
        assert_eq!(r[0].config.max_evaluations, 17);
        s.batches.clear();
        assert!(matches!(run_bench(&QueensProblem::new(40), &s), Err(BenchError::NoBatches)));
    }

    #[test]
    fn csv_layout() {
        let rows = [TraceRow { evaluation: 0, current: 0.5, best: 0.5 }, TraceRow { evaluation: 1, current: 0.25, best: 0.5 }];
        assert_eq!(trace_csv(&rows), "eval_index,current,best\n0,0.5,0.5\n1,0.25,0.5\n");
        let s = summary_csv(&[SummaryRow {
            batch: 0,
            algorithm: "tabu".into(),
            seed: 3,
            final_best: 1.0,
            evaluations: 9,
            wall_secs: 0.0,
        }]);
        assert_eq!(s, "batch,algorithm,seed,final_best,evaluations,wall_secs\n0,tabu,3,1.0,9,0.0\n");
    }
}
