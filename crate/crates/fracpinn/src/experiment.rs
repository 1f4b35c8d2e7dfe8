//! Experiment configuration, sweep execution and table assembly.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use fracpinn_core::trainer::{mean_abs_error, table_grid, table_xs, TABLE_TIMES};
use fracpinn_core::{
    evaluate_mae, Error as CoreError, IntegroForcing, LossRecord, LossWeights, Network,
    NetworkField, Point, Problem, ProblemId, TrainConfig, Trainer,
};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::format::key;

/// How sweep cells map onto table columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// One column per fractional order, `alpha=<a>`.
    AlphaSweep,
    /// One column per L1 grid size, `N=<n>`.
    GridsizeSweep,
    /// One column per table time, `t=<t>`; PDE only, single cell.
    XtGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Forcing {
    #[default]
    Consistent,
    AsPrinted,
}

impl From<Forcing> for IntegroForcing {
    fn from(f: Forcing) -> Self {
        match f {
            Forcing::Consistent => IntegroForcing::Consistent,
            Forcing::AsPrinted => IntegroForcing::AsPrinted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub residual: f64,
    pub initial: f64,
    pub boundary: f64,
}

impl From<LossWeights> for Weights {
    fn from(w: LossWeights) -> Self {
        Self {
            residual: w.residual,
            initial: w.initial,
            boundary: w.boundary,
        }
    }
}

impl From<Weights> for LossWeights {
    fn from(w: Weights) -> Self {
        Self {
            residual: w.residual,
            initial: w.initial,
            boundary: w.boundary,
        }
    }
}

/// A fully resolved experiment. This is what a run manifest stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(with = "problem_name")]
    pub problem: ProblemId,
    pub layout: Layout,
    pub alphas: Vec<f64>,
    pub l1_points: Vec<usize>,
    pub epochs: usize,
    pub quad_order: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub loss_weights: Weights,
    pub forcing: Forcing,
    pub out_dir: PathBuf,
}

mod problem_name {
    use fracpinn_core::ProblemId;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(id: &ProblemId, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(id.cli_name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ProblemId, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Command-line overrides on top of the per-problem defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alphas: Option<Vec<f64>>,
    pub l1_points: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub quad_order: Option<usize>,
    pub batch: Option<usize>,
    pub learning_rate: Option<f64>,
    pub seed: Option<u64>,
    pub hidden: Option<Vec<usize>>,
    pub forcing: Option<Forcing>,
    pub layout: Option<Layout>,
    pub out_dir: Option<PathBuf>,
}

pub fn default_alphas(id: ProblemId) -> Vec<f64> {
    match id {
        ProblemId::FracOde => vec![0.1, 0.3, 0.5, 0.7, 0.9],
        _ => vec![0.5],
    }
}

pub fn default_layout(id: ProblemId) -> Layout {
    match id {
        ProblemId::FracOde => Layout::AlphaSweep,
        ProblemId::FracIntegro => Layout::GridsizeSweep,
        ProblemId::FracPde => Layout::XtGrid,
    }
}

fn config_err(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

fn has_duplicates<T: PartialEq>(v: &[T]) -> bool {
    v.iter()
        .enumerate()
        .any(|(i, a)| v[..i].iter().any(|b| b == a))
}

/// One training run inside a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub alpha: f64,
    pub l1_points: usize,
}

impl ExperimentConfig {
    pub fn resolve(problem: ProblemId, o: Overrides) -> Result<Self> {
        let d = TrainConfig::defaults_for(problem);
        let alphas = o.alphas.unwrap_or_else(|| default_alphas(problem));
        let l1_points = o.l1_points.unwrap_or_else(|| vec![d.l1_points]);
        let layout = o.layout.unwrap_or(if alphas.len() > 1 {
            Layout::AlphaSweep
        } else if l1_points.len() > 1 {
            Layout::GridsizeSweep
        } else {
            default_layout(problem)
        });
        let cfg = Self {
            problem,
            layout,
            alphas,
            l1_points,
            epochs: o.epochs.unwrap_or(d.epochs),
            quad_order: o.quad_order.unwrap_or(d.quad_order),
            batch: o.batch.unwrap_or(d.batch),
            learning_rate: o.learning_rate.unwrap_or(d.learning_rate),
            seed: o.seed.unwrap_or(d.seed),
            hidden: o.hidden.unwrap_or(d.hidden),
            loss_weights: d.loss_weights.into(),
            forcing: o.forcing.unwrap_or_default(),
            out_dir: o.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.l1_points.is_empty() {
            return Err(config_err("alpha and l1-points lists must not be empty"));
        }
        if has_duplicates(&self.alphas) || has_duplicates(&self.l1_points) {
            return Err(config_err(
                "alpha and l1-points lists must not repeat values",
            ));
        }
        match self.layout {
            Layout::AlphaSweep if self.l1_points.len() != 1 => {
                return Err(config_err("alpha-sweep needs a single l1-points value"))
            }
            Layout::GridsizeSweep if self.alphas.len() != 1 => {
                return Err(config_err("gridsize-sweep needs a single alpha"))
            }
            Layout::XtGrid if self.problem != ProblemId::FracPde => {
                return Err(config_err("xt-grid is only defined for ex3"))
            }
            Layout::XtGrid if self.alphas.len() != 1 || self.l1_points.len() != 1 => {
                return Err(config_err(
                    "xt-grid needs a single alpha and l1-points value",
                ))
            }
            _ => {}
        }
        if self.problem == ProblemId::FracIntegro && self.alphas.iter().any(|&a| a != 0.5) {
            return Err(config_err("ex2 has a fixed order of 0.5"));
        }
        for &a in &self.alphas {
            self.problem_for(a)?;
        }
        for &n in &self.l1_points {
            self.train_config(n)
                .validate()
                .map_err(|e| config_err(e.to_string()))?;
        }
        Ok(())
    }

    pub fn problem_for(&self, alpha: f64) -> Result<Problem> {
        let p = match self.problem {
            ProblemId::FracIntegro => Ok(Problem::example2_with(self.forcing.into())),
            id => Problem::new(id, alpha),
        };
        p.map_err(|e| config_err(format!("alpha={alpha}: {e}")))
    }

    pub fn train_config(&self, l1_points: usize) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            l1_points,
            quad_order: self.quad_order,
            batch: self.batch,
            learning_rate: self.learning_rate,
            seed: self.seed,
            loss_weights: self.loss_weights.into(),
            hidden: self.hidden.clone(),
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        match self.layout {
            Layout::AlphaSweep | Layout::XtGrid => self
                .alphas
                .iter()
                .map(|&alpha| Cell {
                    label: format!("alpha={}", key(alpha)),
                    alpha,
                    l1_points: self.l1_points[0],
                })
                .collect(),
            Layout::GridsizeSweep => self
                .l1_points
                .iter()
                .map(|&n| Cell {
                    label: format!("N={n}"),
                    alpha: self.alphas[0],
                    l1_points: n,
                })
                .collect(),
        }
    }

    /// Value-column headers of the MAE table.
    pub fn columns(&self) -> Vec<String> {
        match self.layout {
            Layout::XtGrid => TABLE_TIMES
                .iter()
                .map(|&t| format!("t={}", key(t)))
                .collect(),
            _ => self.cells().into_iter().map(|c| c.label).collect(),
        }
    }
}

/// A trained cell and its errors on the table grid.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub problem: Problem,
    pub network: Network,
    pub history: Vec<LossRecord>,
    pub errors: Vec<(Point, f64)>,
    /// Wall time of training and evaluation.
    pub elapsed: Duration,
}

impl CellResult {
    pub fn mae(&self) -> f64 {
        mean_abs_error(&self.errors)
    }

    /// MAE along `x` at a fixed `t` (PDE only).
    pub fn profile_mae(&self, t: f64) -> Option<f64> {
        let e: Vec<_> = self
            .errors
            .iter()
            .filter(|(p, _)| p.t_coord() == Some(t))
            .copied()
            .collect();
        (!e.is_empty()).then(|| mean_abs_error(&e))
    }

    /// Error at table row `x`, averaged over the table times for the PDE.
    pub fn error_at_x(&self, x: f64) -> f64 {
        let e: Vec<f64> = self
            .errors
            .iter()
            .filter(|(p, _)| p.x_coord() == x)
            .map(|&(_, e)| e)
            .collect();
        e.iter().sum::<f64>() / e.len() as f64
    }

    pub fn error_at(&self, x: f64, t: f64) -> f64 {
        self.errors
            .iter()
            .find(|(p, _)| p.x_coord() == x && p.t_coord() == Some(t))
            .map_or(f64::NAN, |&(_, e)| e)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.history.last().map(|r| r.total)
    }
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellResult> {
    let start = Instant::now();
    let problem = cfg.problem_for(cell.alpha)?;
    let abort = |source: CoreError| match source {
        CoreError::InvalidArgument(_) => config_err(format!("{}: {source}", cell.label)),
        source => AppError::Training {
            cell: cell.label.clone(),
            source,
        },
    };
    let mut trainer =
        Trainer::new(problem.clone(), cfg.train_config(cell.l1_points)).map_err(abort)?;
    trainer.run().map_err(abort)?;
    let state = trainer.into_state();
    let errors = evaluate_mae(
        &NetworkField(&state.network),
        &problem,
        &table_grid(&problem),
    )
    .map_err(abort)?;
    Ok(CellResult {
        cell: cell.clone(),
        problem,
        network: state.network,
        history: state.history,
        errors,
        elapsed: start.elapsed(),
    })
}

/// Worker count from `FRACPINN_THREADS`, else the available parallelism.
pub fn thread_count() -> Result<usize> {
    match std::env::var("FRACPINN_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(config_err(format!(
                "FRACPINN_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Trains every cell on up to `threads` workers. Results come back in cell
/// order; each cell depends only on the config, so the outcome does not
/// depend on the worker count.
pub fn run_cells(
    cfg: &ExperimentConfig,
    threads: usize,
    on_done: &(dyn Fn(&CellResult) + Sync),
) -> Result<Vec<CellResult>> {
    let cells = cfg.cells();
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<CellResult>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let workers = threads.clamp(1, cells.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let r = run_cell(cfg, cell);
                if let Ok(res) = &r {
                    on_done(res);
                }
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every cell is visited"))
        .collect()
}

/// MAE table: one row per `x`, one column per [`ExperimentConfig::columns`].
pub fn mae_table(
    cfg: &ExperimentConfig,
    results: &[CellResult],
    fmt: fn(f64) -> String,
) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["x".to_string()];
    header.extend(cfg.columns());
    let rows = table_xs()
        .into_iter()
        .map(|x| {
            let mut row = vec![key(x)];
            match cfg.layout {
                Layout::XtGrid => {
                    row.extend(TABLE_TIMES.iter().map(|&t| fmt(results[0].error_at(x, t))))
                }
                _ => row.extend(results.iter().map(|r| fmt(r.error_at_x(x)))),
            }
            row
        })
        .collect();
    (header, rows)
}
