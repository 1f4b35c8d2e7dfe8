//! Running an experiment and writing its artifacts.

use std::path::{Path, PathBuf};

use fracpinn_core::trainer::TABLE_TIMES;
use fracpinn_core::{NetworkField, Operators, Point, ProblemId, RuleCache};

use crate::checkpoint;
use crate::error::{AppError, Result};
use crate::experiment::{mae_table, run_cells, CellResult, ExperimentConfig, Layout};
use crate::format::{full, key, sci3};
use crate::manifest::{self, CellRecord, Manifest};
use crate::output::write_csv;
use crate::svg::{Plot, Series};

pub const MAE_TABLE: &str = "mae_table.csv";
pub const MAE_TABLE_FULL: &str = "mae_table_full.csv";
pub const MAE_SUMMARY: &str = "mae_summary.csv";
pub const LOSS_HISTORY: &str = "loss_history.csv";
pub const SOLUTION_SVG: &str = "solution.svg";
pub const RESIDUAL_SVG: &str = "residual.svg";
pub const LOSS_SVG: &str = "loss.svg";
pub const CHECKPOINT_DIR: &str = "checkpoints";

/// Time of the `x` profiles plotted for the PDE in sweep layouts.
const PROFILE_T: f64 = 0.5;
const PLOT_POINTS: usize = 100;

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub threads: usize,
    pub verbose: bool,
}

#[derive(Debug)]
pub struct RunOutput {
    pub out_dir: PathBuf,
    pub results: Vec<CellResult>,
    pub manifest: Manifest,
}

pub fn checkpoint_name(label: &str) -> String {
    format!("cell-{}.ckpt", label.replace('=', "-"))
}

/// Trains every cell of `cfg` and writes tables, plots, checkpoints and the
/// manifest into `cfg.out_dir`.
pub fn run(cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunOutput> {
    cfg.validate()?;
    let out = cfg.out_dir.clone();
    std::fs::create_dir_all(out.join(CHECKPOINT_DIR)).map_err(AppError::io(&out))?;

    let report = |r: &CellResult| {
        if opts.verbose {
            eprintln!(
                "{} {}: mae {} after {} epochs ({:.1} s)",
                cfg.problem,
                r.cell.label,
                sci3(r.mae()),
                r.history.len(),
                r.elapsed.as_secs_f64()
            );
        }
    };
    let results = run_cells(cfg, opts.threads, &report)?;

    let (header, rows) = mae_table(cfg, &results, sci3);
    write_csv(&out.join(MAE_TABLE), &header, &rows)?;
    let (header, rows) = mae_table(cfg, &results, full);
    write_csv(&out.join(MAE_TABLE_FULL), &header, &rows)?;
    write_summary(cfg, &results, &out)?;
    write_history(&results, &out)?;

    let mut cells = Vec::with_capacity(results.len());
    for r in &results {
        let name = checkpoint_name(&r.cell.label);
        checkpoint::save(&r.network, &out.join(CHECKPOINT_DIR).join(&name))?;
        cells.push(CellRecord {
            label: r.cell.label.clone(),
            alpha: r.cell.alpha,
            l1_points: r.cell.l1_points,
            final_loss: r.final_loss(),
            mae: r.mae(),
            checkpoint: format!("{CHECKPOINT_DIR}/{name}"),
        });
    }

    crate::output::write_atomic(
        &out.join(SOLUTION_SVG),
        solution_plot(cfg, &results)?.render().as_bytes(),
    )?;
    crate::output::write_atomic(
        &out.join(RESIDUAL_SVG),
        residual_plot(cfg, &results)?.render().as_bytes(),
    )?;
    crate::output::write_atomic(&out.join(LOSS_SVG), loss_plot(&results).render().as_bytes())?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        git_describe: manifest::git_describe(),
        seed: cfg.seed,
        config: cfg.clone(),
        cells,
    };
    manifest.save(&out.join(manifest::FILE_NAME))?;
    Ok(RunOutput {
        out_dir: out,
        results,
        manifest,
    })
}

/// Re-runs the configuration stored in a manifest, writing into `out_dir`.
pub fn replay(manifest_path: &Path, out_dir: &Path, opts: RunOptions) -> Result<RunOutput> {
    let mut cfg = Manifest::load(manifest_path)?.config;
    cfg.out_dir = out_dir.to_path_buf();
    run(&cfg, opts)
}

fn write_summary(cfg: &ExperimentConfig, results: &[CellResult], out: &Path) -> Result<()> {
    let pde = cfg.problem == ProblemId::FracPde;
    let mut header: Vec<String> = ["cell", "alpha", "l1_points", "epochs", "final_loss", "mae"]
        .map(String::from)
        .to_vec();
    if pde {
        header.push(format!("mae_t={}", key(PROFILE_T)));
    }
    let rows = results
        .iter()
        .map(|r| {
            let mut row = vec![
                r.cell.label.clone(),
                key(r.cell.alpha),
                r.cell.l1_points.to_string(),
                r.history.len().to_string(),
                r.final_loss().map_or_else(String::new, full),
                full(r.mae()),
            ];
            if pde {
                row.push(r.profile_mae(PROFILE_T).map_or_else(String::new, full));
            }
            row
        })
        .collect::<Vec<_>>();
    write_csv(&out.join(MAE_SUMMARY), &header, &rows)
}

fn write_history(results: &[CellResult], out: &Path) -> Result<()> {
    let header = ["cell", "epoch", "residual", "initial", "boundary", "total"]
        .map(String::from)
        .to_vec();
    let rows = results
        .iter()
        .flat_map(|r| {
            r.history.iter().enumerate().map(|(epoch, rec)| {
                vec![
                    r.cell.label.clone(),
                    epoch.to_string(),
                    full(rec.residual),
                    full(rec.initial),
                    full(rec.boundary),
                    full(rec.total),
                ]
            })
        })
        .collect::<Vec<_>>();
    write_csv(&out.join(LOSS_HISTORY), &header, &rows)
}

fn plot_xs(include_zero: bool) -> Vec<f64> {
    let start = usize::from(!include_zero);
    (start..=PLOT_POINTS)
        .map(|k| k as f64 / PLOT_POINTS as f64)
        .collect()
}

fn point(problem_is_pde: bool, x: f64, t: f64) -> Point {
    if problem_is_pde {
        Point::xt(x, t)
    } else {
        Point::x(x)
    }
}

/// `(label, t)` profiles to draw for one cell.
fn profiles(cfg: &ExperimentConfig, r: &CellResult) -> Vec<(String, f64)> {
    match (cfg.problem, cfg.layout) {
        (ProblemId::FracPde, Layout::XtGrid) => TABLE_TIMES
            .iter()
            .map(|&t| (format!("t={}", key(t)), t))
            .collect(),
        (ProblemId::FracPde, _) => {
            vec![(format!("{}, t={}", r.cell.label, key(PROFILE_T)), PROFILE_T)]
        }
        _ => vec![(r.cell.label.clone(), 0.0)],
    }
}

fn solution_plot(cfg: &ExperimentConfig, results: &[CellResult]) -> Result<Plot> {
    let pde = cfg.problem == ProblemId::FracPde;
    let xs = plot_xs(true);
    let mut series = Vec::new();
    for r in results {
        let field = NetworkField(&r.network);
        for (label, t) in profiles(cfg, r) {
            let group = series.len() / 2;
            let mut pred = Vec::with_capacity(xs.len());
            let mut exact = Vec::with_capacity(xs.len());
            for &x in &xs {
                let p = point(pde, x, t);
                pred.push((x, fracpinn_core::Field::value(&field, p)?));
                exact.push((x, r.problem.exact(p)));
            }
            series.push(Series::new(format!("{label} PINN"), pred).group(group));
            series.push(
                Series::new(format!("{label} exact"), exact)
                    .group(group)
                    .dashed(),
            );
        }
    }
    Ok(Plot {
        title: format!("{}: predicted and exact solutions", cfg.problem),
        x_label: "x".into(),
        y_label: "psi".into(),
        log_y: false,
        series,
    })
}

fn residual_plot(cfg: &ExperimentConfig, results: &[CellResult]) -> Result<Plot> {
    let pde = cfg.problem == ProblemId::FracPde;
    let xs = plot_xs(pde);
    let mut cache = RuleCache::new();
    let mut series = Vec::new();
    for r in results {
        let ops = Operators::new(&r.problem, r.cell.l1_points, cfg.quad_order, &mut cache)?;
        let field = NetworkField(&r.network);
        for (label, t) in profiles(cfg, r) {
            let pts = xs
                .iter()
                .map(|&x| {
                    let v = r.problem.residual(&field, point(pde, x, t), &ops)?;
                    Ok((x, v.abs()))
                })
                .collect::<Result<Vec<_>>>()?;
            series.push(Series::new(label, pts));
        }
    }
    Ok(Plot {
        title: format!("{}: pointwise |residual|", cfg.problem),
        x_label: "x".into(),
        y_label: "|residual|".into(),
        log_y: true,
        series,
    })
}

fn loss_plot(results: &[CellResult]) -> Plot {
    Plot {
        title: "training loss".into(),
        x_label: "epoch".into(),
        y_label: "SE".into(),
        log_y: true,
        series: results
            .iter()
            .map(|r| {
                let pts = r
                    .history
                    .iter()
                    .enumerate()
                    .map(|(i, rec)| (i as f64, rec.total))
                    .collect();
                Series::new(r.cell.label.clone(), pts)
            })
            .collect(),
    }
}
