//! Command-line front end: one config file, one subcommand, one run directory.

pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::bloch1d::{self, bands_1d, convergence_1d};
use crate::bloch2d::{
    bands_2d, bands_2d_modal, BandSample, DEFAULT_MODAL_N, DEFAULT_MODAL_P, DEFAULT_N, DENSE_DIM_CAP,
};
use crate::crossings::{enumerate_crossings, Crossing};
use crate::error::{Error, Result};
use crate::gapscan::{compare, detect_gap, scan, GapMeasurement, ModalEvaluator, ScanOptions};
use crate::model::QuasiMomentum;
use crate::predictor::{gap_coefficients, predict_gap};

pub use config::{load_config, parse_config, RunSettings};
pub use output::{csv_body, RunDir, RunManifest, Table, MANIFEST_FILE};

#[derive(Debug, Parser)]
#[command(name = "wallgap", version, about = "Band gaps of periodic operators with narrow potential walls")]
pub struct Cli {
    /// Directory that receives one timestamped subdirectory per run.
    #[arg(long, global = true, default_value = "runs")]
    pub out_dir: PathBuf,
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Recorded in the manifest; every computation is deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Auto,
    Dense,
    Modal,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Strip-limit crossings and their gap conditions.
    Crossings {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        n_max: Option<i64>,
    },
    /// Predicted gap coefficients and edges per eps.
    Predict {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        crossing_index: Option<usize>,
    },
    /// 1D wall spectra and their convergence to the Dirichlet limit.
    Bands1d {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Number of tau2 points on [0, pi/a2].
        #[arg(long, default_value_t = 3)]
        tau2_grid: usize,
        /// Bands per spectrum written to the CSV.
        #[arg(long, default_value_t = 3)]
        bands: usize,
    },
    /// Eigenvalues of the 2D fiber operator at one quasimomentum.
    Bands2d {
        #[command(flatten)]
        cfg: ConfigArg,
        /// tau1,tau2
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        tau: (f64, f64),
        #[arg(long)]
        eps: f64,
        /// Emin,Emax
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        window: Option<(f64, f64)>,
        #[arg(long, value_enum, default_value_t = Solver::Auto)]
        solver: Solver,
    },
    /// Zone scan of the two crossing bands, gap edges and comparison with the prediction.
    Gapscan {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        crossing_index: Option<usize>,
        /// G1,G2
        #[arg(long, value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
        #[arg(long)]
        no_refine: bool,
    },
    /// Summary and plot-data tables for an existing run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|e| format!("{a}: {e}"))?,
            b.parse().map_err(|e| format!("{b}: {e}"))?,
        )),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = parse_pair(s)?;
    if a.fract() != 0.0 || b.fract() != 0.0 || a < 1.0 || b < 1.0 {
        return Err(format!("grid sizes must be positive integers, got {s:?}"));
    }
    Ok((a as usize, b as usize))
}

/// Exit status for an error: 2 for input or validation problems, 3 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

/// Runs one command; returns the run directory written.
pub fn run(cli: &Cli) -> Result<PathBuf> {
    if let Some(w) = cli.workers {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w.max(1)).build_global();
    }
    match &cli.command {
        Command::Crossings { cfg, n_max } => cmd_crossings(cli, &cfg.config, *n_max),
        Command::Predict { cfg, crossing_index } => cmd_predict(cli, &cfg.config, *crossing_index),
        Command::Bands1d { cfg, tau2_grid, bands } => cmd_bands1d(cli, &cfg.config, *tau2_grid, *bands),
        Command::Bands2d {
            cfg,
            tau,
            eps,
            window,
            solver,
        } => cmd_bands2d(cli, &cfg.config, QuasiMomentum::new(tau.0, tau.1), *eps, *window, *solver),
        Command::Gapscan {
            cfg,
            crossing_index,
            grid,
            no_refine,
        } => cmd_gapscan(cli, &cfg.config, *crossing_index, *grid, !*no_refine),
        Command::Report { run_dir } => cmd_report(cli, run_dir),
    }
}

fn params(cli: &Cli, config: &Path, extra: serde_json::Value) -> serde_json::Value {
    let mut v = json!({
        "config": config.display().to_string(),
        "workers": cli.workers,
        "seed": cli.seed,
    });
    if let (Some(m), serde_json::Value::Object(e)) = (v.as_object_mut(), extra) {
        m.extend(e);
    }
    v
}

/// The crossing named by index into the enumeration, else the config's `[crossing]`, else index 0.
pub fn select_crossing(s: &RunSettings, index: Option<usize>) -> Result<Crossing> {
    let lattice = s.operator.lattice;
    if index.is_none() {
        if let Some(c) = s.crossing {
            return Crossing::new(c.n, c.m, c.tau0, lattice);
        }
    }
    let list = enumerate_crossings(&lattice, s.n_max);
    let i = index.unwrap_or(0);
    list.get(i).cloned().ok_or_else(|| {
        Error::InvalidArgument(format!("crossing index {i} out of range ({} crossings)", list.len()))
    })
}

pub fn cmd_crossings(cli: &Cli, config: &Path, n_max: Option<i64>) -> Result<PathBuf> {
    let s = load_config(config)?;
    let n_max = n_max.unwrap_or(s.n_max);
    let mut run = RunDir::create(&cli.out_dir, "crossings", &s.hash, params(cli, config, json!({ "n_max": n_max })))?;
    let list = enumerate_crossings(&s.operator.lattice, n_max);
    run.log(format!("{} crossings with |n|, |m| <= {n_max}", list.len()));
    let mut t = Table::new(&[
        "index", "n", "m", "tau0", "E0", "boundary", "m12_abs_plus", "m12_abs_minus", "slope_product", "beta_l",
        "beta_r", "admissible", "status",
    ]);
    for (i, c) in list.iter().enumerate() {
        let (report, status) = match gap_coefficients(&s.operator, c) {
            Ok(g) => (Some(g.conditions), "ok".to_string()),
            Err(Error::ConditionsViolated(r)) => (Some(*r), "conditions violated".to_string()),
            Err(e) => (None, e.to_string().replace(',', ";")),
        };
        let nan = f64::NAN;
        t.row(vec![
            i.into(),
            c.n.into(),
            c.m.into(),
            c.tau0.into(),
            c.e0.into(),
            c.boundary.into(),
            report.as_ref().map_or(nan, |r| r.m12_abs_plus).into(),
            report.as_ref().map_or(nan, |r| r.m12_abs_minus).into(),
            c.slope_product().into(),
            report.as_ref().map_or(nan, |r| r.beta_l).into(),
            report.as_ref().map_or(nan, |r| r.beta_r).into(),
            report.as_ref().is_some_and(|r| r.admissible()).into(),
            status.into(),
        ]);
    }
    run.write_csv("crossings.csv", &t)?;
    run.finish()
}

pub fn cmd_predict(cli: &Cli, config: &Path, index: Option<usize>) -> Result<PathBuf> {
    let s = load_config(config)?;
    let crossing = select_crossing(&s, index)?;
    let gc = gap_coefficients(&s.operator, &crossing)?;
    let mut run = RunDir::create(
        &cli.out_dir,
        "predict",
        &s.hash,
        params(cli, config, json!({ "crossing_index": index })),
    )?;
    let preds = s
        .operator
        .epsilons
        .iter()
        .map(|&e| predict_gap(&gc, crossing.e0, s.operator.alpha, e))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["eps", "eta_l", "eta_r", "tau1_l", "tau2_l", "tau1_r", "tau2_r", "gap_open"]);
    for p in &preds {
        t.row(vec![
            p.eps.into(),
            p.eta_l.into(),
            p.eta_r.into(),
            p.extremum_l.tau1.into(),
            p.extremum_l.tau2.into(),
            p.extremum_r.tau1.into(),
            p.extremum_r.tau2.into(),
            p.gap_open.into(),
        ]);
    }
    let k: Vec<_> = gc.extrema_at.iter().map(|e| e.k).collect();
    run.write_json(
        "prediction.json",
        &json!({
            "crossing": { "n": crossing.n, "m": crossing.m, "tau0": crossing.tau0, "e0": crossing.e0 },
            "alpha": s.operator.alpha,
            "coefficients": gc,
            "k_constants": k,
            "threshold_eps": preds.first().map(|p| p.threshold_eps),
            "predictions": preds,
        }),
    )?;
    run.write_csv("predictions.csv", &t)?;
    if preds.iter().any(|p| !p.gap_open) {
        run.log("predicted edges overlap at some eps of the schedule (eta_l >= eta_r)");
    }
    run.finish()
}

pub fn cmd_bands1d(cli: &Cli, config: &Path, tau2_grid: usize, bands: usize) -> Result<PathBuf> {
    let s = load_config(config)?;
    if tau2_grid == 0 || bands == 0 {
        return Err(Error::InvalidArgument("tau2-grid and bands must be positive".into()));
    }
    let cfg = &s.operator;
    let mut run = RunDir::create(
        &cli.out_dir,
        "bands1d",
        &s.hash,
        params(cli, config, json!({ "tau2_grid": tau2_grid, "bands": bands, "Q": s.q })),
    )?;
    let half = std::f64::consts::PI / cfg.lattice.a2;
    let taus: Vec<f64> = if tau2_grid == 1 {
        vec![0.0]
    } else {
        (0..tau2_grid).map(|i| half * i as f64 / (tau2_grid - 1) as f64).collect()
    };
    let jobs: Vec<(f64, f64)> = cfg.epsilons.iter().flat_map(|&e| taus.iter().map(move |&t| (e, t))).collect();
    let spectra = jobs
        .par_iter()
        .map(|&(e, t)| bands_1d(cfg, t, e, s.q.unwrap_or_else(|| bloch1d::default_q(cfg, e))))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["eps", "tau2", "Q", "p", "lambda"]);
    for sp in &spectra {
        if let Some(note) = &sp.cutoff_note {
            run.log(note);
        }
        for (p, v) in sp.values.iter().take(bands).enumerate() {
            t.row(vec![sp.eps.into(), sp.tau2.into(), sp.q.into(), (p + 1).into(), (*v).into()]);
        }
    }
    run.write_csv("spectra.csv", &t)?;
    if cfg.epsilons.len() >= 4 {
        let p_max = bands.min(3) as u32;
        let conv = taus
            .iter()
            .map(|&t| convergence_1d(cfg, t, p_max))
            .collect::<Result<Vec<_>>>()?;
        let mut c = Table::new(&["tau2", "p", "eps", "lambda", "error", "scaled", "predicted", "predicted_alt"]);
        for r in &conv {
            for b in &r.bands {
                for ((&(e, v), &(_, err)), &(_, sc)) in b.values.iter().zip(&b.errors).zip(&b.scaled) {
                    c.row(vec![
                        r.tau2.into(),
                        (b.p as usize).into(),
                        e.into(),
                        v.into(),
                        err.into(),
                        sc.into(),
                        b.predicted.into(),
                        b.predicted_alt.into(),
                    ]);
                }
            }
        }
        run.write_csv("convergence.csv", &c)?;
        run.write_json("convergence.json", &conv)?;
    } else {
        run.log("fewer than 4 eps values: convergence report skipped");
    }
    run.finish()
}

pub fn cmd_bands2d(
    cli: &Cli,
    config: &Path,
    tau: QuasiMomentum,
    eps: f64,
    window: Option<(f64, f64)>,
    solver: Solver,
) -> Result<PathBuf> {
    let s = load_config(config)?;
    let cfg = &s.operator;
    let q = s.q.unwrap_or_else(|| bloch1d::default_q(cfg, eps));
    let dense_n = s.n_cut.unwrap_or(DEFAULT_N);
    let dense_fits = (2 * dense_n + 1) * (2 * q + 1) <= DENSE_DIM_CAP;
    let use_dense = match solver {
        Solver::Dense => true,
        Solver::Modal => false,
        Solver::Auto => dense_fits,
    };
    let window = window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let sample: BandSample = if use_dense {
        bands_2d(cfg, tau, eps, dense_n, q, window)?
    } else {
        let n = s.n_cut.unwrap_or(DEFAULT_MODAL_N);
        let p = s.p_modes.unwrap_or(DEFAULT_MODAL_P);
        bands_2d_modal(cfg, tau, eps, n, q, p, window)?
    };
    let mut run = RunDir::create(
        &cli.out_dir,
        "bands2d",
        &s.hash,
        params(
            cli,
            config,
            json!({
                "tau": [tau.tau1, tau.tau2], "eps": eps, "window": [window.0, window.1],
                "solver": if use_dense { "dense" } else { "modal" },
                "N": sample.n_cut, "Q": sample.q_cut, "P": sample.p_modes,
            }),
        ),
    )?;
    if let Some(n) = &sample.cutoff_note {
        run.log(n);
    }
    let mut t = Table::new(&["tau1", "tau2", "eps", "N", "Q", "k", "E"]);
    for &(k, e) in &sample.levels {
        t.row(vec![
            tau.tau1.into(),
            tau.tau2.into(),
            eps.into(),
            sample.n_cut.into(),
            sample.q_cut.into(),
            k.into(),
            e.into(),
        ]);
    }
    run.write_csv("bands2d.csv", &t)?;
    run.finish()
}

pub fn cmd_gapscan(
    cli: &Cli,
    config: &Path,
    index: Option<usize>,
    grid: Option<(usize, usize)>,
    refine: bool,
) -> Result<PathBuf> {
    let s = load_config(config)?;
    let cfg = &s.operator;
    let crossing = select_crossing(&s, index)?;
    let gc = gap_coefficients(cfg, &crossing)?;
    let opts = ScanOptions {
        grid: grid.unwrap_or(s.grid),
        n_cut: s.n_cut.unwrap_or(DEFAULT_MODAL_N),
        p_modes: s.p_modes.unwrap_or(DEFAULT_MODAL_P),
        q: s.q,
        c2: s.c2,
    };
    let mut run = RunDir::create(
        &cli.out_dir,
        "gapscan",
        &s.hash,
        params(
            cli,
            config,
            json!({ "crossing_index": index, "refine": refine, "options": opts,
                    "crossing": { "n": crossing.n, "m": crossing.m, "tau0": crossing.tau0 } }),
        ),
    )?;
    let mut edges = Table::new(&[
        "eps", "gap_found", "edge_l", "edge_r", "tau1_l", "tau2_l", "tau1_r", "tau2_r", "coarse_edge_l",
        "coarse_edge_r", "predicted_l", "predicted_r", "status",
    ]);
    let mut measurements: Vec<GapMeasurement> = Vec::new();
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let ea = eps.powf(cfg.alpha);
        let eh = eps.sqrt();
        let pl = crossing.e0 + ea * gc.beta_l + eh * gc.lambda_l;
        let pr = crossing.e0 + ea * gc.beta_r + eh * gc.lambda_r;
        let outcome = scan(cfg, &crossing, &gc, eps, &opts).and_then(|surface| {
            let ev = ModalEvaluator::new(cfg, eps, surface.lower_index, &opts)?;
            let m = detect_gap(&surface, refine.then_some(&ev as &dyn crate::gapscan::BandEvaluator))?;
            Ok((surface, m))
        });
        match outcome {
            Ok((surface, m)) => {
                let mut st = Table::new(&["eps", "tau1", "tau2", "lower", "upper"]);
                for ((tau, lo), up) in surface.grid.iter().zip(&surface.lower_band).zip(&surface.upper_band) {
                    st.row(vec![eps.into(), tau.tau1.into(), tau.tau2.into(), (*lo).into(), (*up).into()]);
                }
                run.write_csv(&format!("surface_{i:02}.csv"), &st)?;
                edges.row(vec![
                    eps.into(),
                    m.gap_found.into(),
                    m.edge_l.into(),
                    m.edge_r.into(),
                    m.argmax_l.tau1.into(),
                    m.argmax_l.tau2.into(),
                    m.argmin_r.tau1.into(),
                    m.argmin_r.tau2.into(),
                    m.coarse_edge_l.into(),
                    m.coarse_edge_r.into(),
                    pl.into(),
                    pr.into(),
                    "ok".into(),
                ]);
                run.log(format!(
                    "eps = {eps}: edges ({}, {}), gap_found = {}",
                    m.edge_l, m.edge_r, m.gap_found
                ));
                measurements.push(m);
            }
            Err(e) if !e.is_validation() => {
                let nan = f64::NAN;
                run.log(format!("eps = {eps}: {e}"));
                let mut cells: Vec<output::Cell> = vec![eps.into(), false.into()];
                cells.extend((0..8).map(|_| nan.into()));
                cells.extend([pl.into(), pr.into(), e.to_string().replace(',', ";").into()]);
                edges.row(cells);
            }
            Err(e) => return Err(e),
        }
    }
    run.write_csv("gap_edges.csv", &edges)?;
    let mut text = String::new();
    let _ = writeln!(
        text,
        "crossing (n, m) = ({}, {}), tau0 = {}, E0 = {}",
        crossing.n, crossing.m, crossing.tau0, crossing.e0
    );
    let _ = writeln!(
        text,
        "beta_l = {}, beta_r = {}, lambda_l = {}, lambda_r = {}",
        gc.beta_l, gc.beta_r, gc.lambda_l, gc.lambda_r
    );
    match compare(&measurements, &gc, crossing.e0, cfg.alpha, cfg.lattice.a1) {
        Ok(report) => {
            let mut r = Table::new(&[
                "eps", "residual_l", "residual_r", "tau1_residual_l_plus", "tau1_residual_l_minus",
                "tau1_residual_r_plus", "tau1_residual_r_minus", "tau2_distance_l", "tau2_distance_r", "tau2_envelope",
            ]);
            for row in &report.rows {
                r.row(vec![
                    row.eps.into(),
                    row.residual_l.into(),
                    row.residual_r.into(),
                    row.tau1_residual_l[0].into(),
                    row.tau1_residual_l[1].into(),
                    row.tau1_residual_r[0].into(),
                    row.tau1_residual_r[1].into(),
                    row.tau2_distance_l.into(),
                    row.tau2_distance_r.into(),
                    row.tau2_envelope.into(),
                ]);
            }
            run.write_csv("residuals.csv", &r)?;
            let _ = writeln!(
                text,
                "edge residual order: l {:.4}, r {:.4} (theory >= {:.4})",
                report.edge_order_l.order(),
                report.edge_order_r.order(),
                report.edge_order_theory
            );
            let _ = writeln!(
                text,
                "tau1 location order ({}t): l {:.4}, r {:.4} (theory >= {:.4})",
                if report.t_sign > 0.0 { "+" } else { "-" },
                report.tau1_order_l.order(),
                report.tau1_order_r.order(),
                report.tau1_order_theory
            );
            let _ = writeln!(
                text,
                "tau2 within envelope: l {:?}, r {:?}",
                report.tau2_within_l, report.tau2_within_r
            );
            run.write_json("validation.json", &report)?;
        }
        Err(e @ Error::InsufficientData(_)) => {
            let _ = writeln!(text, "comparison unavailable: {e}");
            run.log(format!("comparison unavailable: {e}"));
        }
        Err(e) => return Err(e),
    }
    run.write_text("report.txt", &text)?;
    run.finish()
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.display().to_string()),
        _ => Error::Io(e),
    })?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no header row", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((header, rows))
}

fn column(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidArgument(format!("missing column {name}")))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

pub fn cmd_report(cli: &Cli, run_dir: &Path) -> Result<PathBuf> {
    let manifest_path = run_dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|_| Error::MissingFile(manifest_path.display().to_string()))?;
    let source: RunManifest = serde_json::from_str(&text)?;
    let mut run = RunDir::create(
        &cli.out_dir,
        "report",
        &source.config_hash,
        json!({ "run_dir": run_dir.display().to_string() }),
    )?;
    let mut summary = String::new();
    let _ = writeln!(summary, "run: {}", run_dir.display());
    let _ = writeln!(summary, "subcommand: {}", source.subcommand);
    let _ = writeln!(summary, "config hash: {}", source.config_hash);
    let _ = writeln!(summary, "created: {}  finished: {}", source.created, source.finished.as_deref().unwrap_or("-"));
    let _ = writeln!(summary, "tool version: {}", source.tool_version);
    let _ = writeln!(summary, "outputs:");
    for o in &source.outputs {
        let present = run_dir.join(o).exists();
        let _ = writeln!(summary, "  {o}{}", if present { "" } else { "  (missing)" });
    }
    let edges_path = run_dir.join("gap_edges.csv");
    if edges_path.exists() {
        let (h, rows) = read_csv(&edges_path)?;
        let (ie, il, ir, ig) = (column(&h, "eps")?, column(&h, "edge_l")?, column(&h, "edge_r")?, column(&h, "gap_found")?);
        let (pl, pr) = (column(&h, "predicted_l")?, column(&h, "predicted_r")?);
        let mut t = Table::new(&["eps", "edge_l", "edge_r", "width", "predicted_l", "predicted_r", "gap_found"]);
        let _ = writeln!(summary, "\ngap edges:");
        let _ = writeln!(summary, "  {:>12} {:>14} {:>14} {:>12}  gap", "eps", "edge_l", "edge_r", "width");
        for r in &rows {
            let (e, l, rr) = (num(&r[ie]), num(&r[il]), num(&r[ir]));
            t.row(vec![
                e.into(),
                l.into(),
                rr.into(),
                (rr - l).into(),
                num(&r[pl]).into(),
                num(&r[pr]).into(),
                (r[ig] == "true").into(),
            ]);
            let _ = writeln!(summary, "  {e:>12.5e} {l:>14.8} {rr:>14.8} {:>12.4e}  {}", rr - l, r[ig]);
        }
        run.write_csv("gap_edges_vs_eps.csv", &t)?;
        let mut slices = Table::new(&["eps", "tau2", "tau1", "lower", "upper"]);
        let mut files: Vec<&String> = source.outputs.iter().filter(|o| o.starts_with("surface_")).collect();
        files.sort();
        for f in files {
            let (h, rows) = read_csv(&run_dir.join(f))?;
            let (ie, i1, i2, lo, up) = (
                column(&h, "eps")?,
                column(&h, "tau1")?,
                column(&h, "tau2")?,
                column(&h, "lower")?,
                column(&h, "upper")?,
            );
            // τ₂ slices nearest 0 and nearest half the largest τ₂
            let mut tau2s: Vec<f64> = rows.iter().map(|r| num(&r[i2])).collect();
            tau2s.sort_by(f64::total_cmp);
            tau2s.dedup();
            let top = tau2s.last().copied().unwrap_or(0.0);
            let nearest = |x: f64| tau2s.iter().copied().min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()));
            let mut picks: Vec<f64> = [nearest(0.0), nearest(top / 2.0)].into_iter().flatten().collect();
            picks.dedup();
            let mut by_slice: BTreeMap<usize, Vec<&Vec<String>>> = BTreeMap::new();
            for r in &rows {
                if let Some(k) = picks.iter().position(|p| *p == num(&r[i2])) {
                    by_slice.entry(k).or_default().push(r);
                }
            }
            for (_, mut rs) in by_slice {
                rs.sort_by(|a, b| num(&a[i1]).total_cmp(&num(&b[i1])));
                for r in rs {
                    slices.row(vec![
                        num(&r[ie]).into(),
                        num(&r[i2]).into(),
                        num(&r[i1]).into(),
                        num(&r[lo]).into(),
                        num(&r[up]).into(),
                    ]);
                }
            }
        }
        run.write_csv("dispersion_slices.csv", &slices)?;
    }
    let report_txt = run_dir.join("report.txt");
    if report_txt.exists() {
        let body = std::fs::read_to_string(&report_txt)?;
        let _ = writeln!(summary, "\ncomparison:");
        for l in body.lines().filter(|l| !l.starts_with('#')) {
            let _ = writeln!(summary, "  {l}");
        }
    }
    run.write_text("summary.txt", &summary)?;
    run.finish()
}
