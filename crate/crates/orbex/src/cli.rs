//! Argument parsing and subcommand dispatch.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand};
use orbex_core::cases::{
    find_case, list_cases, sweep_cell, sweep_grid, CaseRunner, RunOptions, SweepOptions, SweepRow,
};
use orbex_core::exponents::{le_finite_time_svd, le_periodic, le_qr, ExponentSpectrum, SpectrumMethod};
use orbex_core::orbitlab::{classify_ref1, classify_signs, default_zero_tol, find_attractor_orbit_with, DetectOptions};
use orbex_core::vectorfields::{flow_with_propagator, integrate_augmented, integrate_streaming, relax};
use orbex_core::StateVec3;

use crate::config::{Format, MatrixArg, RunConfig, SystemKind, Triple};
use crate::error::CliError;
use crate::output::{self, CycleSidecar, SpectrumReport, TrajectoryWriter};

#[derive(Debug, Parser)]
#[command(name = "orbex", version, about = "Lyapunov exponent spectra and closed orbits of three-dimensional flows")]
pub struct Cli {
    /// Flat `key = value` file; flags on the command line override it
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Directory that relative `--out` paths are written under
    #[arg(long, global = true, env = "ORBEX_OUT_DIR", value_name = "DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List or run the reference cases
    Case {
        #[command(subcommand)]
        action: CaseAction,
    },
    /// Sweep the Silnikov parameter b and tabulate orbits and spectra as CSV
    Sweep(SweepArgs),
    /// Dump a trajectory, or one period of the attracting cycle, as `t,x,y,z` CSV
    Traj(TrajArgs),
    /// Exponent spectra along an orbit
    Spectrum(SpectrumArgs),
    /// Inspect the resolved configuration
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum CaseAction {
    /// Registry ids with family and source
    List {
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Run cases and compare with their expected values; exit 0 iff all pass
    Run {
        /// Case ids, e.g. M3 n1 S18-iii@0.5,1
        #[arg(required_unless_present = "all")]
        ids: Vec<String>,
        /// Run every registered case
        #[arg(long)]
        all: bool,
        /// Skip the stability probes
        #[arg(long)]
        no_stability: bool,
        /// Absolute tolerance on each exponent [default: per case]
        #[arg(long, allow_negative_numbers = true)]
        le_tol: Option<f64>,
        /// Relative tolerance on the period [default: per case]
        #[arg(long, allow_negative_numbers = true)]
        period_rel_tol: Option<f64>,
        /// Seed for orbit detection [default: 0.5,0.1,0]
        #[arg(long, alias = "x0", allow_hyphen_values = true)]
        seed: Option<Triple>,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
}

#[derive(Debug, Subcommand)]
pub enum ConfigAction {
    /// Print every setting in the config file format
    Show {
        #[command(flatten)]
        system: SystemFlags,
        /// Seed state [default: 0.5,0.1,0]
        #[arg(long, alias = "x0", allow_hyphen_values = true)]
        seed: Option<Triple>,
        #[command(flatten)]
        numeric: NumericFlags,
        #[command(flatten)]
        output: OutputFlags,
        /// Worker threads for sweeps [default: 1]
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Debug, Args, Default)]
pub struct SystemFlags {
    /// Flow family [default: silnikov]
    #[arg(long, value_enum)]
    pub system: Option<SystemKind>,
    /// Silnikov a [default: 1]
    #[arg(long = "a", allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Silnikov b [default: 0.8]
    #[arg(long = "b", allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Two-ring α [default: 0.5]
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Ring β [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Linear system matrix, nine row-major entries [default: diag(-1,-2,-3)]
    #[arg(long, allow_hyphen_values = true)]
    pub matrix: Option<MatrixArg>,
}

impl SystemFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.system, self.system);
        set(&mut cfg.a, self.a);
        set(&mut cfg.b, self.b);
        set(&mut cfg.alpha, self.alpha);
        set(&mut cfg.beta, self.beta);
        set(&mut cfg.matrix, self.matrix.map(|m| m.0));
    }
}

#[derive(Debug, Args, Default)]
pub struct NumericFlags {
    /// Relative integrator tolerance [default: 1e-10]
    #[arg(long, allow_negative_numbers = true)]
    pub rtol: Option<f64>,
    /// Absolute integrator tolerance [default: 1e-12]
    #[arg(long, allow_negative_numbers = true)]
    pub atol: Option<f64>,
    /// Transient discarded before orbit detection [default: 1500 silnikov, 100 rings, 0 linear]
    #[arg(long, allow_negative_numbers = true)]
    pub transient: Option<f64>,
    /// Zero band for sign classification [default: 5e-3·max(1, max|λ|), or per case]
    #[arg(long, allow_negative_numbers = true)]
    pub zero_tol: Option<f64>,
}

impl NumericFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.rtol, self.rtol);
        set(&mut cfg.atol, self.atol);
        if self.transient.is_some() {
            cfg.transient = self.transient;
        }
        if self.zero_tol.is_some() {
            cfg.zero_tol = self.zero_tol;
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct OutputFlags {
    /// Output format [default: csv for data, text for reports]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl OutputFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        if self.format.is_some() {
            cfg.format = self.format;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Silnikov a [default: 1]
    #[arg(long = "a", allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub b_to: f64,
    /// Grid points, ends included
    #[arg(long)]
    pub steps: usize,
    /// Worker threads; rows stay ordered by b [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Seed for orbit detection [default: 0.5,0.1,0]
    #[arg(long, alias = "x0", allow_hyphen_values = true)]
    pub seed: Option<Triple>,
    #[command(flatten)]
    pub numeric: NumericFlags,
    /// Write the CSV to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrajArgs {
    #[command(flatten)]
    pub system: SystemFlags,
    /// Initial state [default: 0.5,0.1,0]
    #[arg(long, alias = "seed", allow_hyphen_values = true)]
    pub x0: Option<Triple>,
    /// Integration horizon; with --cycle, the search horizon after the transient
    #[arg(long, allow_negative_numbers = true)]
    pub t: f64,
    /// Emit one period of the attracting cycle and a JSON sidecar
    #[arg(long)]
    pub cycle: bool,
    #[command(flatten)]
    pub numeric: NumericFlags,
    /// Write the CSV to this file instead of stdout; the sidecar goes next to it
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub system: SystemFlags,
    /// Initial state [default: 0.5,0.1,0]
    #[arg(long, alias = "seed", allow_hyphen_values = true)]
    pub x0: Option<Triple>,
    /// Averaging horizon after the transient; with --cycle, the search horizon
    #[arg(long, default_value_t = 1000.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Average over one period of the detected cycle
    #[arg(long)]
    pub cycle: bool,
    #[command(flatten)]
    pub numeric: NumericFlags,
    #[command(flatten)]
    pub output: OutputFlags,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("orbex: {e}");
            e.exit_code()
        }
    }
}

fn base_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    Ok(cfg)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn dispatch(cli: &Cli) -> Result<i32, CliError> {
    let mut cfg = base_config(cli)?;
    let out_dir = cli.out_dir.as_deref();
    match &cli.command {
        Command::Case { action: CaseAction::List { output } } => {
            output.apply(&mut cfg);
            let records = list_cases();
            let mut w = sink(cfg.resolved_out(out_dir).as_deref())?;
            match cfg.format.unwrap_or(Format::Text) {
                Format::Json => output::write_json(&mut w, &output::case_listing(&records))?,
                _ => w.write_all(output::case_list_text(&records).as_bytes())?,
            }
            w.flush()?;
            Ok(0)
        }
        Command::Case {
            action: CaseAction::Run { ids, all, no_stability, le_tol, period_rel_tol, seed, numeric, output },
        } => {
            numeric.apply(&mut cfg);
            output.apply(&mut cfg);
            set(&mut cfg.seed, seed.map(|s| StateVec3(s.0)));
            if le_tol.is_some() {
                cfg.le_tol = *le_tol;
            }
            if period_rel_tol.is_some() {
                cfg.period_rel_tol = *period_rel_tol;
            }
            if *no_stability {
                cfg.stability = false;
            }
            let ids: Vec<String> = if *all { list_cases().into_iter().map(|r| r.id).collect() } else { ids.clone() };
            cmd_case_run(&cfg, &ids, out_dir)
        }
        Command::Sweep(args) => {
            args.numeric.apply(&mut cfg);
            set(&mut cfg.a, args.a);
            set(&mut cfg.jobs, args.jobs);
            set(&mut cfg.seed, args.seed.map(|s| StateVec3(s.0)));
            if args.out.is_some() {
                cfg.out = args.out.clone();
            }
            cmd_sweep(&cfg, args, out_dir)
        }
        Command::Traj(args) => {
            args.system.apply(&mut cfg);
            args.numeric.apply(&mut cfg);
            set(&mut cfg.seed, args.x0.map(|s| StateVec3(s.0)));
            if args.out.is_some() {
                cfg.out = args.out.clone();
            }
            cmd_traj(&cfg, args, out_dir)
        }
        Command::Spectrum(args) => {
            args.system.apply(&mut cfg);
            args.numeric.apply(&mut cfg);
            args.output.apply(&mut cfg);
            set(&mut cfg.seed, args.x0.map(|s| StateVec3(s.0)));
            cmd_spectrum(&cfg, args, out_dir)
        }
        Command::Config { action: ConfigAction::Show { system, seed, numeric, output, jobs } } => {
            system.apply(&mut cfg);
            numeric.apply(&mut cfg);
            output.apply(&mut cfg);
            set(&mut cfg.seed, seed.map(|s| StateVec3(s.0)));
            set(&mut cfg.jobs, *jobs);
            print!("{}", cfg.dump());
            Ok(0)
        }
    }
}

fn cmd_case_run(cfg: &RunConfig, ids: &[String], out_dir: Option<&Path>) -> Result<i32, CliError> {
    for id in ids {
        find_case(id).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let opts = RunOptions {
        tol: cfg.tolerance()?,
        le_tol: cfg.le_tol,
        period_rel_tol: cfg.period_rel_tol,
        zero_tol: cfg.zero_tol,
        transient: cfg.transient,
        seed: Some(cfg.seed),
        stability: cfg.stability,
        ..RunOptions::default()
    };
    let mut runner = CaseRunner::new();
    let reports: Vec<_> = ids
        .iter()
        .map(|id| runner.run(id, &opts))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut w = sink(cfg.resolved_out(out_dir).as_deref())?;
    match cfg.format.unwrap_or(Format::Text) {
        Format::Json if reports.len() == 1 => output::write_json(&mut w, &reports[0])?,
        Format::Json => output::write_json(&mut w, &reports)?,
        _ => {
            for r in &reports {
                w.write_all(output::case_report_text(r).as_bytes())?;
            }
        }
    }
    w.flush()?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
    if failed.is_empty() {
        Ok(0)
    } else {
        Err(CliError::Numeric(format!("{} of {} cases failed: {}", failed.len(), reports.len(), failed.join(" "))))
    }
}

/// Cells of a sweep, spread over `jobs` threads and returned in grid order.
pub fn run_sweep(a: f64, grid: &[f64], opts: &SweepOptions, jobs: usize) -> Vec<SweepRow> {
    let jobs = jobs.clamp(1, grid.len().max(1));
    if jobs == 1 {
        return grid.iter().map(|&b| sweep_cell(a, b, opts)).collect();
    }
    let mut rows: Vec<Option<SweepRow>> = vec![None; grid.len()];
    thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                scope.spawn(move || {
                    (j..grid.len()).step_by(jobs).map(|i| (i, sweep_cell(a, grid[i], opts))).collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, row) in h.join().expect("sweep worker panicked") {
                rows[i] = Some(row);
            }
        }
    });
    rows.into_iter().map(|r| r.expect("every cell is filled")).collect()
}

fn cmd_sweep(cfg: &RunConfig, args: &SweepArgs, out_dir: Option<&Path>) -> Result<i32, CliError> {
    let grid = sweep_grid(args.b_from, args.b_to, args.steps).map_err(|e| CliError::Usage(e.to_string()))?;
    if !(cfg.a > 0.0) || grid.iter().any(|b| !(*b > 0.0)) {
        return Err(CliError::Usage("sweep needs a > 0 and b > 0".into()));
    }
    let opts = SweepOptions {
        tol: cfg.tolerance()?,
        seed: cfg.seed,
        transient: cfg.transient_for(SystemKind::Silnikov),
        zero_tol: cfg.zero_tol,
    };
    let rows = run_sweep(cfg.a, &grid, &opts, cfg.jobs);
    for row in &rows {
        if let Some(e) = &row.error {
            eprintln!("orbex: b = {}: {e}", row.b);
        }
    }
    let mut w = sink(cfg.resolved_out(out_dir).as_deref())?;
    output::write_sweep(&mut w, &rows)?;
    w.flush()?;
    if rows.iter().all(|r| r.error.is_some()) {
        return Err(CliError::Numeric("every sweep cell failed".into()));
    }
    Ok(0)
}

fn default_transient(cfg: &RunConfig) -> f64 {
    match cfg.system {
        SystemKind::Linear => cfg.transient.unwrap_or(0.0),
        kind => cfg.transient_for(kind),
    }
}

fn cmd_traj(cfg: &RunConfig, args: &TrajArgs, out_dir: Option<&Path>) -> Result<i32, CliError> {
    let sys = cfg.system_spec()?;
    let tol = cfg.tolerance()?;
    if !(args.t > 0.0) {
        return Err(CliError::Usage("--t must be positive".into()));
    }
    let out = cfg.resolved_out(out_dir);
    let mut w = TrajectoryWriter::new(sink(out.as_deref())?)?;

    if args.cycle {
        let detect = DetectOptions { max_horizon: args.t, ..DetectOptions::default() };
        let transient = default_transient(cfg).max(f64::MIN_POSITIVE);
        let cyc = find_attractor_orbit_with(&sys, &cfg.seed, transient, &tol, &detect)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        for (t, s) in cyc.samples.samples() {
            w.row(t, &s)?;
        }
        w.finish()?;
        let sidecar = CycleSidecar::from(&cyc);
        match out {
            Some(path) => output::write_json(BufWriter::new(File::create(path.with_extension("json"))?), &sidecar)?,
            None => eprintln!("cycle: {}", serde_json::to_string(&sidecar)?),
        }
        return Ok(0);
    }

    let mut write_err = None;
    let result = integrate_streaming(&sys, &cfg.seed, 0.0, args.t, &tol, |t, s| {
        if write_err.is_none() {
            write_err = w.row(t, &s).err();
        }
    });
    w.finish()?;
    if let Some(e) = write_err {
        return Err(e);
    }
    match result {
        Ok(()) => Ok(0),
        Err(e) => {
            eprintln!("orbex: warning: trajectory truncated, rows up to the failure were written");
            Err(CliError::Numeric(e.to_string()))
        }
    }
}

fn cmd_spectrum(cfg: &RunConfig, args: &SpectrumArgs, out_dir: Option<&Path>) -> Result<i32, CliError> {
    let sys = cfg.system_spec()?;
    let tol = cfg.tolerance()?;
    let numeric = |e: orbex_core::Error| CliError::Numeric(e.to_string());
    if !(args.t > 0.0) {
        return Err(CliError::Usage("--t must be positive".into()));
    }
    let (spectrum, start, horizon, cycle) = if args.cycle {
        let detect = DetectOptions { max_horizon: args.t, ..DetectOptions::default() };
        let transient = default_transient(cfg).max(f64::MIN_POSITIVE);
        let cyc = find_attractor_orbit_with(&sys, &cfg.seed, transient, &tol, &detect).map_err(numeric)?;
        let s = le_periodic(&sys, &cyc, &tol).map_err(numeric)?;
        (s, cyc.anchor, cyc.period, Some((cyc.period, cyc.rotation_number)))
    } else {
        let start = relax(&sys, &cfg.seed, default_transient(cfg), &tol).map_err(numeric)?;
        let (_, ij) = integrate_augmented(&sys, &start, args.t, &tol).map_err(numeric)?;
        (ExponentSpectrum::from_integrated(&ij, SpectrumMethod::LongTime).map_err(numeric)?, start, args.t, None)
    };
    let (_, prop) = flow_with_propagator(&sys, &start, horizon, &tol).map_err(numeric)?;
    let le_svd = le_finite_time_svd(&prop).map_err(numeric)?;
    // finite where the propagator product under- or overflows
    let le_qr = le_qr(&sys, &start, horizon, &tol).map_err(numeric)?;
    let zero_tol = cfg.zero_tol.unwrap_or_else(|| default_zero_tol(&spectrum.le_j));
    let report = SpectrumReport {
        system: sys.name().to_string(),
        horizon,
        period: cycle.map(|c| c.0),
        rotation_number: cycle.map(|c| c.1),
        le_j: spectrum.le_j,
        le_o: spectrum.le_o,
        le_svd,
        le_qr,
        sign_class: classify_signs(&spectrum.le_j, zero_tol).distribution.label().to_string(),
        ref1_class: classify_ref1(&spectrum.le_j, zero_tol).label().to_string(),
    };
    let mut w = sink(cfg.resolved_out(out_dir).as_deref())?;
    match cfg.format.unwrap_or(Format::Text) {
        Format::Json => output::write_json(&mut w, &report)?,
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(["route", "le1", "le2", "le3"])?;
            for (name, v) in
                [("le_j", report.le_j), ("le_o", report.le_o), ("le_svd", report.le_svd), ("le_qr", report.le_qr)]
            {
                c.write_record([name.to_string(), v[0].to_string(), v[1].to_string(), v[2].to_string()])?;
            }
            c.flush()?;
        }
        Format::Text => w.write_all(report.text().as_bytes())?,
    }
    w.flush()?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_values_parse() {
        let cli = Cli::try_parse_from([
            "orbex", "traj", "--system", "tworing", "--alpha", "-0.5", "--x0", "-1,0,0", "--t", "1",
        ])
        .unwrap();
        let Command::Traj(args) = cli.command else { panic!() };
        assert_eq!(args.system.alpha, Some(-0.5));
        assert_eq!(args.x0, Some(Triple([-1.0, 0.0, 0.0])));
    }

    #[test]
    fn parallel_sweep_keeps_grid_order() {
        let grid = [0.8, 0.6, 0.5];
        let opts = SweepOptions { transient: 300.0, ..SweepOptions::default() };
        let serial = run_sweep(1.0, &grid, &opts, 1);
        let parallel = run_sweep(1.0, &grid, &opts, 3);
        assert_eq!(serial, parallel);
    }
}
