//! Command-line surface: argument model, scenario loading, command
//! execution and output files.

pub mod golden;
pub mod manifest;
pub mod report;
pub mod scenario;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::electrostatics::{c_eff, delta_ex_by_differencing, InterfaceModel};
use crate::error::{Error, Result};
use crate::feasibility::{
    lockin_demodulate, modulated_shot_stream, shot_budget, snr, sweep, throughput, ReferenceSpec, ShotStream,
    StreamSpec,
};
use crate::noise_model::{
    differential_psd, loglog_slope, overlapping_allan_deviation, read_timeseries_csv, synthesize_timeseries,
    welch_psd, TimeSeries,
};
use crate::protocol_sim::{estimate_phase, sample_shots, thermal_readout, Outcome};
use crate::transduction::{contrast, gain};

use manifest::RunManifest;
use report::{Cell, Table};
use scenario::{parse_axis, ScenarioFile};

#[derive(Debug, Parser)]
#[command(name = "iongrad", version, about = "Two-ion electric-field gradiometer feasibility simulator")]
pub struct Cli {
    /// Scenario file (TOML); the bundled published operating point when omitted
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Seed for every random draw
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for data files and the run manifest
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// section.key=VALUE applied on top of the scenario (repeatable)
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Console output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Differential field of the binding dipole
    Field,
    /// Integration times, SNR, throughput and the published-value report
    Feasibility,
    /// Shot-level Monte Carlo of the interrogation protocol
    Simulate {
        /// number of shots (overrides sdf.shots)
        #[arg(long)]
        shots: Option<usize>,
    },
    /// Noise analyses
    Noise {
        #[command(subcommand)]
        command: NoiseCommand,
    },
    /// Parameter sweep over scenario axes
    Sweep {
        /// key=v1,v2,... (repeatable; replaces the scenario's axes)
        #[arg(long = "axis", value_name = "KEY=V1,V2,...")]
        axes: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum NoiseCommand {
    /// Model PSD, or the Welch PSD of a recorded series
    Psd {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Synthesize a differential-field time series
    Synth,
    /// Overlapping Allan deviation of a recorded or synthesized series
    Allan {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Lock-in demodulation of a recorded or synthesized shot stream
    Demod {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

/// Tables for the console and named data files.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub console: Vec<Table>,
    pub data: Vec<(String, Table)>,
}

pub fn load_scenario(path: Option<&Path>, overrides: &[String]) -> Result<ScenarioFile> {
    let base = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
            ScenarioFile::parse(&text)?
        }
        None => ScenarioFile::published(),
    };
    base.with_overrides(overrides)
}

/// Execute one invocation, writing console output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let scenario = load_scenario(cli.scenario.as_deref(), &cli.overrides)?;
    let (name, output) = match &cli.command {
        Command::Field => ("field", cmd_field(&scenario)?),
        Command::Feasibility => ("feasibility", cmd_feasibility(&scenario)?),
        Command::Simulate { shots } => ("simulate", cmd_simulate(&scenario, cli.seed, *shots)?),
        Command::Noise { command } => match command {
            NoiseCommand::Psd { input } => ("noise-psd", cmd_noise_psd(&scenario, input.as_deref())?),
            NoiseCommand::Synth => ("noise-synth", cmd_noise_synth(&scenario, cli.seed)?),
            NoiseCommand::Allan { input } => ("noise-allan", cmd_noise_allan(&scenario, cli.seed, input.as_deref())?),
            NoiseCommand::Demod { input } => ("noise-demod", cmd_noise_demod(&scenario, cli.seed, input.as_deref())?),
        },
        Command::Sweep { axes } => ("sweep", cmd_sweep(&scenario, axes)?),
    };

    match cli.format {
        Format::Table => {
            let blocks: Vec<String> = output.console.iter().map(Table::render).collect();
            write!(stdout, "{}", blocks.join("\n"))?;
        }
        Format::Csv => {
            let blocks: Vec<String> = output.data.iter().map(|(_, t)| t.to_csv_string()).collect();
            write!(stdout, "{}", blocks.join("\n"))?;
        }
    }

    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (file, table) in &output.data {
            fs::write(dir.join(file), table.to_csv_string())?;
            files.push(file.clone());
        }
        let manifest = RunManifest::new(name, &scenario, cli.seed, files);
        fs::write(dir.join(manifest::MANIFEST_FILE), manifest.render())?;
    }
    Ok(())
}

fn kv_table(rows: Vec<(&str, Cell, &str, String)>) -> Table {
    let mut t = Table::new(["quantity", "value", "unit", "note"]);
    for (q, v, u, n) in rows {
        t.push(vec![q.into(), v, u.into(), n.into()]);
    }
    t
}

fn published_note(value: f64, reference: f64, tolerance: f64) -> String {
    let dev = value / reference - 1.0;
    if dev.abs() <= tolerance {
        format!("matches published value {reference:e} ({:+.1}%)", 100.0 * dev)
    } else {
        format!("deviates from published value {reference:e} ({:+.1}%)", 100.0 * dev)
    }
}

pub fn cmd_field(scenario: &ScenarioFile) -> Result<CommandOutput> {
    let f = scenario.feasibility()?;
    let g = &f.geometry;
    let mut vacuum = f.clone();
    vacuum.interface = InterfaceModel::Vacuum;
    let max_vacuum = vacuum.delta_ex_max()?;
    let differencing = delta_ex_by_differencing(g, &f.dipole)?;
    let max = f.delta_ex_max()?;
    let rms = f.signal_rms()?;
    let h_um = g.height() * 1e6;
    let rms_note = if (h_um - 10.0).abs() < 1e-9 {
        published_note(rms, 1.55e-4, 0.15)
    } else if (h_um - 30.0).abs() < 1e-9 {
        published_note(rms, 2.0e-6, 0.20)
    } else {
        String::new()
    };
    let table = kv_table(vec![
        ("h", g.height().into(), "m", String::new()),
        ("d", g.baseline().into(), "m", String::new()),
        ("d_over_h", g.aspect().into(), "", String::new()),
        ("delta_p", f.dipole.magnitude_debye().into(), "D", String::new()),
        ("interface", f.interface.name().into(), "", String::new()),
        ("eta", f.interface.eta().into(), "", String::new()),
        ("c_eff", c_eff(g.aspect()).into(), "", String::new()),
        (
            "delta_ex_max_vacuum",
            max_vacuum.into(),
            "V/m",
            format!("differencing oracle {differencing:e}"),
        ),
        ("delta_ex_max", max.into(), "V/m", String::new()),
        ("signal_rms", rms.into(), "V/m", rms_note),
    ]);
    Ok(CommandOutput {
        console: vec![table.clone()],
        data: vec![("field.csv".into(), table)],
    })
}

pub fn cmd_feasibility(scenario: &ScenarioFile) -> Result<CommandOutput> {
    let f = scenario.feasibility()?;
    let eval = f.evaluate()?;
    let t_tot = scenario.plan.t_tot_s;
    let budget = shot_budget(&f.plan, t_tot)?;
    let tp = throughput(&f, &scenario.throughput_budget()?);
    let mut rows = vec![
        ("mode", Cell::Text(format!("{:?}", f.budget.mode).to_lowercase()), "", String::new()),
        ("signal_rms", eval.signal_rms.into(), "V/m", String::new()),
        ("s_sens", eval.s_sens.into(), "V/m/rtHz", String::new()),
        ("s_sample", eval.s_sample.into(), "V/m/rtHz", format!("at {} Hz", report::sig3(eval.evaluation_frequency))),
        ("s_tot", eval.s_tot.into(), "V/m/rtHz", String::new()),
        ("slowdown", eval.slowdown.factor.into(), "", String::new()),
        ("gate_pass", eval.slowdown.gate_pass.into(), "", String::new()),
        ("duty_cycle", f.plan.duty_cycle().into(), "", String::new()),
        ("snr_1s", eval.snr_1s.into(), "", String::new()),
        ("snr_t_tot", snr(&f, t_tot)?.value.into(), "", format!("T_tot = {t_tot} s")),
        ("shots_t_tot", budget.shots.into(), "", budget.warning.clone().unwrap_or_default()),
        ("live_time_t_tot", budget.live_time.into(), "s", String::new()),
        ("snr_target", f.snr_target.into(), "", String::new()),
    ];
    match tp {
        Ok(tp) => {
            rows.push(("integration_time", tp.integration_time.into(), "s", String::new()));
            rows.push(("site_time", tp.site_time.into(), "s", String::new()));
            rows.push(("sites_per_day", tp.sites_per_day.into(), "1/day", String::new()));
        }
        Err(Error::Infeasible(m)) => rows.push(("integration_time", "inf".into(), "s", m)),
        Err(e) => return Err(e),
    }
    let table = kv_table(rows);
    let gold = golden::golden_table(&golden::golden_rows(&f)?);
    Ok(CommandOutput {
        console: vec![table.clone(), gold.clone()],
        data: vec![("feasibility.csv".into(), table), ("golden.csv".into(), gold)],
    })
}

pub fn cmd_simulate(scenario: &ScenarioFile, seed: u64, shots: Option<usize>) -> Result<CommandOutput> {
    let shots = shots.unwrap_or(scenario.sdf.shots);
    if shots < 1 {
        return Err(Error::Usage("simulate needs at least one shot".into()));
    }
    let crystal = scenario.crystal()?;
    let seq = scenario.sdf_sequence()?;
    let delta_e = match scenario.sdf.delta_e_v_per_m {
        Some(v) => v,
        None => scenario.feasibility()?.delta_ex_max()?,
    };
    let bias = scenario.sdf.bias_rad;
    let g = gain(&seq, &crystal)?;
    let phi_analytic = g.value() * delta_e;
    let readout = thermal_readout(&seq, &crystal, delta_e, scenario.sdf.n_max, bias, &scenario.evolve_options())?;
    let phi_numeric = readout.overlap.arg();
    let gain_numeric = if delta_e != 0.0 { phi_numeric / delta_e } else { f64::NAN };
    let record = sample_shots(readout.p_bright, shots, seed);
    let bright = record.iter().filter(|s| s.outcome == Outcome::Bright).count();
    let (phi_hat, std_error, status) = match estimate_phase(&record, bias) {
        Ok(e) => (e.phi_hat, e.std_error, "ok".to_string()),
        Err(Error::UnidentifiablePhase(m)) => (f64::NAN, f64::NAN, format!("unidentifiable: {m}")),
        Err(e) => return Err(e),
    };

    let mut summary = Table::new([
        "delta_e_v_per_m",
        "gain_analytic_rad_per_v_per_m",
        "gain_numeric_rad_per_v_per_m",
        "gain_relative_deviation",
        "phi_analytic_rad",
        "phi_numeric_rad",
        "visibility",
        "contrast_analytic",
        "p_bright",
        "shots",
        "bright",
        "phi_hat_rad",
        "std_error_rad",
        "n_max",
        "steps",
        "status",
    ]);
    summary.push(vec![
        delta_e.into(),
        g.value().into(),
        gain_numeric.into(),
        (gain_numeric / g.value() - 1.0).into(),
        phi_analytic.into(),
        phi_numeric.into(),
        readout.overlap.norm().into(),
        contrast(&seq)?.into(),
        readout.p_bright.into(),
        shots.into(),
        bright.into(),
        phi_hat.into(),
        std_error.into(),
        readout.n_max.into(),
        readout.steps.into(),
        status.into(),
    ]);
    let mut shot_table = Table::new(["shot", "outcome"]);
    for (i, s) in record.iter().enumerate() {
        let o = match s.outcome {
            Outcome::Bright => "bright",
            Outcome::Dark => "dark",
        };
        shot_table.push(vec![i.into(), o.into()]);
    }
    let console = transpose(&summary);
    Ok(CommandOutput {
        console: vec![console],
        data: vec![("simulate.csv".into(), summary), ("shots.csv".into(), shot_table)],
    })
}

/// One-row table as quantity/value pairs.
fn transpose(t: &Table) -> Table {
    let mut out = Table::new(["quantity", "value"]);
    if let Some(row) = t.rows.first() {
        for (h, c) in t.headers.iter().zip(row) {
            out.push(vec![h.clone().into(), c.clone()]);
        }
    }
    out
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).round() as usize;
    (0..=n).map(|i| lo * 10f64.powf(i as f64 / per_decade as f64)).collect()
}

fn read_series(path: &Path) -> Result<TimeSeries> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_timeseries_csv(std::io::BufReader::new(file))
}

fn series_table(ts: &TimeSeries) -> Table {
    let mut t = Table::new(crate::noise_model::TIMESERIES_HEADER);
    for (k, v) in ts.values().iter().enumerate() {
        t.push(vec![ts.time(k).into(), (*v).into()]);
    }
    t
}

/// Central two decades of a Welch estimate (or what is available of them).
fn central_band(freqs: &[f64]) -> (f64, f64) {
    let f_lo = freqs.get(1).copied().unwrap_or(0.0);
    let f_hi = freqs.last().copied().unwrap_or(0.0);
    let centre = (f_lo * f_hi).sqrt();
    ((centre / 10.0).max(f_lo), (centre * 10.0).min(f_hi * 0.8))
}

fn welch_summary(ts: &TimeSeries, segment: usize) -> Result<(Table, f64)> {
    let est = welch_psd(ts.values(), ts.sample_rate(), segment.min(ts.len()))?;
    let (lo, hi) = central_band(&est.frequencies);
    let (x, y): (Vec<f64>, Vec<f64>) = est
        .frequencies
        .iter()
        .zip(&est.psd)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(f, p)| (*f, *p))
        .unzip();
    let slope = loglog_slope(&x, &y)?;
    let mut t = Table::new(["frequency_hz", "psd_v2_per_m2_hz"]);
    for (f, p) in est.frequencies.iter().zip(&est.psd).skip(1) {
        t.push(vec![(*f).into(), (*p).into()]);
    }
    Ok((t, slope))
}

pub fn cmd_noise_psd(scenario: &ScenarioFile, input: Option<&Path>) -> Result<CommandOutput> {
    if let Some(path) = input {
        let ts = read_series(path)?;
        let (table, slope) = welch_summary(&ts, scenario.noise.welch_segment)?;
        let summary = kv_table(vec![
            ("samples", ts.len().into(), "", String::new()),
            ("sample_rate", ts.sample_rate().into(), "Hz", String::new()),
            ("fitted_slope", slope.into(), "", "central two decades".into()),
        ]);
        return Ok(CommandOutput {
            console: vec![summary],
            data: vec![("psd.csv".into(), table)],
        });
    }

    let f = scenario.feasibility()?;
    let sample = &f.budget.sample;
    let d = f.geometry.baseline();
    let mut table = Table::new([
        "frequency_hz",
        "single_point_psd_v2_per_m2_hz",
        "differential_psd_v2_per_m2_hz",
        "differential_asd_v_per_m_rthz",
        "total_asd_v_per_m_rthz",
    ]);
    for freq in log_grid(1e-2, 1e2, 10) {
        let diff = differential_psd(sample, freq, d)?;
        table.push(vec![
            freq.into(),
            sample.single_point_psd(freq).into(),
            diff.into(),
            diff.sqrt().into(),
            f.budget.sensor_asd().hypot(diff.sqrt()).into(),
        ]);
    }
    let fe = f.evaluation_frequency();
    let single = sample.single_point_psd(fe).sqrt();
    let diff = f.sample_asd()?;
    let slow = f.slowdown()?;
    let summary = kv_table(vec![
        ("evaluation_frequency", fe.into(), "Hz", String::new()),
        ("correlation", sample.correlation(d).into(), "", format!("{:?}", sample.shape()).to_lowercase()),
        ("single_point_asd", single.into(), "V/m/rtHz", String::new()),
        ("differential_asd", diff.into(), "V/m/rtHz", String::new()),
        ("differential_over_single", (diff / single).into(), "", "sqrt(2) when uncorrelated".into()),
        ("s_sens", slow.s_sens.into(), "V/m/rtHz", String::new()),
        ("s_tot", slow.s_sens.hypot(slow.s_sample).into(), "V/m/rtHz", String::new()),
        ("gate_threshold", f.budget.gate_threshold().into(), "V/m/rtHz", String::new()),
        ("slowdown", slow.factor.into(), "", String::new()),
        ("gate_pass", slow.gate_pass.into(), "", String::new()),
    ]);
    Ok(CommandOutput {
        console: vec![summary],
        data: vec![("psd.csv".into(), table)],
    })
}

fn synthesize(scenario: &ScenarioFile, seed: u64) -> Result<TimeSeries> {
    let f = scenario.feasibility()?;
    synthesize_timeseries(
        &f.budget.sample,
        f.geometry.baseline(),
        scenario.noise.duration_s,
        scenario.noise.sample_rate_hz,
        seed,
    )
}

pub fn cmd_noise_synth(scenario: &ScenarioFile, seed: u64) -> Result<CommandOutput> {
    let ts = synthesize(scenario, seed)?;
    let rms = (ts.values().iter().map(|v| v * v).sum::<f64>() / ts.len() as f64).sqrt();
    let mut rows = vec![
        ("samples", ts.len().into(), "", String::new()),
        ("duration", ts.duration().into(), "s", String::new()),
        ("rms", rms.into(), "V/m", String::new()),
    ];
    if rms > 0.0 {
        let (_, slope) = welch_summary(&ts, scenario.noise.welch_segment)?;
        rows.push(("fitted_psd_slope", slope.into(), "", format!("target -{}", scenario.sample.alpha)));
    }
    Ok(CommandOutput {
        console: vec![kv_table(rows)],
        data: vec![("timeseries.csv".into(), series_table(&ts))],
    })
}

pub fn cmd_noise_allan(scenario: &ScenarioFile, seed: u64, input: Option<&Path>) -> Result<CommandOutput> {
    let ts = match input {
        Some(p) => read_series(p)?,
        None => synthesize(scenario, seed)?,
    };
    let points = overlapping_allan_deviation(ts.values(), ts.sample_rate(), &scenario.noise.allan_taus_s)?;
    let mut table = Table::new(["tau_s", "m", "allan_deviation_v_per_m"]);
    for p in &points {
        table.push(vec![p.tau.into(), p.m.into(), p.deviation.into()]);
    }
    let taus: Vec<f64> = points.iter().map(|p| p.tau).collect();
    let devs: Vec<f64> = points.iter().map(|p| p.deviation).collect();
    let slope = match loglog_slope(&taus, &devs) {
        Ok(s) => Cell::Num(s),
        Err(_) => Cell::Text("n/a".into()),
    };
    let summary = kv_table(vec![
        ("samples", ts.len().into(), "", String::new()),
        ("fitted_slope", slope, "", "-0.5 for white noise".into()),
    ]);
    Ok(CommandOutput {
        console: vec![summary, table.clone()],
        data: vec![("allan.csv".into(), table)],
    })
}

pub fn cmd_noise_demod(scenario: &ScenarioFile, seed: u64, input: Option<&Path>) -> Result<CommandOutput> {
    let f = scenario.feasibility()?;
    let n = &scenario.noise;
    let stream = match input {
        Some(p) => {
            let ts = read_series(p)?;
            ShotStream {
                times: (0..ts.len()).map(|k| ts.time(k)).collect(),
                values: ts.values().to_vec(),
            }
        }
        None => modulated_shot_stream(&StreamSpec {
            amplitude: n.demod_tone_v_per_m,
            f0: scenario.sensor.f0_hz,
            shot_rate: n.sample_rate_hz,
            duration: n.duration_s,
            offset: n.demod_offset_v_per_m,
            phase_cycling: n.phase_cycling,
            sensor_asd: f.budget.sensor_asd(),
            sample: Some((f.budget.sample, f.geometry.baseline())),
            seed,
        })?,
    };
    let reference = ReferenceSpec {
        f0: scenario.sensor.f0_hz,
        phase: 0.0,
        shape: scenario.reference_shape(),
        phase_cycling: n.phase_cycling,
        pattern: None,
    };
    let est = lockin_demodulate(&stream, &reference)?;
    let mut table = Table::new(["estimate", "amplitude", "std_error", "snr", "cycles", "shots", "reference_gain"]);
    table.push(vec![
        est.estimate.into(),
        est.amplitude.into(),
        est.std_error.into(),
        est.snr.into(),
        est.cycles.into(),
        est.shots.into(),
        reference.shape.gain().into(),
    ]);
    Ok(CommandOutput {
        console: vec![transpose(&table)],
        data: vec![("demod.csv".into(), table)],
    })
}

pub fn cmd_sweep(scenario: &ScenarioFile, axes: &[String]) -> Result<CommandOutput> {
    let mut scenario = scenario.clone();
    if !axes.is_empty() {
        scenario.sweep.axes = axes.iter().map(|a| parse_axis(a)).collect::<Result<_>>()?;
    }
    if scenario.sweep.axes.is_empty() {
        return Err(Error::Usage("sweep needs at least one axis (--axis KEY=V1,V2,... or [[sweep.axes]])".into()));
    }
    let grids = scenario.sweep_grids()?;
    let f = scenario.feasibility()?;
    let rows = sweep(&f, &grids, &scenario.sweep_options())?;
    let mut headers: Vec<String> = grids.iter().map(|g| g.axis.key().to_string()).collect();
    headers.extend(
        [
            "delta_ex_max_v_per_m",
            "signal_rms_v_per_m",
            "s_tot_v_per_m_rthz",
            "snr_1s",
            "tau_s",
            "slowdown",
            "gate_pass",
        ]
        .map(String::from),
    );
    let mut table = Table::new(headers);
    for r in rows {
        let mut cells: Vec<Cell> = r.coordinates.iter().map(|&v| v.into()).collect();
        let e = r.evaluation;
        cells.extend([
            e.delta_ex_max.into(),
            e.signal_rms.into(),
            e.s_tot.into(),
            e.snr_1s.into(),
            e.integration_time.unwrap_or(f64::INFINITY).into(),
            e.slowdown.factor.into(),
            e.slowdown.gate_pass.into(),
        ]);
        table.push(cells);
    }
    Ok(CommandOutput {
        console: vec![table.clone()],
        data: vec![("sweep.csv".into(), table)],
    })
}
