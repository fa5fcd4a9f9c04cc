use serde::Serialize;
use sqclock_core::atom::{ramsey_probability, slow_quadrature_outlasts};
use sqclock_core::clock::{run_clock, run_comparison, ClockConfig, DetectionMode};
use sqclock_core::detection::{photon_number, snr_coherent, snr_squeezed_from, squeezing_spectrum};
use sqclock_core::record::FrequencyRecord;
use sqclock_core::stability::{allan_deviation, fit_slope, octave_taus, predicted_sigma, ClockLine, Omission, SlopeFit};
use std::path::{Path, PathBuf};

use crate::config::{grid, ExperimentFile, SweepParameter};
use crate::error::CliError;
use crate::output::{to_pretty, Format, OutputDir, Table};

pub struct Context<'a> {
    pub file: &'a ExperimentFile,
    pub config_path: &'a Path,
    pub format: Format,
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::runtime(e.to_string())
}

fn model_config(e: impl std::fmt::Display) -> CliError {
    CliError::config(e.to_string())
}

/// Transition probability over the `[fringe]` detuning grid.
pub fn cmd_fringe(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    let f = ctx.file;
    let section = ExperimentFile::section(&f.fringe, "fringe")?;
    let atom = ExperimentFile::section(&f.atom, "atom")?;
    let ramsey = ExperimentFile::section(&f.ramsey, "ramsey")?;
    let reservoir = f.reservoir();
    atom.validate().map_err(model_config)?;
    ramsey.validate().map_err(model_config)?;
    reservoir.validate().map_err(model_config)?;
    let mut table = Table::new(&["delta_rad_s", "probability"]);
    for delta in grid(section.delta_min, section.delta_max, section.points, "fringe")? {
        let p = ramsey_probability(ramsey, atom, delta, &reservoir).map_err(runtime)?;
        table.push(vec![delta, p]);
    }
    out.write_table("fringe", &table, ctx.format)?;
    Ok(())
}

/// Squeezing spectrum over the `[spectrum]` grid of Ω₀ (outer) and φ₋ (inner).
pub fn cmd_spectrum(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    let f = ctx.file;
    let section = ExperimentFile::section(&f.spectrum, "spectrum")?;
    let detection = ExperimentFile::section(&f.detection, "detection")?;
    detection.validate().map_err(model_config)?;
    let flux = f.detection_flux(section.atom_flux)?;
    let omegas = grid(section.omega_min, section.omega_max, section.omega_points, "spectrum.omega")?;
    let phis = grid(section.phi_min, section.phi_max, section.phi_points, "spectrum.phi")?;
    let mut table = Table::new(&["omega_0_rad_s", "phi_minus", "s"]);
    for &omega_0 in &omegas {
        for &phi_minus in &phis {
            let cfg = sqclock_core::DetectionConfig { omega_0, phi_minus, ..*detection };
            let s = squeezing_spectrum(&cfg, flux).map_err(model_config)?;
            table.push(vec![omega_0, phi_minus, s]);
        }
    }
    out.write_table("spectrum", &table, ctx.format)?;
    Ok(())
}

/// Coherent vs squeezed S/N over a φ₋ or ξ sweep. Points where `1 + ξS <= 0`
/// are kept with `valid = 0` and NaN S/N.
pub fn cmd_snr(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    let f = ctx.file;
    let section = ExperimentFile::section(&f.snr, "snr")?;
    let detection = ExperimentFile::section(&f.detection, "detection")?;
    let budget = ExperimentFile::section(&f.budget, "budget")?;
    let response = ExperimentFile::section(&f.response, "response")?;
    detection.validate().map_err(model_config)?;
    let flux = f.detection_flux(section.atom_flux)?;
    let photons = photon_number(budget).map_err(model_config)?;
    let vac = snr_coherent(budget, response).map_err(model_config)?;
    let mut table = Table::new(&["param", "xi_s", "snr_vac", "snr_sq", "ratio", "valid"]);
    for value in grid(section.min, section.max, section.points, "snr")? {
        let cfg = match section.sweep {
            SweepParameter::PhiMinus => sqclock_core::DetectionConfig { phi_minus: value, ..*detection },
            SweepParameter::Xi => sqclock_core::DetectionConfig { xi: value, ..*detection },
        };
        let xi_s = cfg.xi * squeezing_spectrum(&cfg, flux).map_err(model_config)?;
        let row = match snr_squeezed_from(photons, response.delta_sq, xi_s) {
            Ok(sq) => vec![value, xi_s, vac, sq, sq / vac, 1.0],
            Err(_) => vec![value, xi_s, vac, f64::NAN, f64::NAN, 0.0],
        };
        table.push(row);
    }
    out.write_table("snr", &table, ctx.format)?;
    Ok(())
}

#[derive(Serialize)]
struct RecordSidecar<'a> {
    config: &'a ClockConfig,
    config_hash: String,
    seed: u64,
    n_cycles: usize,
    tau0_s: f64,
    samples: usize,
    skipped_pairs: u64,
    noise_scale: f64,
    projection_snr: f64,
    /// Whether `1/γ_slow` of the Ramsey reservoir exceeds the cycle time.
    slow_quadrature_outlasts_cycle: bool,
}

fn record_table(record: &FrequencyRecord) -> Table {
    let mut t = Table::new(&["index", "time_s", "y_fractional"]);
    for (i, y) in record.samples.iter().enumerate() {
        t.push(vec![i as f64, i as f64 * record.tau0, *y]);
    }
    t
}

fn write_record(
    out: &mut OutputDir,
    stem: &str,
    config: &ClockConfig,
    n_cycles: usize,
    record: &FrequencyRecord,
    format: Format,
) -> Result<(), CliError> {
    match format {
        Format::Csv => out.write(&format!("{stem}.csv"), &record.to_csv())?,
        Format::Json => out.write_table(stem, &record_table(record), Format::Json)?,
    };
    let sidecar = RecordSidecar {
        config,
        config_hash: format!("{:016x}", record.metadata.config_hash),
        seed: record.metadata.seed,
        n_cycles,
        tau0_s: record.tau0,
        samples: record.len(),
        skipped_pairs: record.metadata.skipped_pairs,
        noise_scale: config.noise_scale().map_err(runtime)?,
        projection_snr: config.projection_snr().map_err(runtime)?,
        slow_quadrature_outlasts_cycle: slow_quadrature_outlasts(&config.reservoir, config.atom.gamma, config.cycle_time)
            .map_err(runtime)?,
    };
    out.write(&format!("{stem}.meta.json"), &to_pretty(&sidecar))?;
    Ok(())
}

type AllanInput = (String, String, FrequencyRecord, Option<(ClockLine, f64)>);
type Labelled = Vec<(String, ClockConfig, FrequencyRecord)>;

/// Labelled records produced by the `[clock]` section.
fn simulate(file: &ExperimentFile) -> Result<(usize, Labelled), CliError> {
    let config = file.clock_config()?;
    let n_cycles = ExperimentFile::section(&file.clock, "clock")?.n_cycles;
    let compare = file.clock.as_ref().is_some_and(|c| c.compare);
    let runs = if compare {
        let cmp = run_comparison(&config, n_cycles).map_err(runtime)?;
        vec![
            ("coherent".to_string(), config.with_mode(DetectionMode::Coherent), cmp.coherent),
            ("squeezed".to_string(), config.with_mode(DetectionMode::Squeezed), cmp.squeezed),
        ]
    } else {
        let record = run_clock(&config, n_cycles).map_err(runtime)?;
        vec![(String::new(), config, record)]
    };
    Ok((n_cycles, runs))
}

fn stem(base: &str, label: &str) -> String {
    if label.is_empty() {
        base.to_string()
    } else {
        format!("{base}_{label}")
    }
}

/// Closed-loop simulation; writes one record (or a coherent/squeezed pair).
pub fn cmd_clock(ctx: &Context, out: &mut OutputDir) -> Result<(), CliError> {
    let (n_cycles, runs) = simulate(ctx.file)?;
    for (label, config, record) in &runs {
        write_record(out, &stem("record", label), config, n_cycles, record, ctx.format)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AllanSummary {
    source: String,
    tau0_s: f64,
    samples: usize,
    fit: Option<SlopeFit>,
    fit_error: Option<String>,
    fit_min_s: Option<f64>,
    fit_max_s: Option<f64>,
    snr: Option<f64>,
    /// Mean of σ_sim / σ_predicted over the fitted points.
    mean_ratio_to_predicted: Option<f64>,
    omitted: Vec<Omission>,
}

fn read_record(path: &Path) -> Result<FrequencyRecord, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read record {}: {e}", path.display())))?;
    FrequencyRecord::from_csv(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Allan deviation of a stored record or of a fresh simulation, with a
/// power-law fit and the S/N-limited prediction as an overlay column.
pub fn cmd_allan(ctx: &Context, out: &mut OutputDir, record_flag: Option<&Path>) -> Result<(), CliError> {
    let f = ctx.file;
    let section = f.allan.clone().unwrap_or_default();
    let record_path: Option<PathBuf> = record_flag.map(Path::to_path_buf).or_else(|| {
        section.record.as_ref().map(|p| {
            if p.is_absolute() {
                p.clone()
            } else {
                ctx.config_path.parent().unwrap_or(Path::new(".")).join(p)
            }
        })
    });

    let line_from_file = f.line.or_else(|| f.ramsey.map(|r| ClockLine::cs_ramsey(r.free_time)));
    // (label, source, record, prediction overlay)
    let mut inputs: Vec<AllanInput> = Vec::new();
    if let Some(path) = record_path {
        let record = read_record(&path)?;
        let overlay = match (line_from_file, section.snr) {
            (Some(line), Some(snr)) => Some((line, snr)),
            _ => None,
        };
        inputs.push((String::new(), path.display().to_string(), record, overlay));
    } else {
        let (_, runs) = simulate(f)?;
        for (label, config, record) in runs {
            let snr = match section.snr {
                Some(s) => s,
                None => config.projection_snr().map_err(runtime)?,
            };
            let overlay = snr.is_finite().then_some((config.line, snr));
            let source = if label.is_empty() { "simulation".to_string() } else { format!("simulation:{label}") };
            inputs.push((label, source, record, overlay));
        }
    }

    for (label, source, record, overlay) in inputs {
        let taus = section.taus.clone().unwrap_or_else(|| octave_taus(record.tau0, record.len()));
        let curve = allan_deviation(&record, &taus);
        let fit_range = (section.fit_min.unwrap_or(0.0), section.fit_max.unwrap_or(f64::INFINITY));
        let (fit, fit_error) = match fit_slope(&curve, fit_range) {
            Ok(fit) => (Some(fit), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let mut table = if overlay.is_some() {
            Table::new(&["tau_s", "sigma", "n_pairs", "predicted_sigma"])
        } else {
            Table::new(&["tau_s", "sigma", "n_pairs"])
        };
        let mut ratios = Vec::new();
        for i in 0..curve.len() {
            let (tau, sigma) = (curve.taus[i], curve.sigmas[i]);
            let mut row = vec![tau, sigma, curve.n_pairs[i] as f64];
            if let Some((line, snr)) = overlay {
                let predicted = predicted_sigma(&line, snr, tau).map_err(model_config)?;
                if tau >= fit_range.0 && tau <= fit_range.1 {
                    ratios.push(sigma / predicted);
                }
                row.push(predicted);
            }
            table.push(row);
        }
        let summary = AllanSummary {
            source,
            tau0_s: record.tau0,
            samples: record.len(),
            fit,
            fit_error,
            fit_min_s: section.fit_min,
            fit_max_s: section.fit_max,
            snr: overlay.map(|o| o.1),
            mean_ratio_to_predicted: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
            omitted: curve.omitted.clone(),
        };
        out.write_table(&stem("allan", &label), &table, ctx.format)?;
        out.write(&format!("{}.json", stem("allan_fit", &label)), &to_pretty(&summary))?;
        if let Some(fit) = fit {
            println!("{}: exponent {:.4}, σ(1 s) {:.4e}", stem("allan", &label), fit.exponent, fit.level);
        }
    }
    Ok(())
}
