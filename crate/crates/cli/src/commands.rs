//! The six CLI commands, each producing a text document (CSV or JSON)
//! and, for the series commands, an optional SVG chart.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cohmeter::{
    dark_search, four_setting_protocol, phase_scan, propagate_liouville_trajectory,
    propagate_tdse_trajectory, pulses_for_setting, reconstruct, wrap_angle, DensityMatrix3,
    FluorescenceRecord, MeasurementSetting, ProbeConfig, ProbeError, PulseEnvelope,
    ReconstructionResult, TomographyError,
};
use serde::Serialize;

use crate::config::{FileConfig, NoiseSection};
use crate::output::{csv_series, line_chart_svg, Series};
use crate::CliError;

pub struct CommandOutput {
    pub text: String,
    pub plot: Option<String>,
}

impl CommandOutput {
    fn text_only(text: String) -> Self {
        Self { text, plot: None }
    }
}

fn map_probe(e: ProbeError) -> CliError {
    match e {
        ProbeError::Propagation(inner) => CliError::Numerical(inner.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

fn map_tomography(e: TomographyError) -> CliError {
    match e {
        TomographyError::Probe(inner) => map_probe(inner),
        other => CliError::Config(other.to_string()),
    }
}

fn json_doc<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    text
}

/// Population time series of the configured state under one pulse pair.
pub fn cmd_simulate(cfg: &FileConfig, want_plot: bool) -> Result<CommandOutput, CliError> {
    let opts = cfg.command.simulate;
    if opts.samples < 2 {
        return Err(CliError::Config(format!(
            "command.simulate.samples must be at least 2, got {}",
            opts.samples
        )));
    }
    if cfg.probe.rms_peak < 0.0 {
        return Err(CliError::Config(
            "probe.rms_peak must be nonnegative".into(),
        ));
    }
    let setting = MeasurementSetting::new(opts.theta, opts.beta)
        .map_err(|e| CliError::Config(format!("command.simulate: {e}")))?;
    let envelope: PulseEnvelope = cfg.envelope()?;
    let integrator = cfg.integrator();
    let pulses = pulses_for_setting(&setting, cfg.probe.rms_peak, cfg.probe.delta, envelope);
    let (prepared, pure) = cfg.prepared_state()?;

    let rows: Vec<Vec<f64>> = if let Some(state) = pure {
        propagate_tdse_trajectory(&pulses, &state.amplitudes(), &integrator, opts.samples)
            .map_err(|e| CliError::Numerical(e.to_string()))?
            .into_iter()
            .map(|(t, amps)| {
                let [p1, pe, p2] = amps.populations();
                vec![t, p1, pe, p2]
            })
            .collect()
    } else {
        let rho0 = DensityMatrix3::embed_ground(&prepared);
        propagate_liouville_trajectory(&pulses, &rho0, &integrator, opts.samples)
            .map_err(|e| CliError::Numerical(e.to_string()))?
            .into_iter()
            .map(|(t, rho)| {
                let m = rho.matrix();
                vec![t, m[(0, 0)].re, m[(1, 1)].re, m[(2, 2)].re]
            })
            .collect()
    };

    let plot = want_plot.then(|| {
        let series: Vec<Vec<(f64, f64)>> = (1..4)
            .map(|col| rows.iter().map(|r| (r[0], r[col])).collect())
            .collect();
        line_chart_svg(
            "populations",
            &[
                Series {
                    name: "p1",
                    points: &series[0],
                },
                Series {
                    name: "pe",
                    points: &series[1],
                },
                Series {
                    name: "p2",
                    points: &series[2],
                },
            ],
        )
    });
    Ok(CommandOutput {
        text: csv_series("t,p1,pe,p2", &rows, &[]),
        plot,
    })
}

/// Four-setting protocol records plus the common scale
/// `S = I(0,0) + I(pi/2,0)`.
pub fn cmd_measure(cfg: &FileConfig) -> Result<CommandOutput, CliError> {
    let probe = cfg.probe_config()?;
    let (prepared, _) = cfg.prepared_state()?;
    let records = four_setting_protocol(&prepared, &probe).map_err(map_probe)?;
    let rows: Vec<Vec<f64>> = records
        .iter()
        .map(|r| vec![r.setting.theta, r.setting.beta, r.signal])
        .collect();
    let scale = records[0].signal + records[1].signal;
    Ok(CommandOutput::text_only(csv_series(
        "theta,beta,signal",
        &rows,
        &[("s", scale)],
    )))
}

fn parse_records(path: &Path) -> Result<Vec<FluorescenceRecord>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| CliError::Config("records file is empty".into()))?;
    let normalized: String = header
        .split(',')
        .map(str::trim)
        .collect::<Vec<_>>()
        .join(",");
    if normalized != "theta,beta,signal" {
        return Err(CliError::Config(format!(
            "records header must be `theta,beta,signal`, got `{header}`"
        )));
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(CliError::Config(format!(
                "records row {} must have 3 fields, got {}",
                i + 1,
                fields.len()
            )));
        }
        let parse = |s: &str, name: &str| {
            s.parse::<f64>().map_err(|_| {
                CliError::Config(format!("records row {}: invalid {name} `{s}`", i + 1))
            })
        };
        let theta = parse(fields[0], "theta")?;
        let beta = parse(fields[1], "beta")?;
        let signal = parse(fields[2], "signal")?;
        let setting = MeasurementSetting::new(theta, beta)
            .map_err(|e| CliError::Config(format!("records row {}: {e}", i + 1)))?;
        records.push(FluorescenceRecord {
            setting,
            signal,
            // The file format does not carry the atom number; the
            // inversion uses only signal ratios.
            n_atoms: f64::NAN,
            noisy: false,
        });
    }
    if records.len() != 4 {
        return Err(CliError::Config(format!(
            "records file must contain exactly 4 rows, got {}",
            records.len()
        )));
    }
    Ok(records)
}

#[derive(Serialize)]
struct ReconstructOutput {
    rho11: f64,
    rho22: f64,
    re_rho12: f64,
    im_rho12: f64,
    r_inc: f64,
    tr_coh: f64,
    alpha: f64,
    phi: f64,
    degenerate_phase: bool,
    zero_coherent_part: bool,
    projected: bool,
}

impl ReconstructOutput {
    fn from_result(result: &ReconstructionResult, projected: bool) -> Self {
        Self {
            rho11: result.rho.rho11,
            rho22: result.rho.rho22,
            re_rho12: result.rho.rho12.re,
            im_rho12: result.rho.rho12.im,
            r_inc: result.r_inc,
            tr_coh: result.tr_coh,
            alpha: result.coherent.alpha,
            phi: result.coherent.phi,
            degenerate_phase: result.degenerate_phase,
            zero_coherent_part: result.zero_coherent_part,
            projected,
        }
    }
}

/// Invert a four-record CSV into the density matrix, its decomposition
/// and the superposition parameters. Degeneracies are reported as flags,
/// not errors. Unphysical raw reconstructions (from noisy data) are
/// projected back onto the physical set and flagged `projected`.
pub fn cmd_reconstruct(
    cfg: &FileConfig,
    records_arg: Option<&Path>,
) -> Result<CommandOutput, CliError> {
    let path = records_arg
        .or(cfg.command.reconstruct.records.as_deref())
        .ok_or_else(|| {
            CliError::Config(
                "no records file: pass one as an argument or set command.reconstruct.records"
                    .into(),
            )
        })?;
    let mut records = parse_records(path)?;
    let raw = reconstruct(&records).map_err(map_tomography)?;
    let (result, projected) = if raw.rho.validate(1e-9).is_ok() {
        (raw, false)
    } else {
        for r in &mut records {
            r.noisy = true;
        }
        (reconstruct(&records).map_err(map_tomography)?, true)
    };
    Ok(CommandOutput::text_only(json_doc(
        &ReconstructOutput::from_result(&result, projected),
    )))
}

/// Preparation-phase scan with the peak-to-peak contrast trailer.
pub fn cmd_scan(cfg: &FileConfig, want_plot: bool) -> Result<CommandOutput, CliError> {
    let probe = cfg.probe_config()?;
    let (prepared, _) = cfg.prepared_state()?;
    let scan = phase_scan(&prepared, cfg.command.scan.n_points, &probe).map_err(map_probe)?;
    let rows: Vec<Vec<f64>> = scan
        .offsets
        .iter()
        .zip(scan.signals.iter())
        .map(|(&o, &s)| vec![o, s])
        .collect();
    let plot = want_plot.then(|| {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        line_chart_svg(
            "phase scan",
            &[Series {
                name: "signal",
                points: &pts,
            }],
        )
    });
    Ok(CommandOutput {
        text: csv_series("offset,signal", &rows, &[("contrast", scan.contrast)]),
        plot,
    })
}

#[derive(Serialize)]
struct DarkSearchOutput {
    theta_star: f64,
    beta_star: f64,
    residual: f64,
    iterations: usize,
    no_null: bool,
}

/// Two-dimensional search for the fluorescence null.
pub fn cmd_darksearch(cfg: &FileConfig) -> Result<CommandOutput, CliError> {
    let probe = cfg.probe_config()?;
    let (prepared, _) = cfg.prepared_state()?;
    let result = dark_search(&prepared, &probe).map_err(map_tomography)?;
    Ok(CommandOutput::text_only(json_doc(&DarkSearchOutput {
        theta_star: result.theta_star,
        beta_star: result.beta_star,
        residual: result.residual,
        iterations: result.iterations,
        no_null: result.no_null,
    })))
}

#[derive(Serialize, Clone)]
struct SweepPointOutput {
    delta: f64,
    envelope: &'static str,
    rms_scale: f64,
    guarded: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tr_coh: Option<f64>,
}

#[derive(Serialize)]
struct SweepSummary {
    points_evaluated: usize,
    points_guarded: usize,
    max_deviation_alpha: f64,
    max_deviation_phi: f64,
    max_deviation_tr_coh: f64,
}

#[derive(Serialize)]
struct SweepOutput {
    points: Vec<SweepPointOutput>,
    summary: SweepSummary,
}

/// Measure-and-reconstruct the same state across detunings, envelope
/// shapes and rms scalings; near-zero-transfer points are flagged and
/// excluded from the deviation summary.
pub fn cmd_sweep(cfg: &FileConfig, jobs: usize) -> Result<CommandOutput, CliError> {
    let (prepared, _) = cfg.prepared_state()?;
    let opts = &cfg.command.sweep;
    if opts.deltas.is_empty() || opts.envelopes.is_empty() || opts.rms_scales.is_empty() {
        return Err(CliError::Config(
            "command.sweep axes must all be non-empty".into(),
        ));
    }
    let noise = cfg.probe.noise;
    let mut grid = Vec::new();
    for &delta in &opts.deltas {
        for &kind in &opts.envelopes {
            for &scale in &opts.rms_scales {
                grid.push((delta, kind, scale));
            }
        }
    }

    let eval_point = |&(delta, kind, scale): &(f64, crate::config::EnvelopeKindSection, f64)|
     -> Result<SweepPointOutput, CliError> {
        let envelope = PulseEnvelope::new(
            kind.to_kind(),
            cfg.probe.envelope.width,
            cfg.probe.envelope.span,
        )
        .map_err(|e| CliError::Config(format!("probe.envelope: {e}")))?;
        let base = SweepPointOutput {
            delta,
            envelope: kind.name(),
            rms_scale: scale,
            guarded: false,
            alpha: None,
            phi: None,
            tr_coh: None,
        };
        let probe = match ProbeConfig::new(
            cfg.probe.n_atoms,
            cfg.probe.rms_peak * scale,
            delta,
            envelope,
        ) {
            Ok(p) => p
                .with_noise(
                    match noise {
                        NoiseSection::None => cohmeter::NoiseModel::None,
                        NoiseSection::Poisson => cohmeter::NoiseModel::Poisson,
                    },
                    cfg.probe.seed,
                )
                .with_integrator(cfg.integrator()),
            Err(ProbeError::TransferTooWeak { .. }) => {
                return Ok(SweepPointOutput {
                    guarded: true,
                    ..base
                })
            }
            Err(e) => return Err(map_probe(e)),
        };
        let records = four_setting_protocol(&prepared, &probe).map_err(map_probe)?;
        let result = reconstruct(&records).map_err(map_tomography)?;
        Ok(SweepPointOutput {
            alpha: Some(result.coherent.alpha),
            phi: Some(result.coherent.phi),
            tr_coh: Some(result.tr_coh),
            ..base
        })
    };

    let n = grid.len();
    let jobs = jobs.clamp(1, n);
    let results: Vec<Result<SweepPointOutput, CliError>> = if jobs == 1 {
        grid.iter().map(eval_point).collect()
    } else {
        let slots: Mutex<Vec<Option<Result<SweepPointOutput, CliError>>>> =
            Mutex::new((0..n).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= n {
                        break;
                    }
                    let out = eval_point(&grid[i]);
                    slots.lock().expect("no panics while locked")[i] = Some(out);
                });
            }
        });
        slots
            .into_inner()
            .expect("workers joined")
            .into_iter()
            .map(|slot| slot.expect("every grid index visited"))
            .collect()
    };

    let mut points = Vec::with_capacity(n);
    for r in results {
        points.push(r?);
    }
    let kept: Vec<&SweepPointOutput> = points.iter().filter(|p| !p.guarded).collect();
    let spread = |get: &dyn Fn(&SweepPointOutput) -> f64, wrapped: bool| -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in kept.iter().enumerate() {
            for b in kept.iter().skip(i + 1) {
                let d = if wrapped {
                    wrap_angle(get(a) - get(b)).abs()
                } else {
                    (get(a) - get(b)).abs()
                };
                worst = worst.max(d);
            }
        }
        worst
    };
    let summary = SweepSummary {
        points_evaluated: kept.len(),
        points_guarded: n - kept.len(),
        max_deviation_alpha: spread(&|p| p.alpha.unwrap(), false),
        max_deviation_phi: spread(&|p| p.phi.unwrap(), true),
        max_deviation_tr_coh: spread(&|p| p.tr_coh.unwrap(), false),
    };
    Ok(CommandOutput::text_only(json_doc(&SweepOutput {
        points,
        summary,
    })))
}
