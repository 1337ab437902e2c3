use std::io::Read;

use sisni_core::analysis::{loss_plane, slope_vs_theta, snr_gain_db, wigner_panel_auto};
use sisni_core::circuit::{engine_report, parse_circuit, CircuitSpec};
use sisni_core::fit::{fit_noise_model, AdvantageDatum, FitBounds, FitOptions};
use sisni_core::gaussian::quadrature_stats;
use sisni_core::interferometer::{mean_signal_and_variance, Topology};
use sisni_core::noise::advantage_vs_qng;

use crate::args::{Command, FitArgs, RunArgs};
use crate::doc::{CommandEcho, Outputs, ResultDoc};
use crate::error::CliError;

/// Contents of `path`, or of stdin for `-`.
pub fn read_input(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::io("<stdin>", e))?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
    }
}

/// Parse fit data: header row naming `qng1_db,qng2_db,advantage_db` and
/// optionally `sigma_db`, in any order.
pub fn parse_fit_data(text: &str) -> Result<Vec<AdvantageDatum>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let data = reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| CliError::Data(format!("data row {}: {e}", i + 1))))
        .collect::<Result<Vec<AdvantageDatum>, _>>()?;
    if data.is_empty() {
        return Err(CliError::Data("fit data has no rows".into()));
    }
    Ok(data)
}

enum Source {
    Topology(Topology),
    Circuit(CircuitSpec),
}

fn source(args: &RunArgs) -> Result<Source, CliError> {
    match (&args.topology, &args.circuit) {
        (Some(kind), None) => Ok(Source::Topology(args.physics.topology(*kind)?)),
        (None, Some(path)) => {
            if args.physics != Default::default() {
                return Err(CliError::Usage(
                    "physics flags cannot modify a --circuit document".into(),
                ));
            }
            Ok(Source::Circuit(parse_circuit(&read_input(path)?)?))
        }
        _ => Err(CliError::Usage("exactly one of --topology and --circuit is required".into())),
    }
}

fn echo(args: &Command) -> CommandEcho {
    CommandEcho {
        args: args.clone(),
        circuit: None,
        data: None,
    }
}

fn state_outputs(spec: &CircuitSpec) -> Result<Outputs, CliError> {
    let state = spec.simulate()?;
    let n = 2 * state.n_modes();
    let cov = state.cov();
    Ok(Outputs::State {
        mean: state.mean().iter().copied().collect(),
        cov: (0..n).map(|i| (0..n).map(|j| cov[(i, j)]).collect()).collect(),
        detected: quadrature_stats(&state, spec.detect.mode, spec.detect.theta)?,
    })
}

fn fit(args: &FitArgs, command: &Command) -> Result<ResultDoc, CliError> {
    let data = parse_fit_data(&read_input(&args.data)?)?;
    let options = FitOptions {
        seed: args.seed,
        restarts: args.restarts,
        max_iterations: args.max_iterations,
    };
    let result = fit_noise_model(&data, &args.losses.losses()?, &FitBounds::default(), &options)?;
    let mut e = echo(command);
    e.data = Some(data);
    Ok(ResultDoc::new(e, Outputs::Fit(result)))
}

pub fn run(command: &Command) -> Result<ResultDoc, CliError> {
    match command {
        Command::Simulate(args) => {
            let mut e = echo(command);
            let spec = match source(args)? {
                Source::Topology(t) => t.build()?.0,
                Source::Circuit(spec) => {
                    e.circuit = Some(spec.clone());
                    spec
                }
            };
            Ok(ResultDoc::new(e, state_outputs(&spec)?))
        }
        Command::Snr(args) => {
            let mut e = echo(command);
            let outputs = match source(args)? {
                Source::Topology(t) => Outputs::Report {
                    engine: t.engine_report(args.dphi)?,
                    closed: Some(mean_signal_and_variance(&t, args.dphi)?),
                    snr_gain_db: Some(snr_gain_db(&t, &t.sql_baseline())?),
                },
                Source::Circuit(spec) => {
                    let engine = engine_report(&spec, args.dphi)?;
                    e.circuit = Some(spec);
                    Outputs::Report {
                        engine,
                        closed: None,
                        snr_gain_db: None,
                    }
                }
            };
            Ok(ResultDoc::new(e, outputs))
        }
        Command::Sweep(args) => {
            if let Some(flag) = args.physics.any_loss() {
                return Err(CliError::Usage(format!("{flag} conflicts with --internal/--external")));
            }
            let topology = args.physics.topology(args.topology)?;
            let grid = loss_plane(&topology, args.internal, args.external)?;
            Ok(ResultDoc::new(echo(command), Outputs::Grid(grid)))
        }
        Command::Slope(args) => {
            let topology = args.physics.topology(args.topology)?;
            let points = slope_vs_theta(&topology, &args.theta.values(), args.dphi)?;
            Ok(ResultDoc::new(echo(command), Outputs::Slope { points }))
        }
        Command::Wigner(args) => {
            if args.physics.l_e.is_some() {
                return Err(CliError::Usage("--l-e conflicts with --external".into()));
            }
            if args.physics.phi.is_some() {
                return Err(CliError::Usage("--phi conflicts with --phis".into()));
            }
            let topology = args.physics.topology(args.topology)?;
            let (grid, slices) =
                wigner_panel_auto(&topology, &args.phis.values(), &args.external.values(), args.step)?;
            Ok(ResultDoc::new(echo(command), Outputs::Densities { grid, slices }))
        }
        Command::AdvantageCurve(args) => {
            let (noise1, noise2) = args.noise();
            let points = advantage_vs_qng(
                args.qng1_db,
                &args.qng2.values(),
                &args.losses.losses()?,
                &noise1,
                &noise2,
            )?;
            Ok(ResultDoc::new(
                echo(command),
                Outputs::AdvantageCurve {
                    qng1_db: args.qng1_db,
                    points,
                },
            ))
        }
        Command::Fit(args) => fit(args, command),
    }
}
