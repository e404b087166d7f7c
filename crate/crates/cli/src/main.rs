use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use shtest_core::error::Error;
use shtest_core::limits::{is_symmetric_case, NetworkShape, TradeoffCurves};
use shtest_core::measures::DistributionPair;
use shtest_core::rates::RateProfile;
use shtest_core::reproduce::{self, Budget};
use shtest_core::sim::{run_scenario, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(name = "shtest", version, about = "Byzantine-resilient binary hypothesis testing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; results go to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Overrides the number of trials.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Overrides the horizon K.
    #[arg(long, global = true)]
    horizon: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chernoff information, divergences and efficiency/security caps.
    Limits {
        /// Grid points of the rate-function table (csv format).
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Boundary of the achievable efficiency/security region.
    Region {
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Runs the scenario given by --config.
    Simulate,
    /// Runs a bundled experiment on the reference network.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        /// Grid points for fig2 and fig3.
        #[arg(long)]
        points: Option<usize>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    Table1,
    Fig2,
    Fig3,
    Fig4,
}

/// Pair and network shape for `limits` and `region`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Setup {
    pair: DistributionPair,
    shape: NetworkShape,
}

impl Default for Setup {
    fn default() -> Self {
        Setup { pair: reproduce::reference_pair(), shape: reproduce::reference_shape() }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?)
}

/// Writes to `<out>/<name>` or stdout.
fn emit(out: Option<&Path>, name: &str, body: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn csv_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn budget(cli: &Cli, base: Budget) -> Budget {
    Budget {
        horizon: cli.horizon.unwrap_or(base.horizon),
        trials: cli.trials.unwrap_or(base.trials),
        master_seed: cli.seed.unwrap_or(base.master_seed),
    }
}

fn cmd_limits(cli: &Cli, points: usize) -> Result<()> {
    let setup: Setup = cli.config.as_deref().map(read_json).transpose()?.unwrap_or_default();
    setup.shape.validate()?;
    let profile = RateProfile::build(setup.pair)?;
    let curves = TradeoffCurves::new(profile, setup.shape)?;
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => {
            let body = json!({
                "c": profile.c,
                "d01": profile.d01,
                "d10": profile.d10,
                "wstar": profile.wstar,
                "mC": curves.max_efficiency(),
                "m_minus_2n_C": curves.max_security(),
                "symmetric": is_symmetric_case(&profile),
                "config_echo": setup,
            });
            emit(cli.out.as_deref(), "limits.json", &to_json(&body)?)
        }
        Format::Csv => {
            let (lo, hi) = profile.lambda_range;
            let (lo, hi) = if lo.is_finite() && hi.is_finite() {
                (lo, hi)
            } else {
                let span = 2.0 * (profile.d01 + profile.d10);
                (-span, span)
            };
            let n = points.max(2);
            let mut body = String::from("x,I0,I1\n");
            for i in 0..n {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                let (i0, i1) = profile.rates(x);
                body.push_str(&format!("{x},{i0},{i1}\n"));
            }
            emit(cli.out.as_deref(), "rates.csv", &body)
        }
    }
}

fn region_csv(rows: &[reproduce::RegionRow]) -> String {
    let mut body = String::from("z_s,h_e,branch0,branch1\n");
    for r in rows {
        body.push_str(&format!("{},{},{},{}\n", r.z, csv_cell(r.h_e), csv_cell(r.branch0), csv_cell(r.branch1)));
    }
    body
}

fn cmd_region(cli: &Cli, points: usize) -> Result<()> {
    let setup: Setup = cli.config.as_deref().map(read_json).transpose()?.unwrap_or_default();
    let curves = TradeoffCurves::new(RateProfile::build(setup.pair)?, setup.shape)?;
    let rows = reproduce::region(&curves, points);
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(cli.out.as_deref(), "region.csv", &region_csv(&rows)),
        Format::Json => emit(cli.out.as_deref(), "region.json", &to_json(&rows)?),
    }
}

fn cmd_simulate(cli: &Cli) -> Result<()> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Error::Config("simulate needs --config <scenario.json>".into()))?;
    let mut cfg: ScenarioConfig = read_json(path)?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(h) = cli.horizon {
        cfg.horizon = h;
        cfg.fit_window = cfg.fit_window.filter(|w| w.1 <= h);
    }
    let est = run_scenario(&cfg)?;
    let mut csv = Vec::new();
    est.write_csv(&mut csv)?;
    let csv = String::from_utf8(csv)?;
    let summary = est.summary(&cfg);
    match (cli.out.as_deref(), cli.format.unwrap_or(Format::Csv)) {
        (Some(dir), _) => {
            emit(Some(dir), "estimate.csv", &csv)?;
            emit(Some(dir), "summary.json", &to_json(&summary)?)
        }
        (None, Format::Csv) => emit(None, "", &csv),
        (None, Format::Json) => {
            let mut full = summary;
            full["records"] = serde_json::to_value(&est.records)?;
            emit(None, "", &to_json(&full)?)
        }
    }
}

fn cmd_reproduce(cli: &Cli, target: Target, points: Option<usize>) -> Result<()> {
    let format = cli.format.unwrap_or(Format::Csv);
    let out = cli.out.as_deref();
    match target {
        Target::Table1 => {
            let b = budget(cli, Budget::default());
            let rows = reproduce::table1(b)?;
            match format {
                Format::Json => emit(out, "table1.json", &to_json(&json!({ "budget": b, "rows": rows }))?),
                Format::Csv => {
                    let mut body = String::from(
                        "detector,reference_security,measured_security,security_ok,reference_efficiency,measured_efficiency,efficiency_ok,method\n",
                    );
                    for r in &rows {
                        body.push_str(&format!(
                            "{},{},{},{},{},{},{},{}\n",
                            r.detector,
                            r.reference_security,
                            csv_cell(r.measured_security),
                            r.security_within_tolerance,
                            r.reference_efficiency,
                            csv_cell(r.measured_efficiency),
                            r.efficiency_within_tolerance,
                            r.method
                        ));
                    }
                    emit(out, "table1.csv", &body)
                }
            }
        }
        Target::Fig2 => {
            let rows = reproduce::fig2(points.unwrap_or(201))?;
            match format {
                Format::Csv => emit(out, "fig2.csv", &region_csv(&rows)),
                Format::Json => emit(out, "fig2.json", &to_json(&rows)?),
            }
        }
        Target::Fig3 => {
            let b = budget(cli, Budget { horizon: 40, trials: 20_000, ..Budget::default() });
            let rows = reproduce::fig3(b, points.unwrap_or(9))?;
            match format {
                Format::Json => emit(out, "fig3.json", &to_json(&json!({ "budget": b, "rows": rows }))?),
                Format::Csv => {
                    let mut body = String::from(
                        "z_s,measured_efficiency,measured_security,theoretical_efficiency,theoretical_security\n",
                    );
                    for r in &rows {
                        body.push_str(&format!(
                            "{},{},{},{},{}\n",
                            r.z_s, r.measured_efficiency, r.measured_security, r.theoretical_efficiency, r.theoretical_security
                        ));
                    }
                    emit(out, "fig3.csv", &body)
                }
            }
        }
        Target::Fig4 => {
            let b = budget(cli, Budget { trials: 20_000, ..Budget::default() });
            let curves = reproduce::fig4(b)?;
            match format {
                Format::Json => {
                    let body: Vec<_> = curves
                        .iter()
                        .map(|(name, e)| json!({ "detector": name, "fitted_exponent": e.fitted_exponent, "records": e.records }))
                        .collect();
                    emit(out, "fig4.json", &to_json(&json!({ "budget": b, "curves": body }))?)
                }
                Format::Csv => {
                    let mut body = String::from("detector,k,p_err0,p_err1,worst,log_worst\n");
                    for (name, e) in &curves {
                        for r in &e.records {
                            body.push_str(&format!(
                                "{name},{},{},{},{},{}\n",
                                r.k,
                                csv_cell(r.p_err0),
                                csv_cell(r.p_err1),
                                r.worst,
                                r.log_worst
                            ));
                        }
                    }
                    emit(out, "fig4.csv", &body)
                }
            }
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Numerical(_) | Error::InsufficientData { .. }) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Limits { points } => cmd_limits(&cli, *points),
        Command::Region { points } => cmd_region(&cli, *points),
        Command::Simulate => cmd_simulate(&cli),
        Command::Reproduce { target, points } => cmd_reproduce(&cli, *target, *points),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
