//! Command-line front end: loads a scenario, runs one analysis and writes CSV.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{delta_support, load_scenario, Config, OptimizeConfig};
use crate::entropy::{EntropyOrder, Precision};
use crate::error::{Error, Result};
use crate::leakage::awae;
use crate::optimizer::{convergence_diagnostics, solve, OptProblem};
use crate::randomization::{gamma, verify_bounds};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "smcflow",
    version,
    about = "Leakage analysis and output randomization for secure multi-party computations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// awae for every attacker input.
    Profile(Common),
    /// Baseline vs randomized awae for each configured noise distribution.
    Randomize(Common),
    /// Optimal noise distribution on the configured support.
    Optimize(Common),
    /// Check the privacy-gain bounds; exits with 2 on a violation.
    Verify(Common),
    /// Optimum at several finite orders against the min-entropy optimum.
    SweepAlpha(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_parser = parse_precision)]
    pub precision: Option<Precision>,
    /// Entropy order: a positive number or `inf`.
    #[arg(long, value_parser = parse_order)]
    pub alpha: Option<EntropyOrder>,
    /// Noise support becomes ⟦−Δ, Δ⟧.
    #[arg(long)]
    pub delta_max: Option<i64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub starts: Option<usize>,
}

fn parse_precision(s: &str) -> std::result::Result<Precision, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_order(s: &str) -> std::result::Result<EntropyOrder, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Profile(c)
            | Command::Randomize(c)
            | Command::Optimize(c)
            | Command::Verify(c)
            | Command::SweepAlpha(c) => c,
        }
    }
}

/// Loads the scenario and applies command-line overrides.
pub fn load(common: &Common) -> Result<Config> {
    let mut cfg = load_scenario(&common.scenario)?;
    if let Some(p) = common.precision {
        cfg.scenario = cfg.scenario.with_precision(p);
    }
    if let Some(a) = common.alpha {
        cfg.scenario = cfg.scenario.with_order(a);
    }
    let o: &mut OptimizeConfig = &mut cfg.optimize;
    if let Some(s) = common.seed {
        o.seed = s;
    }
    if let Some(d) = common.delta_max {
        o.support = delta_support(d)?;
    }
    if let Some(e) = common.epsilon {
        if !(e > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "--epsilon must be positive, got {e}"
            )));
        }
        o.epsilon = e;
    }
    if let Some(s) = common.starts {
        o.starts = s;
    }
    Ok(cfg)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {} ({})", e, cli.command.common().scenario.display());
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let common = cli.command.common();
    let cfg = load(common)?;
    let out = &common.out;
    fs::create_dir_all(out)?;
    match &cli.command {
        Command::Profile(_) => cmd_profile(&cfg, out).map(|_| EXIT_OK),
        Command::Randomize(_) => cmd_randomize(&cfg, out).map(|_| EXIT_OK),
        Command::Optimize(_) => cmd_optimize(&cfg, out).map(|_| EXIT_OK),
        Command::Verify(_) => {
            cmd_verify(&cfg, out).map(|ok| if ok { EXIT_OK } else { EXIT_VIOLATION })
        }
        Command::SweepAlpha(_) => cmd_sweep_alpha(&cfg, out).map(|_| EXIT_OK),
    }
}

fn write_csv(cfg: &Config, path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = format!(
        "# config_sha256={} precision={}\n",
        cfg.sha256,
        cfg.scenario.precision()
    )
    .into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    fs::write(path, buf)?;
    Ok(())
}

fn attacker_header(cfg: &Config) -> Vec<String> {
    cfg.scenario.attackers().names().to_vec()
}

fn tuple_cells(t: &[i64]) -> Vec<String> {
    t.iter().map(|v| v.to_string()).collect()
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn approximation(cfg: &Config) -> Result<&crate::config::ApproximationConfig> {
    match &cfg.approximation {
        Some(a) if !a.distributions.is_empty() => Ok(a),
        _ => Err(Error::Config {
            path: "approximation".into(),
            msg: "this command needs an approximation with at least one distribution".into(),
        }),
    }
}

/// Writes `profile.csv`.
pub fn cmd_profile(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    let profile = awae(&cfg.scenario)?;
    let mut header = attacker_header(cfg);
    header.push("entropy".into());
    let rows: Vec<Vec<String>> = profile
        .entries()
        .iter()
        .map(|(x, h)| {
            let mut r = tuple_cells(x);
            r.push(num(*h));
            r
        })
        .collect();
    let path = out.join("profile.csv");
    write_csv(cfg, &path, &header, &rows)?;
    Ok(vec![path])
}

/// Writes `randomize_<label>.csv` for each configured distribution.
pub fn cmd_randomize(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    let approx = approximation(cfg)?;
    let mut header = attacker_header(cfg);
    header.extend(["baseline", "randomized", "gamma", "upper_bound"].map(String::from));
    let mut paths = Vec::new();
    for (label, pi) in &approx.distributions {
        let report = gamma(&cfg.scenario, &approx.spec, pi)?;
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| {
                let mut row = tuple_cells(&r.x_a);
                row.extend(
                    [
                        r.baseline,
                        r.randomized,
                        r.gamma,
                        r.baseline + report.virtual_entropy,
                    ]
                    .map(num),
                );
                row
            })
            .collect();
        let path = out.join(format!("randomize_{label}.csv"));
        write_csv(cfg, &path, &header, &rows)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Writes `verify.csv`; returns whether every bound holds.
pub fn cmd_verify(cfg: &Config, out: &Path) -> Result<bool> {
    let approx = approximation(cfg)?;
    let mut header = vec!["distribution".to_string()];
    header.extend(attacker_header(cfg));
    header.extend(["gamma", "virtual_entropy", "close", "lower_ok", "upper_ok"].map(String::from));
    let mut rows = Vec::new();
    let mut ok = true;
    for (label, pi) in &approx.distributions {
        let report = verify_bounds(&cfg.scenario, &approx.spec, pi)?;
        ok &= report.all_ok();
        for r in &report.rows {
            let mut row = vec![label.clone()];
            row.extend(tuple_cells(&r.x_a));
            row.push(num(r.gamma));
            row.push(num(report.virtual_entropy));
            row.push(report.close.to_string());
            row.push(r.lower_ok.to_string());
            row.push(r.upper_ok.map_or("n/a".to_string(), |b| b.to_string()));
            rows.push(row);
        }
        println!(
            "{label}: {} violations of {} rows (close approximation: {})",
            report.violations(),
            report.rows.len(),
            report.close
        );
    }
    write_csv(cfg, &out.join("verify.csv"), &header, &rows)?;
    Ok(ok)
}

fn problem(cfg: &Config) -> Result<OptProblem> {
    let o = &cfg.optimize;
    Ok(
        OptProblem::with_support(cfg.scenario.clone(), o.support.clone())?
            .with_epsilon(o.epsilon)?
            .with_seed(o.seed)
            .with_starts(o.starts),
    )
}

/// Writes `optimize.csv` (support atoms and masses) and `optimize_summary.csv`.
pub fn cmd_optimize(cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
    let p = problem(cfg)?;
    let r = solve(&p)?;
    let order = p.order();
    let n = p.support().len();
    let uniform = p.objective_at(&vec![1.0 / n as f64; n], order)?;
    let point = match p.support().binary_search(&0) {
        Ok(i) => {
            let mut m = vec![0.0; n];
            m[i] = 1.0;
            Some(p.objective_at(&m, order)?)
        }
        Err(_) => None,
    };
    let atoms: Vec<Vec<String>> = r
        .support
        .iter()
        .zip(&r.masses)
        .map(|(phi, m)| vec![phi.to_string(), num(*m)])
        .collect();
    let atoms_path = out.join("optimize.csv");
    write_csv(cfg, &atoms_path, &["phi".into(), "mass".into()], &atoms)?;

    let c = &r.certificate;
    let d = &r.diagnostics;
    let opt = |x: Option<f64>| x.map_or(String::new(), num);
    let summary: Vec<(&str, String)> = vec![
        ("order", order.to_string()),
        ("objective", num(r.objective)),
        ("omega_lower", num(c.lower)),
        ("omega_upper", num(c.upper)),
        ("epsilon", num(c.epsilon)),
        ("alpha_used", opt(c.alpha_used)),
        ("delta_bound", opt(c.delta_bound)),
        ("beta_gain", num(c.beta_gain)),
        ("n_outputs", c.n_outputs.to_string()),
        ("smoothed_objective", opt(c.smoothed_objective)),
        ("uniform_objective", num(uniform)),
        ("point_mass_objective", opt(point)),
        ("starts", d.starts.to_string()),
        ("best_start", d.best_start.to_string()),
        ("iterations", d.iterations.to_string()),
        ("gradient_norm", num(d.gradient_norm)),
        ("converged", d.converged.to_string()),
        ("seed", cfg.optimize.seed.to_string()),
        ("assumption", c.assumption.to_string()),
    ];
    let rows: Vec<Vec<String>> = summary
        .into_iter()
        .map(|(k, v)| vec![k.to_string(), v])
        .collect();
    let summary_path = out.join("optimize_summary.csv");
    write_csv(cfg, &summary_path, &["key".into(), "value".into()], &rows)?;
    println!(
        "objective={:.4} omega in [{:.4}, {:.4}] uniform={:.4} n_outputs={}",
        r.objective, c.lower, c.upper, uniform, c.n_outputs
    );
    Ok(vec![atoms_path, summary_path])
}

/// Writes `sweep.csv`.
pub fn cmd_sweep_alpha(cfg: &Config, out: &Path) -> Result<PathBuf> {
    let p = problem(cfg)?;
    let report = convergence_diagnostics(&p, &cfg.optimize.alphas)?;
    let header: Vec<String> = [
        "alpha",
        "omega_alpha",
        "omega_bar",
        "omega_inf",
        "theta",
        "theta_bound",
        "under_ok",
        "theta_ok",
    ]
    .map(String::from)
    .to_vec();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.alpha),
                num(r.omega_alpha),
                num(r.omega_bar),
                num(report.omega_inf),
                num(r.theta),
                num(r.theta_bound),
                r.under_ok.to_string(),
                r.theta_ok.to_string(),
            ]
        })
        .collect();
    let path = out.join("sweep.csv");
    write_csv(cfg, &path, &header, &rows)?;
    Ok(path)
}
