//! Command-line laboratory for bulk and edge topological indices of 2D
//! Dirac and rotating shallow-water interface models.
//!
//! Every command reads one JSON run configuration (`--config`), optionally
//! adjusted by dotted-path `--override key=value` pairs, computes, writes
//! its configured files once at the end, and prints a one-line summary to
//! stdout. Exit codes: 0 success, 2 configuration/validation error,
//! 3 numerical failure. The environment variable `BEC_LAB_THREADS` caps
//! scan parallelism.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use bec_core::bulk::bulk_index;
use bec_core::edge::halfplane_edge_index;
use bec_core::error::{BecError, Result};
use bec_core::fiber::{solve_halfline, HalflineBc};
use bec_core::model::C64;
use bec_core::oracle::{
    analytic_state, merging_point, random_hermitian_triple, verify_spin1_identity, StateLabel,
};
use bec_core::report::{
    bec_run, edge_scan, emit_plot_data, write_analytic_state_csv, write_channels_csv,
    write_fibers_csv,
};

use config::{load_config, RunConfig};

/// Largest identity residual accepted as a pass.
const IDENTITY_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(
    name = "bec-lab",
    about = "Bulk and edge topological indices for 2D Dirac and shallow-water interface models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Write gnuplot-ready dispersion columns into this directory.
    #[arg(long, value_name = "DIR")]
    emit_plot_data: Option<PathBuf>,
    /// Dotted-path config override, repeatable (e.g. quadrature.tol=1e-8).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Bulk index: glued half-Chern numbers of the planar symbol.
    Bulk(CommonArgs),
    /// Edge index: traced channels and their Fermi-line crossings.
    Edge(CommonArgs),
    /// Both indices plus the correspondence verdict.
    Bec(CommonArgs),
    /// Half-plane boundary-condition family: per-z channel and index.
    Halfplane {
        #[command(flatten)]
        common: CommonArgs,
        /// Single boundary parameter, e.g. `0-1i` (replaces the configured list).
        #[arg(long, value_parser = parse_complex)]
        z: Option<C64>,
    },
    /// Spin-1 operator-identity residuals on seeded random Hermitian triples.
    Identity(CommonArgs),
    /// Dump sampled closed-form channel states as CSV.
    Oracles(CommonArgs),
}

fn parse_complex(text: &str) -> std::result::Result<C64, String> {
    C64::from_str(text).map_err(|e| format!("cannot parse '{text}' as a complex number: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(output) => {
            println!("{output}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &BecError) -> u8 {
    match err.root() {
        BecError::InvalidConfig { .. }
        | BecError::BadGrid { .. }
        | BecError::InvalidForProfile { .. }
        | BecError::NotApplicable { .. }
        | BecError::ImZZero { .. }
        | BecError::BoundaryCaseImZZero { .. }
        | BecError::Json(..) => 2,
        _ => 3,
    }
}

fn run(command: Command) -> Result<String> {
    match command {
        Command::Bulk(common) => {
            let cfg = load_config(&common.config, &common.overrides)?;
            cmd_bulk(&cfg)
        }
        Command::Edge(common) => {
            let cfg = load_config(&common.config, &common.overrides)?;
            cmd_edge(&cfg, common.emit_plot_data.as_deref())
        }
        Command::Bec(common) => {
            let cfg = load_config(&common.config, &common.overrides)?;
            cmd_bec(&cfg, common.emit_plot_data.as_deref())
        }
        Command::Halfplane { common, z } => {
            let cfg = load_config(&common.config, &common.overrides)?;
            cmd_halfplane(&cfg, z)
        }
        Command::Identity(common) => {
            let cfg = load_config(&common.config, &common.overrides)?;
            cmd_identity(&cfg)
        }
        Command::Oracles(common) => {
            let cfg = load_config(&common.config, &common.overrides)?;
            cmd_oracles(&cfg)
        }
    }
}

fn cmd_bulk(cfg: &RunConfig) -> Result<String> {
    let bulk = bulk_index(&cfg.model, &cfg.quadrature)?;
    Ok(format!(
        "bulk={:+} (glued {:.9}, quadrature error {:.3e})",
        bulk.chern_rounded, bulk.chern_glued, bulk.quadrature_error_estimate
    ))
}

fn cmd_edge(cfg: &RunConfig, plot_dir: Option<&Path>) -> Result<String> {
    let (fibers, edge) = edge_scan(
        &cfg.model,
        cfg.grid,
        &cfg.scan,
        cfg.fermi_epsilon_fraction,
    )?;
    if let Some(path) = &cfg.outputs.channels_csv {
        write_channels_csv(std::fs::File::create(path)?, &edge.channels)?;
    }
    if let Some(path) = &cfg.outputs.fibers_csv {
        write_fibers_csv(std::fs::File::create(path)?, &fibers)?;
    }
    if let Some(dir) = plot_dir {
        emit_plot_data(&fibers, &edge, dir)?;
    }
    Ok(format!(
        "edge={:+} ({} channel{}, {} famil{})",
        edge.edge_index,
        edge.channels.len(),
        if edge.channels.len() == 1 { "" } else { "s" },
        edge.family_count,
        if edge.family_count == 1 { "y" } else { "ies" }
    ))
}

fn cmd_bec(cfg: &RunConfig, plot_dir: Option<&Path>) -> Result<String> {
    let run = bec_run(
        &cfg.model,
        &cfg.quadrature,
        cfg.grid,
        &cfg.scan,
        cfg.fermi_epsilon_fraction,
    )?;
    if let Some(path) = &cfg.outputs.report_json {
        std::fs::write(path, run.report.to_json_bytes()?)?;
    }
    if let Some(path) = &cfg.outputs.channels_csv {
        write_channels_csv(std::fs::File::create(path)?, &run.edge.channels)?;
    }
    if let Some(path) = &cfg.outputs.fibers_csv {
        write_fibers_csv(std::fs::File::create(path)?, &run.fibers)?;
    }
    if let Some(dir) = plot_dir {
        emit_plot_data(&run.fibers, &run.edge, dir)?;
    }
    Ok(run.report.summary_line())
}

fn cmd_halfplane(cfg: &RunConfig, single_z: Option<C64>) -> Result<String> {
    let section = cfg.halfplane.as_ref().ok_or(BecError::InvalidConfig {
        reason: "halfplane: section missing from the configuration".to_string(),
    })?;
    let zs: Vec<C64> = match single_z {
        Some(z) => vec![z],
        None => section
            .z_values
            .iter()
            .map(|&(re, im)| C64::new(re, im))
            .collect(),
    };
    let momenta = cfg.scan.values();
    let mut lines = String::new();
    let mut rows: Vec<[String; 7]> = Vec::new();
    let mut with_bound = 0usize;
    for z in zs.iter().copied() {
        let bc = HalflineBc::new(z)?;
        let index = halfplane_edge_index(z, section.m_plus)?;
        let (k1_star, omega_star) = merging_point(z, section.m_plus)?;
        let mut bound_momenta = 0usize;
        for &k1 in &momenta {
            let fiber = solve_halfline(
                section.m_plus,
                &bc,
                k1,
                cfg.grid.half_width,
                cfg.grid.spacing,
            )?;
            if fiber.states.iter().any(|s| s.is_bound()) {
                bound_momenta += 1;
            }
        }
        if bound_momenta > 0 {
            with_bound += 1;
        }
        writeln!(
            lines,
            "z={:+.4}{:+.4}i  edge={:+}  bound momenta {}/{}  (merging k1*={:+.4}, omega*={:+.4})",
            z.re,
            z.im,
            index,
            bound_momenta,
            momenta.len(),
            k1_star,
            omega_star
        )
        .expect("writing to a string cannot fail");
        rows.push([
            format!("{}", z.re),
            format!("{}", z.im),
            format!("{index}"),
            format!("{k1_star}"),
            format!("{omega_star}"),
            bound_momenta.to_string(),
            momenta.len().to_string(),
        ]);
    }
    if let Some(path) = &cfg.outputs.halfplane_csv {
        let mut w = csv::Writer::from_writer(std::fs::File::create(path)?);
        w.write_record([
            "z_re",
            "z_im",
            "edge_index",
            "k1_star",
            "omega_star",
            "bound_momenta",
            "momenta_total",
        ])
        .map_err(bec_core::error::BecError::from)?;
        for row in &rows {
            w.write_record(row).map_err(BecError::from)?;
        }
        w.flush()?;
    }
    write!(
        lines,
        "halfplane: {} boundary condition{}, {} with a bound channel",
        zs.len(),
        if zs.len() == 1 { "" } else { "s" },
        with_bound
    )
    .expect("writing to a string cannot fail");
    Ok(lines)
}

fn cmd_identity(cfg: &RunConfig) -> Result<String> {
    let section = cfg.identity.unwrap_or_default();
    let n = section.matrix_size;
    let mut max_resid = 0.0f64;
    for trial in 0..section.trials {
        let seed = cfg.seed.wrapping_add(trial as u64);
        let (a, b, c) = random_hermitian_triple(n, seed);
        let resid = verify_spin1_identity(&a, &b, &c)?;
        max_resid = max_resid.max(resid);
    }
    if max_resid > IDENTITY_TOL {
        return Err(BecError::IdentityResidual {
            max: max_resid,
            tol: IDENTITY_TOL,
            n,
            seed: cfg.seed,
        });
    }
    Ok(format!(
        "identity: max residual {:.3e} over {} trials (n={}, base seed {}) PASS",
        max_resid, section.trials, n, cfg.seed
    ))
}

fn cmd_oracles(cfg: &RunConfig) -> Result<String> {
    let dir = cfg
        .outputs
        .oracle_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("oracle_states"));
    std::fs::create_dir_all(&dir)?;
    let k_ref = 0.5 * cfg.model.profile.gap_scale();
    let mut written = 0usize;
    for label in [
        StateLabel::DiracLeft,
        StateLabel::DiracRight,
        StateLabel::SwLeft,
        StateLabel::SwRight,
        StateLabel::SwEven,
        StateLabel::SwOdd,
    ] {
        for (tag, k1) in [("kpos", k_ref), ("kneg", -k_ref)] {
            match analytic_state(label, &cfg.model, k1, cfg.grid) {
                Ok(state) => {
                    let path = dir.join(format!("{}_{tag}.csv", label.name()));
                    write_analytic_state_csv(std::fs::File::create(path)?, &state)?;
                    written += 1;
                }
                // Labels from the other sector or unsupported profiles
                // simply do not apply to this run.
                Err(BecError::NotApplicable { .. }) | Err(BecError::InvalidForProfile { .. }) => {}
                Err(other) => return Err(other),
            }
        }
    }
    Ok(format!(
        "oracles: wrote {written} state file{} to {}",
        if written == 1 { "" } else { "s" },
        dir.display()
    ))
}
