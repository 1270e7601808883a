//! Assembled run artifacts: the combined bulk/edge verdict with
//! per-channel crossing records, deterministic JSON serialization, and
//! the CSV emitters behind the command-line front end.
//!
//! Reports are written once, at the end of a run, by a single writer.
//! Serialization is deterministic: struct fields serialize in declaration
//! order and floats print in shortest-round-trip form, so two runs with
//! the same configuration produce byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bulk::{bulk_index, BulkIndexResult, QuadratureConfig};
use crate::edge::{edge_index, EdgeChannel, EdgeIndexResult, FermiLine};
use crate::error::Result;
use crate::fiber::{scan_fibers, CensusParams, FiberSpectrum, ScanRange};
use crate::model::{build_fiber_operator, Grid1d, ModelSpec, Sector};
use crate::oracle::{analytic_state, dispersion_residual, AnalyticState, StateLabel};

/// One signed crossing between a traced channel and the Fermi line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingRecord {
    /// Crossing momentum (scan endpoint for a reconstructed tail crossing).
    pub k1: f64,
    /// `+1` if the channel rises through the line, `-1` if it falls.
    pub sign: i8,
    /// True when the crossing was reconstructed beyond the scanned range.
    pub beyond_scan: bool,
}

/// Intersection bookkeeping for one traced channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub channel_id: usize,
    /// Family after mirror merging; branches with the same family are the
    /// same physical dispersion.
    pub family: usize,
    pub sample_count: usize,
    pub k1_first: f64,
    pub k1_last: f64,
    /// Signed crossing total of this channel with the Fermi line.
    pub intersections: i32,
    pub crossings: Vec<CrossingRecord>,
}

/// Numerical context without which the indices cannot be reproduced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub grid: Grid1d,
    pub scan: ScanRange,
    pub quadrature: QuadratureConfig,
    /// Fermi-line offset `ε` actually used.
    pub fermi_epsilon: f64,
    /// Asymptotic gap scale the spectral thresholds derive from.
    pub gap_scale: f64,
    /// Observed first-order accuracy constant: the relative eigenresidual
    /// of the sampled closed-form channel state divided by the grid
    /// spacing. Calibrated per run; `None` when the profile admits no
    /// closed-form channel.
    pub residual_constant: Option<f64>,
}

/// The combined verdict of a full run: bulk index, edge index, and whether
/// they agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub model: ModelSpec,
    pub bulk: BulkIndexResult,
    /// Minus the sum of signed channel crossings, exactly as summed.
    pub edge_index: i32,
    /// Number of physical channel families in the scan.
    pub family_count: usize,
    pub per_channel: Vec<ChannelRecord>,
    /// True exactly when the rounded bulk index equals the edge index.
    pub bec_holds: bool,
    pub diagnostics: RunDiagnostics,
}

impl IndexReport {
    /// One-line human summary, e.g. `bulk=+1 edge=+1 BEC: HOLDS`.
    pub fn summary_line(&self) -> String {
        format!(
            "bulk={:+} edge={:+} BEC: {}",
            self.bulk.chern_rounded,
            self.edge_index,
            if self.bec_holds { "HOLDS" } else { "FAILS" }
        )
    }

    /// Pretty JSON plus a trailing newline. Byte-deterministic for a fixed
    /// configuration.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

/// Everything a full run produces: the serializable verdict plus the
/// in-memory scan artifacts the CSV emitters consume.
#[derive(Debug, Clone)]
pub struct BecRun {
    pub report: IndexReport,
    pub fibers: Vec<FiberSpectrum>,
    pub edge: EdgeIndexResult,
}

/// Runs the fiber scan and evaluates the edge invariant on it.
pub fn edge_scan(
    spec: &ModelSpec,
    grid: Grid1d,
    scan: &ScanRange,
    fermi_fraction: f64,
) -> Result<(Vec<FiberSpectrum>, EdgeIndexResult)> {
    let params = CensusParams::for_model(spec, grid);
    let fibers = scan_fibers(spec, grid, scan, &params)?;
    let edge = edge_index(&fibers, spec.profile.gap_scale(), fermi_fraction)?;
    Ok((fibers, edge))
}

/// Runs the bulk quadrature and the edge pipeline and assembles the
/// combined verdict. Errors carry the stage (`bulk index` / `edge scan`)
/// they arose in.
pub fn bec_run(
    spec: &ModelSpec,
    quadrature: &QuadratureConfig,
    grid: Grid1d,
    scan: &ScanRange,
    fermi_fraction: f64,
) -> Result<BecRun> {
    let bulk = bulk_index(spec, quadrature).map_err(|e| e.with_stage("bulk index"))?;
    let (fibers, edge) =
        edge_scan(spec, grid, scan, fermi_fraction).map_err(|e| e.with_stage("edge scan"))?;
    let report = IndexReport {
        model: spec.clone(),
        bec_holds: bulk.chern_rounded == edge.edge_index,
        edge_index: edge.edge_index,
        family_count: edge.family_count,
        per_channel: channel_records(&edge),
        diagnostics: RunDiagnostics {
            grid,
            scan: *scan,
            quadrature: *quadrature,
            fermi_epsilon: edge.fermi.epsilon,
            gap_scale: edge.fermi.gap_scale,
            residual_constant: residual_constant(spec, grid),
        },
        bulk,
    };
    Ok(BecRun {
        report,
        fibers,
        edge,
    })
}

/// The serializable verdict alone; see [`bec_run`] for the full artifacts.
pub fn bec_report(
    spec: &ModelSpec,
    quadrature: &QuadratureConfig,
    grid: Grid1d,
    scan: &ScanRange,
    fermi_fraction: f64,
) -> Result<IndexReport> {
    Ok(bec_run(spec, quadrature, grid, scan, fermi_fraction)?.report)
}

fn channel_records(edge: &EdgeIndexResult) -> Vec<ChannelRecord> {
    edge.channels
        .iter()
        .zip(&edge.intersections)
        .map(|(ch, ix)| ChannelRecord {
            channel_id: ch.id,
            family: ch.family,
            sample_count: ch.samples.len(),
            k1_first: ch.first().k1,
            k1_last: ch.last().k1,
            intersections: ix.total,
            crossings: ix
                .crossings
                .iter()
                .map(|c| CrossingRecord {
                    k1: c.k1,
                    sign: c.sign,
                    beyond_scan: c.beyond_scan,
                })
                .collect(),
        })
        .collect()
}

/// Calibrates the first-order accuracy constant on the run's own grid:
/// relative eigenresidual of the sampled closed-form channel state,
/// divided by the spacing. `None` when no closed form applies.
pub fn residual_constant(spec: &ModelSpec, grid: Grid1d) -> Option<f64> {
    let label = match (spec.sector, spec.profile.is_non_decreasing()) {
        (Sector::Dirac, true) => StateLabel::DiracLeft,
        (Sector::Dirac, false) if spec.profile.is_non_increasing() => StateLabel::DiracRight,
        (Sector::ShallowWater, true) => StateLabel::SwLeft,
        (Sector::ShallowWater, false) if spec.profile.is_non_increasing() => StateLabel::SwRight,
        _ => return None,
    };
    let k1 = 0.5 * spec.profile.gap_scale();
    let state = analytic_state(label, spec, k1, grid).ok()?;
    let op = build_fiber_operator(spec, grid, k1).ok()?;
    Some(dispersion_residual(&op, &state) / grid.spacing)
}

fn field(v: f64) -> String {
    format!("{v}")
}

/// Writes one row per channel sample: `channel_id,k1,omega`. An empty
/// channel list produces the header alone.
pub fn write_channels_csv<W: Write>(sink: W, channels: &[EdgeChannel]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["channel_id", "k1", "omega"])?;
    for ch in channels {
        for s in &ch.samples {
            w.write_record([ch.id.to_string(), field(s.k1), field(s.omega)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per enumerated in-gap state:
/// `k1,omega,bound_flag,localization`.
pub fn write_fibers_csv<W: Write>(sink: W, fibers: &[FiberSpectrum]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["k1", "omega", "bound_flag", "localization"])?;
    for fiber in fibers {
        for state in &fiber.states {
            w.write_record([
                field(fiber.k1),
                field(state.omega),
                (state.is_bound() as u8).to_string(),
                field(state.interior_fraction),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Returns the channel's frequency at momentum `k1` if it was sampled there.
fn channel_value_at(channel: &EdgeChannel, k1: f64) -> Option<f64> {
    channel
        .samples
        .iter()
        .find(|s| (s.k1 - k1).abs() <= 1e-9 * (1.0 + k1.abs()))
        .map(|s| s.omega)
}

/// Band edges for plotting: the probed discrete edges when available,
/// otherwise the asymptotic thresholds `±gap_edge`.
fn plot_edges(fiber: &FiberSpectrum) -> (f64, f64) {
    (
        fiber.discrete_edge_upper.unwrap_or(fiber.gap_edge),
        fiber.discrete_edge_lower.unwrap_or(-fiber.gap_edge),
    )
}

/// Writes plot-ready dispersion columns, one row per scanned momentum:
/// `k1,band_edge_upper,band_edge_lower,mu_epsilon,channel_<id>...`.
/// Channel cells are empty where the channel was not sampled.
pub fn write_dispersion_csv<W: Write>(
    sink: W,
    fibers: &[FiberSpectrum],
    channels: &[EdgeChannel],
    fermi: &FermiLine,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![
        "k1".to_string(),
        "band_edge_upper".to_string(),
        "band_edge_lower".to_string(),
        "mu_epsilon".to_string(),
    ];
    header.extend(channels.iter().map(|ch| format!("channel_{}", ch.id)));
    w.write_record(&header)?;
    for fiber in fibers {
        let (upper, lower) = plot_edges(fiber);
        let mut row = vec![
            field(fiber.k1),
            field(upper),
            field(lower),
            field(fermi.mu(fiber.k1)),
        ];
        row.extend(channels.iter().map(|ch| {
            channel_value_at(ch, fiber.k1)
                .map(field)
                .unwrap_or_default()
        }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// The rescaled view of [`write_dispersion_csv`]: abscissa `tanh(k1)`,
/// every frequency divided by `√(k1² + gap_scale²)`, which maps the upper
/// band edge to the horizontal line `+1`.
pub fn write_rescaled_dispersion_csv<W: Write>(
    sink: W,
    fibers: &[FiberSpectrum],
    channels: &[EdgeChannel],
    fermi: &FermiLine,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![
        "tanh_k1".to_string(),
        "band_edge_upper".to_string(),
        "band_edge_lower".to_string(),
        "mu_epsilon".to_string(),
    ];
    header.extend(channels.iter().map(|ch| format!("channel_{}", ch.id)));
    w.write_record(&header)?;
    for fiber in fibers {
        let scale = (fiber.k1 * fiber.k1 + fermi.gap_scale * fermi.gap_scale).sqrt();
        let (upper, lower) = plot_edges(fiber);
        let mut row = vec![
            field(fiber.k1.tanh()),
            field(upper / scale),
            field(lower / scale),
            field(fermi.mu(fiber.k1) / scale),
        ];
        row.extend(channels.iter().map(|ch| {
            channel_value_at(ch, fiber.k1)
                .map(|omega| field(omega / scale))
                .unwrap_or_default()
        }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Dumps a sampled closed-form state as plot-ready columns, one row per
/// primary site. Staggered components sit half a spacing to the right of
/// the row's `x2`; the final row leaves them empty.
pub fn write_analytic_state_csv<W: Write>(sink: W, state: &AnalyticState) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let layout = &state.layout;
    let n_sites = layout.grid.primary_sites();
    match layout.sector {
        Sector::Dirac => w.write_record(["x2", "u", "v"])?,
        Sector::ShallowWater => w.write_record(["x2", "eta", "u", "v"])?,
    }
    for n in 0..n_sites {
        let x2 = field(layout.grid.primary_x(n));
        let midpoint = if n + 1 < n_sites {
            field(state.values[layout.midpoint_row(n)])
        } else {
            String::new()
        };
        match layout.sector {
            Sector::Dirac => {
                w.write_record([x2, field(state.values[layout.primary_row(n)]), midpoint])?;
            }
            Sector::ShallowWater => {
                w.write_record([
                    x2,
                    field(state.values[layout.primary_row(n)]),
                    field(state.values[layout.velocity_row(n)]),
                    midpoint,
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the dispersion and rescaled-dispersion plot files into `dir`
/// (created if missing) and returns the written paths.
pub fn emit_plot_data(
    fibers: &[FiberSpectrum],
    edge: &EdgeIndexResult,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let dispersion = dir.join("dispersion.csv");
    let rescaled = dir.join("dispersion_rescaled.csv");
    write_dispersion_csv(
        std::fs::File::create(&dispersion)?,
        fibers,
        &edge.channels,
        &edge.fermi,
    )?;
    write_rescaled_dispersion_csv(
        std::fs::File::create(&rescaled)?,
        fibers,
        &edge.channels,
        &edge.fermi,
    )?;
    Ok(vec![dispersion, rescaled])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edge::{BranchEnd, ChannelSample};
    use crate::fiber::{FiberState, StateClass};
    use crate::profile::Profile;

    fn dirac_tanh() -> ModelSpec {
        ModelSpec::new(
            Sector::Dirac,
            Profile::Tanh {
                asymptote_minus: -1.0,
                asymptote_plus: 1.0,
                length_scale: 1.0,
            },
        )
        .unwrap()
    }

    fn fake_report(chern: i32, edge: i32) -> IndexReport {
        IndexReport {
            model: dirac_tanh(),
            bulk: BulkIndexResult {
                c_half_plus: 0.5,
                c_half_minus: -0.5,
                chern_glued: chern as f64,
                chern_rounded: chern,
                quadrature_error_estimate: 1e-9,
                degree_plus: 1,
                degree_minus: -1,
            },
            edge_index: edge,
            family_count: 1,
            per_channel: Vec::new(),
            bec_holds: chern == edge,
            diagnostics: RunDiagnostics {
                grid: Grid1d::new(12.0, 0.05).unwrap(),
                scan: ScanRange {
                    min: -1.5,
                    max: 1.5,
                    count: 13,
                },
                quadrature: QuadratureConfig::default(),
                fermi_epsilon: 0.1,
                gap_scale: 1.0,
                residual_constant: None,
            },
        }
    }

    #[test]
    fn summary_lines_render_signs_and_verdict() {
        assert_eq!(
            fake_report(1, 1).summary_line(),
            "bulk=+1 edge=+1 BEC: HOLDS"
        );
        assert_eq!(
            fake_report(2, -2).summary_line(),
            "bulk=+2 edge=-2 BEC: FAILS"
        );
    }

    #[test]
    fn full_run_agrees_and_serializes_identically() {
        let spec = dirac_tanh();
        let quad = QuadratureConfig::default();
        let grid = Grid1d::new(12.0, 0.05).unwrap();
        let scan = ScanRange {
            min: -1.5,
            max: 1.5,
            count: 13,
        };
        let run = bec_run(&spec, &quad, grid, &scan, 0.1).unwrap();
        let report = &run.report;
        assert_eq!(report.bulk.chern_rounded, 1);
        assert_eq!(report.edge_index, 1);
        assert!(report.bec_holds);
        assert_eq!(report.summary_line(), "bulk=+1 edge=+1 BEC: HOLDS");
        assert_eq!(report.family_count, 1);
        assert_eq!(report.per_channel.len(), 1);
        assert_eq!(report.per_channel[0].intersections, -1);
        let restated: i32 = report.per_channel.iter().map(|c| c.intersections).sum();
        assert_eq!(report.edge_index, -restated);
        let constant = report.diagnostics.residual_constant.unwrap();
        assert!(
            constant.is_finite() && constant > 0.0 && constant < 10.0,
            "implausible residual constant {constant}"
        );

        let again = bec_run(&spec, &quad, grid, &scan, 0.1).unwrap();
        assert_eq!(
            report.to_json_bytes().unwrap(),
            again.report.to_json_bytes().unwrap(),
            "identical configurations must serialize identically"
        );
    }

    fn synthetic_channel(id: usize, samples: &[(f64, f64)]) -> EdgeChannel {
        EdgeChannel {
            id,
            samples: samples
                .iter()
                .map(|&(k1, omega)| ChannelSample {
                    k1,
                    omega,
                    interior_fraction: 0.99,
                })
                .collect(),
            start: BranchEnd::ScanBoundary,
            end: BranchEnd::ScanBoundary,
            family: id,
        }
    }

    #[test]
    fn channel_csv_lists_every_sample_and_headers_alone_when_empty() {
        let channels = vec![
            synthetic_channel(0, &[(-0.5, 0.5), (0.5, -0.5)]),
            synthetic_channel(1, &[(0.5, 1.0)]),
        ];
        let mut buf = Vec::new();
        write_channels_csv(&mut buf, &channels).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "channel_id,k1,omega");
        assert_eq!(lines[1], "0,-0.5,0.5");
        assert_eq!(lines[3], "1,0.5,1");

        let mut empty = Vec::new();
        write_channels_csv(&mut empty, &[]).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), "channel_id,k1,omega\n");
    }

    fn synthetic_fiber(k1: f64, states: Vec<FiberState>) -> FiberSpectrum {
        FiberSpectrum {
            k1,
            gap_edge: (k1 * k1 + 1.0).sqrt(),
            flat_exclusion: 0.0,
            states,
            flat_band_count: 0,
            discrete_edge_upper: None,
            discrete_edge_lower: None,
        }
    }

    fn synthetic_state(omega: f64, class: StateClass) -> FiberState {
        FiberState {
            omega,
            interior_fraction: 0.95,
            outer_fraction: 0.01,
            class,
            vector: vec![1.0],
        }
    }

    #[test]
    fn fiber_csv_flags_bound_rows() {
        let fibers = vec![synthetic_fiber(
            0.25,
            vec![
                synthetic_state(-0.25, StateClass::Bound),
                synthetic_state(0.9, StateClass::BoundaryArtifact),
            ],
        )];
        let mut buf = Vec::new();
        write_fibers_csv(&mut buf, &fibers).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k1,omega,bound_flag,localization");
        assert_eq!(lines[1], "0.25,-0.25,1,0.95");
        assert_eq!(lines[2], "0.25,0.9,0,0.95");
    }

    #[test]
    fn dispersion_files_align_channel_columns_with_the_scan() {
        let fibers = vec![
            synthetic_fiber(-0.5, Vec::new()),
            synthetic_fiber(0.5, Vec::new()),
        ];
        let channels = vec![synthetic_channel(0, &[(-0.5, 0.5)])];
        let fermi = FermiLine::from_fraction(1.0, 0.1).unwrap();

        let mut buf = Vec::new();
        write_dispersion_csv(&mut buf, &fibers, &channels, &fermi).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(
            rows[0],
            vec![
                "k1",
                "band_edge_upper",
                "band_edge_lower",
                "mu_epsilon",
                "channel_0"
            ]
        );
        // Sampled at k1 = -0.5 only; the other channel cell stays empty.
        assert_eq!(rows[1][4], "0.5");
        assert_eq!(rows[2][4], "");
        // No probed edges: falls back to the asymptotic thresholds.
        let gap_edge = (0.25f64 + 1.0).sqrt();
        assert_eq!(rows[1][1], format!("{gap_edge}"));
        assert_eq!(rows[1][2], format!("{}", -gap_edge));

        let mut buf = Vec::new();
        write_rescaled_dispersion_csv(&mut buf, &fibers, &channels, &fermi).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
        // The rescaling maps the upper band edge to exactly 1.
        assert_eq!(rows[1][1], "1");
        assert_eq!(rows[1][0], format!("{}", (-0.5f64).tanh()));
        assert_eq!(rows[1][4], format!("{}", 0.5 / gap_edge));
    }

    #[test]
    fn analytic_state_csv_covers_every_site() {
        let spec = dirac_tanh();
        let grid = Grid1d::new(4.0, 0.25).unwrap();
        let state = analytic_state(StateLabel::DiracLeft, &spec, 0.4, grid).unwrap();
        let mut buf = Vec::new();
        write_analytic_state_csv(&mut buf, &state).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x2,u,v");
        assert_eq!(lines.len(), 1 + grid.primary_sites());
        assert!(
            lines[lines.len() - 1].ends_with(','),
            "last primary site has no midpoint partner"
        );
    }
}
