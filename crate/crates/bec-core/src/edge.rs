//! Edge-channel bookkeeping: tracing bound states across a momentum scan,
//! merging symmetry-mirrored branches into physical families, and counting
//! signed intersections with the Fermi line.
//!
//! The edge invariant is `-Σ_j I(μ_ε, ω_j)`: minus the sum over traced
//! channels of their signed crossing counts with the reference curve
//! `μ_ε(k1) = -ε + √(k1² + m̃²)`, which hugs the lower boundary of the
//! upper essential band. Crossings inside the scan are read off sample
//! sign changes; crossings beyond the scan boundary are reconstructed
//! from the channel's asymptotic slope (the curve `μ_ε` has slope `±1`
//! at infinity, so any channel with a different limiting slope has a
//! decidable tail, and the near-parallel case is settled by the affine
//! continuation of the channel).

use serde::{Deserialize, Serialize};

use crate::error::{BecError, Result};
use crate::fiber::FiberSpectrum;
use crate::model::C64;
use crate::oracle::merging_point;

/// One bound-state sample of a traced channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub k1: f64,
    pub omega: f64,
    pub interior_fraction: f64,
}

/// Why a traced channel stops at one of its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchEnd {
    /// The channel reaches the end of the scanned momentum range.
    ScanBoundary,
    /// The channel approaches the essential band with the given sign and
    /// its bound character dissolves there.
    MergesIntoBand { sign: i8 },
    /// The channel stops away from any band: lost localization without an
    /// obvious destination (diagnostic; not expected for these models).
    Delocalizes,
}

/// A maximal run of bound states linked across consecutive fibers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeChannel {
    /// Stable identifier (order of first appearance, then omega).
    pub id: usize,
    /// Samples in ascending `k1`.
    pub samples: Vec<ChannelSample>,
    /// Endpoint character at the smallest sampled `k1`.
    pub start: BranchEnd,
    /// Endpoint character at the largest sampled `k1`.
    pub end: BranchEnd,
    /// Family identifier after mirror merging: branches related by the
    /// spectral mirror `(k1, ω) -> (-k1, -ω)` share a family.
    pub family: usize,
}

impl EdgeChannel {
    pub fn first(&self) -> ChannelSample {
        self.samples[0]
    }

    pub fn last(&self) -> ChannelSample {
        *self.samples.last().expect("channels are non-empty")
    }
}

/// Minimum eigenvector overlap for linking a bound state to a channel.
/// Bound states within one fiber are orthonormal, so at most one state
/// can exceed any threshold above `1/√2` against a given predecessor:
/// links at this threshold are automatically unambiguous.
const LINK_OVERLAP_MIN: f64 = 0.8;

/// A channel endpoint this close (relatively) to the essential band is
/// deemed to merge into it.
const MERGE_PROXIMITY: f64 = 0.8;

/// Traces bound states across a scanned family of fibers into channels.
///
/// Linking is greedy by descending eigenvector overlap with the channel's
/// most recent vector; a bound state that matches no active channel opens
/// a new one. Interior endpoints are classified by proximity to the
/// essential band; finally, mirror-related branches are merged into
/// families (the channel count reported for a model counts families, not
/// branches, since the spectral mirror symmetry makes `(k1, ω)` and
/// `(-k1, -ω)` the same physical dispersion).
pub fn trace_channels(fibers: &[FiberSpectrum]) -> Vec<EdgeChannel> {
    struct Active {
        id: usize,
        samples: Vec<ChannelSample>,
        start: BranchEnd,
        last_vector: Vec<f64>,
        last_fiber: usize,
    }

    let mut active: Vec<Active> = Vec::new();
    let mut finished: Vec<EdgeChannel> = Vec::new();
    let last_fiber_index = fibers.len().saturating_sub(1);

    let close = |a: Active, fibers: &[FiberSpectrum]| -> EdgeChannel {
        let end = if a.last_fiber == last_fiber_index {
            BranchEnd::ScanBoundary
        } else {
            interior_end(&a.samples[a.samples.len() - 1], fibers[a.last_fiber].gap_edge)
        };
        EdgeChannel {
            id: a.id,
            samples: a.samples,
            start: a.start,
            end,
            family: a.id,
        }
    };

    for (fi, fiber) in fibers.iter().enumerate() {
        let bound: Vec<_> = fiber.bound_states().collect();
        // Overlaps between every active channel and every bound state.
        let mut links: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, ch) in active.iter().enumerate() {
            for (si, st) in bound.iter().enumerate() {
                let overlap: f64 = ch
                    .last_vector
                    .iter()
                    .zip(&st.vector)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .abs();
                if overlap >= LINK_OVERLAP_MIN {
                    links.push((overlap, ci, si));
                }
            }
        }
        links.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut channel_used = vec![false; active.len()];
        let mut state_used = vec![false; bound.len()];
        for (_, ci, si) in links {
            if channel_used[ci] || state_used[si] {
                continue;
            }
            channel_used[ci] = true;
            state_used[si] = true;
            let st = bound[si];
            active[ci].samples.push(ChannelSample {
                k1: fiber.k1,
                omega: st.omega,
                interior_fraction: st.interior_fraction,
            });
            active[ci].last_vector = st.vector.clone();
            active[ci].last_fiber = fi;
        }
        // Channels that found no continuation terminate before this fiber.
        let mut still_active = Vec::new();
        for (ci, ch) in active.into_iter().enumerate() {
            if channel_used[ci] {
                still_active.push(ch);
            } else {
                finished.push(close(ch, fibers));
            }
        }
        active = still_active;
        // Unmatched bound states open new channels.
        for (si, st) in bound.iter().enumerate() {
            if state_used[si] {
                continue;
            }
            let start = if fi == 0 {
                BranchEnd::ScanBoundary
            } else {
                interior_end(
                    &ChannelSample {
                        k1: fiber.k1,
                        omega: st.omega,
                        interior_fraction: st.interior_fraction,
                    },
                    fiber.gap_edge,
                )
            };
            active.push(Active {
                id: usize::MAX, // assigned after sorting
                samples: vec![ChannelSample {
                    k1: fiber.k1,
                    omega: st.omega,
                    interior_fraction: st.interior_fraction,
                }],
                start,
                last_vector: st.vector.clone(),
                last_fiber: fi,
            });
        }
    }
    for ch in active {
        finished.push(close(ch, fibers));
    }
    // Deterministic ids: order of first sample (k1, then omega).
    finished.sort_by(|a, b| {
        a.first()
            .k1
            .total_cmp(&b.first().k1)
            .then(a.first().omega.total_cmp(&b.first().omega))
    });
    for (i, ch) in finished.iter_mut().enumerate() {
        ch.id = i;
        ch.family = i;
    }
    assign_families(&mut finished);
    finished
}

fn interior_end(sample: &ChannelSample, gap_edge: f64) -> BranchEnd {
    if sample.omega.abs() >= MERGE_PROXIMITY * gap_edge {
        BranchEnd::MergesIntoBand {
            sign: if sample.omega > 0.0 { 1 } else { -1 },
        }
    } else {
        BranchEnd::Delocalizes
    }
}

/// Eigenvalue tolerance for recognizing mirror partners: the mirror is an
/// exact similarity of the discretized operators, so paired eigenvalues
/// agree to solver precision.
const MIRROR_TOL: f64 = 1e-8;

fn assign_families(channels: &mut [EdgeChannel]) {
    let is_mirror_pair = |a: &EdgeChannel, b: &EdgeChannel| -> bool {
        if a.samples.len() != b.samples.len() {
            return false;
        }
        let n = a.samples.len();
        (0..n).all(|m| {
            let s = a.samples[m];
            let t = b.samples[n - 1 - m];
            (s.k1 + t.k1).abs() <= 1e-9 && (s.omega + t.omega).abs() <= MIRROR_TOL
        })
    };
    for i in 0..channels.len() {
        for j in (i + 1)..channels.len() {
            if channels[j].family != channels[j].id {
                continue; // already merged into an earlier family
            }
            if is_mirror_pair(&channels[i], &channels[j]) {
                channels[j].family = channels[i].family;
            }
        }
    }
}

/// Number of distinct families among the traced channels.
pub fn family_count(channels: &[EdgeChannel]) -> usize {
    let mut families: Vec<usize> = channels.iter().map(|c| c.family).collect();
    families.sort_unstable();
    families.dedup();
    families.len()
}

/// The reference curve `μ_ε(k1) = -ε + √(k1² + m̃²)`, running just below
/// the upper essential band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermiLine {
    pub epsilon: f64,
    pub gap_scale: f64,
}

impl FermiLine {
    /// `epsilon = fraction · m̃` with `fraction` strictly inside `(0, 1)`,
    /// so the curve stays inside the gap for every momentum.
    pub fn from_fraction(gap_scale: f64, fraction: f64) -> Result<Self> {
        if gap_scale <= 0.0 || !gap_scale.is_finite() {
            return Err(BecError::InvalidConfig {
                reason: format!("gap scale must be positive, got {gap_scale}"),
            });
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(BecError::InvalidConfig {
                reason: format!("fermi epsilon fraction must lie in (0, 1), got {fraction}"),
            });
        }
        Ok(FermiLine {
            epsilon: fraction * gap_scale,
            gap_scale,
        })
    }

    pub fn mu(&self, k1: f64) -> f64 {
        -self.epsilon + (k1 * k1 + self.gap_scale * self.gap_scale).sqrt()
    }
}

/// One signed crossing of a channel with the Fermi line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    /// Crossing momentum (linear interpolation between samples; for a
    /// tail crossing, the scan endpoint it was reconstructed from).
    pub k1: f64,
    /// `+1` if `ω - μ_ε` increases through zero, `-1` if it decreases.
    pub sign: i8,
    /// True when the crossing lies beyond the scan and was reconstructed
    /// from the channel's asymptotic slope.
    pub beyond_scan: bool,
}

/// Signed intersection count of one channel with the Fermi line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelIntersections {
    pub channel: usize,
    pub crossings: Vec<Crossing>,
    pub total: i32,
}

/// Slopes within this distance of the asymptotic Fermi-line slope `±1`
/// are treated as parallel and settled by the affine continuation.
const PARALLEL_TOL: f64 = 0.1;

/// Counts the signed crossings of `channel` with `fermi`.
///
/// Interior crossings come from sign changes of `g = ω - μ_ε` between
/// consecutive samples. At a `ScanBoundary` endpoint the sign of `g` at
/// infinity is reconstructed: the Fermi line has slope `∓1` as
/// `k1 → ∓∞`, so a channel with limiting slope `s` has
/// `g → sgn(∓s - 1) · ∞`; when the channel is parallel to the line
/// (`|∓s - 1| <` [`PARALLEL_TOL`]) the finite limit `ω ± k1 + ε` of the
/// affine continuation decides. A sign difference between the endpoint
/// sample and the reconstructed limit is one crossing in the tail.
///
/// # Errors
///
/// [`BecError::TangentialCrossing`] when a sample sits on the line to
/// `1e-12`, when a sign change has slope difference below `1e-6`, or when
/// a parallel tail's affine limit is itself indistinguishable from zero:
/// the signed count is then not determined by the data and the scan (or
/// `ε`) must change.
pub fn intersection_number(
    channel: &EdgeChannel,
    fermi: &FermiLine,
) -> Result<ChannelIntersections> {
    let n = channel.samples.len();
    let g: Vec<f64> = channel
        .samples
        .iter()
        .map(|s| s.omega - fermi.mu(s.k1))
        .collect();
    for (s, gi) in channel.samples.iter().zip(&g) {
        if gi.abs() < 1e-12 {
            return Err(BecError::TangentialCrossing {
                k1: s.k1,
                slope_gap: 0.0,
            });
        }
    }
    let mut crossings = Vec::new();
    for i in 0..n.saturating_sub(1) {
        if g[i] * g[i + 1] < 0.0 {
            let (k0, k1) = (channel.samples[i].k1, channel.samples[i + 1].k1);
            let slope_gap = (g[i + 1] - g[i]) / (k1 - k0);
            if slope_gap.abs() < 1e-6 {
                return Err(BecError::TangentialCrossing {
                    k1: 0.5 * (k0 + k1),
                    slope_gap,
                });
            }
            let t = g[i] / (g[i] - g[i + 1]);
            crossings.push(Crossing {
                k1: k0 + t * (k1 - k0),
                sign: if slope_gap > 0.0 { 1 } else { -1 },
                beyond_scan: false,
            });
        }
    }
    // Tails exist only where the channel reaches the scan boundary; an
    // interior endpoint means the channel itself ends there.
    if channel.start == BranchEnd::ScanBoundary && n >= 2 {
        let s0 = channel.samples[0];
        let s1 = channel.samples[1];
        let slope = (s1.omega - s0.omega) / (s1.k1 - s0.k1);
        let limit = tail_limit(-slope - 1.0, s0.omega + s0.k1 + fermi.epsilon, s0.k1)?;
        if limit * g[0] < 0.0 {
            crossings.insert(
                0,
                Crossing {
                    k1: s0.k1,
                    sign: if g[0] > 0.0 { 1 } else { -1 },
                    beyond_scan: true,
                },
            );
        }
    }
    if channel.end == BranchEnd::ScanBoundary && n >= 2 {
        let s0 = channel.samples[n - 1];
        let s1 = channel.samples[n - 2];
        let slope = (s0.omega - s1.omega) / (s0.k1 - s1.k1);
        let limit = tail_limit(slope - 1.0, s0.omega - s0.k1 + fermi.epsilon, s0.k1)?;
        if limit * g[n - 1] < 0.0 {
            crossings.push(Crossing {
                k1: s0.k1,
                sign: if limit > 0.0 { 1 } else { -1 },
                beyond_scan: true,
            });
        }
    }
    let total = crossings.iter().map(|c| c.sign as i32).sum();
    Ok(ChannelIntersections {
        channel: channel.id,
        crossings,
        total,
    })
}

/// Sign of `g` at infinity from the slope gap, falling back to the affine
/// limit when the channel runs parallel to the Fermi line.
fn tail_limit(slope_gap: f64, affine_limit: f64, at_k1: f64) -> Result<f64> {
    if slope_gap.abs() >= PARALLEL_TOL {
        Ok(slope_gap.signum())
    } else if affine_limit.abs() >= 1e-9 {
        Ok(affine_limit.signum())
    } else {
        Err(BecError::TangentialCrossing {
            k1: at_k1,
            slope_gap,
        })
    }
}

/// The traced edge data of one scan: channels, their crossing counts, and
/// the resulting invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeIndexResult {
    pub channels: Vec<EdgeChannel>,
    pub intersections: Vec<ChannelIntersections>,
    /// Number of physical channel families (mirror branches merged).
    pub family_count: usize,
    /// The edge invariant `-Σ_j I(μ_ε, ω_j)`.
    pub edge_index: i32,
    pub fermi: FermiLine,
}

/// Traces channels over scanned fibers and evaluates the edge invariant
/// against the Fermi line `μ_ε` with `ε = fraction · m̃`.
pub fn edge_index(
    fibers: &[FiberSpectrum],
    gap_scale: f64,
    fermi_fraction: f64,
) -> Result<EdgeIndexResult> {
    let fermi = FermiLine::from_fraction(gap_scale, fermi_fraction)?;
    let channels = trace_channels(fibers);
    let mut intersections = Vec::with_capacity(channels.len());
    let mut sum = 0i32;
    for ch in &channels {
        let ix = intersection_number(ch, &fermi)?;
        sum += ix.total;
        intersections.push(ix);
    }
    Ok(EdgeIndexResult {
        family_count: family_count(&channels),
        channels,
        intersections,
        edge_index: -sum,
        fermi,
    })
}

/// Closed-form edge index of the half-plane problem with boundary phase
/// `z`: the number of channel-band merging points with positive merging
/// frequency. The channel dispersion is affine with slope `-Re z`, so it
/// detaches from the bound region at the single merging momentum
/// `k1* = -m⁺ Re z / Im z` with frequency `ω* = m⁺ / Im z`; the index is
/// `1` exactly when `ω* > 0`, i.e. when `Im z > 0`.
///
/// # Errors
///
/// [`BecError::BoundaryCaseImZZero`] for `|Im z| < 1e-9`: the channel is
/// then bound for all momenta or none, the merging point escapes to
/// infinity, and the index is not defined.
pub fn halfplane_edge_index(z: C64, m_plus: f64) -> Result<i32> {
    if z.im.abs() < 1e-9 {
        return Err(BecError::BoundaryCaseImZZero { re: z.re, im: z.im });
    }
    let (_k1_star, omega_star) = merging_point(z, m_plus)?;
    Ok(if omega_star > 0.0 { 1 } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::{scan_fibers, CensusParams, ScanRange};
    use crate::model::{Grid1d, ModelSpec, Sector};
    use crate::profile::Profile;

    fn fermi01() -> FermiLine {
        FermiLine::from_fraction(1.0, 0.1).unwrap()
    }

    fn grid81() -> Vec<f64> {
        ScanRange {
            min: -2.0,
            max: 2.0,
            count: 81,
        }
        .values()
    }

    fn synthetic(
        omega: impl Fn(f64) -> f64,
        k1s: &[f64],
        start: BranchEnd,
        end: BranchEnd,
    ) -> EdgeChannel {
        EdgeChannel {
            id: 0,
            samples: k1s
                .iter()
                .map(|&k| ChannelSample {
                    k1: k,
                    omega: omega(k),
                    interior_fraction: 1.0,
                })
                .collect(),
            start,
            end,
            family: 0,
        }
    }

    #[test]
    fn fermi_line_validates_and_evaluates() {
        let f = FermiLine::from_fraction(2.0, 0.25).unwrap();
        assert!((f.epsilon - 0.5).abs() < 1e-15);
        assert!((f.mu(0.0) - 1.5).abs() < 1e-15);
        assert!((f.mu(2.0) - (8.0f64.sqrt() - 0.5)).abs() < 1e-15);
        assert!(FermiLine::from_fraction(1.0, 0.0).is_err());
        assert!(FermiLine::from_fraction(1.0, 1.0).is_err());
        assert!(FermiLine::from_fraction(-1.0, 0.5).is_err());
    }

    #[test]
    fn left_moving_channel_crosses_once_in_the_left_tail() {
        // ω = -k1 runs parallel to μ at -∞; the affine limit ε > 0 puts
        // the true crossing beyond the scan. Exact crossing of the
        // continuum expressions: -k1 + ε = √(k1²+1) at k1 ≈ -4.95.
        let ch = synthetic(
            |k| -k,
            &grid81(),
            BranchEnd::ScanBoundary,
            BranchEnd::ScanBoundary,
        );
        let ix = intersection_number(&ch, &fermi01()).unwrap();
        assert_eq!(ix.total, -1);
        assert_eq!(ix.crossings.len(), 1);
        assert!(ix.crossings[0].beyond_scan);
        assert_eq!(ix.crossings[0].k1, -2.0);
        assert_eq!(ix.crossings[0].sign, -1);
    }

    #[test]
    fn right_moving_channel_crosses_once_in_the_right_tail() {
        let ch = synthetic(
            |k| k,
            &grid81(),
            BranchEnd::ScanBoundary,
            BranchEnd::ScanBoundary,
        );
        let ix = intersection_number(&ch, &fermi01()).unwrap();
        assert_eq!(ix.total, 1);
        assert_eq!(ix.crossings.len(), 1);
        assert!(ix.crossings[0].beyond_scan);
        assert_eq!(ix.crossings[0].sign, 1);
    }

    #[test]
    fn flat_channel_crosses_in_the_interior() {
        // ω ≡ 1 meets μ where √(k1²+1) = 1 + ε, i.e. k1* = √(2ε+ε²).
        let k1s: Vec<f64> = grid81().into_iter().filter(|&k| k >= 0.1).collect();
        let ch = synthetic(
            |_| 1.0,
            &k1s,
            BranchEnd::MergesIntoBand { sign: 1 },
            BranchEnd::ScanBoundary,
        );
        let ix = intersection_number(&ch, &fermi01()).unwrap();
        assert_eq!(ix.total, -1);
        assert_eq!(ix.crossings.len(), 1);
        assert!(!ix.crossings[0].beyond_scan);
        let expect = (2.0f64 * 0.1 + 0.01).sqrt();
        assert!(
            (ix.crossings[0].k1 - expect).abs() < 0.05,
            "crossing at {} vs {}",
            ix.crossings[0].k1,
            expect
        );
        // The mirrored branch stays below the line entirely.
        let k1s: Vec<f64> = grid81().into_iter().filter(|&k| k <= -0.1).collect();
        let mirror = synthetic(
            |_| -1.0,
            &k1s,
            BranchEnd::ScanBoundary,
            BranchEnd::MergesIntoBand { sign: -1 },
        );
        let ix = intersection_number(&mirror, &fermi01()).unwrap();
        assert_eq!(ix.total, 0);
        assert!(ix.crossings.is_empty());
    }

    #[test]
    fn no_tail_applies_at_interior_endpoints() {
        // Same flat channel, but pretending both ends are interior: the
        // right tail (which contributes nothing anyway) and the left tail
        // must not be consulted. Compare against a ScanBoundary version
        // of a channel whose tail would add a crossing: ω = -k1 on half
        // the range, ending in the interior on the right.
        let k1s: Vec<f64> = grid81().into_iter().filter(|&k| k <= 0.0).collect();
        let with_tail = synthetic(
            |k| -k,
            &k1s,
            BranchEnd::ScanBoundary,
            BranchEnd::MergesIntoBand { sign: 1 },
        );
        let ix = intersection_number(&with_tail, &fermi01()).unwrap();
        assert_eq!(ix.total, -1, "left tail still applies");
        let without_tail = synthetic(
            |k| -k,
            &k1s,
            BranchEnd::Delocalizes,
            BranchEnd::MergesIntoBand { sign: 1 },
        );
        let ix = intersection_number(&without_tail, &fermi01()).unwrap();
        assert_eq!(ix.total, 0, "no tail at interior endpoints");
    }

    #[test]
    fn sitting_on_the_line_is_rejected_as_tangential() {
        let f = fermi01();
        let ch = synthetic(
            |k| f.mu(k),
            &grid81(),
            BranchEnd::ScanBoundary,
            BranchEnd::ScanBoundary,
        );
        assert!(matches!(
            intersection_number(&ch, &f),
            Err(BecError::TangentialCrossing { .. })
        ));
    }

    #[test]
    fn mirror_branches_share_a_family() {
        let k_right: Vec<f64> = grid81().into_iter().filter(|&k| k >= 0.1).collect();
        let k_left: Vec<f64> = grid81().into_iter().filter(|&k| k <= -0.1).collect();
        let mut channels = vec![
            synthetic(
                |_| -1.0,
                &k_left,
                BranchEnd::ScanBoundary,
                BranchEnd::MergesIntoBand { sign: -1 },
            ),
            synthetic(
                |k| -k,
                &grid81(),
                BranchEnd::ScanBoundary,
                BranchEnd::ScanBoundary,
            ),
            synthetic(
                |_| 1.0,
                &k_right,
                BranchEnd::MergesIntoBand { sign: 1 },
                BranchEnd::ScanBoundary,
            ),
        ];
        for (i, c) in channels.iter_mut().enumerate() {
            c.id = i;
            c.family = i;
        }
        assign_families(&mut channels);
        assert_eq!(channels[0].family, channels[2].family);
        assert_eq!(channels[1].family, 1);
        assert_eq!(family_count(&channels), 2);
    }

    #[test]
    fn two_band_scan_yields_one_channel_and_index_one() {
        let spec = ModelSpec::new(
            Sector::Dirac,
            Profile::Tanh {
                asymptote_minus: -1.0,
                asymptote_plus: 1.0,
                length_scale: 1.0,
            },
        )
        .unwrap();
        let grid = Grid1d::new(12.0, 0.05).unwrap();
        let params = CensusParams::for_model(&spec, grid);
        let range = ScanRange {
            min: -1.5,
            max: 1.5,
            count: 13,
        };
        let fibers = scan_fibers(&spec, grid, &range, &params).unwrap();
        let result = edge_index(&fibers, 1.0, 0.1).unwrap();
        assert_eq!(result.family_count, 1, "channels: {:?}", result.channels);
        assert_eq!(result.edge_index, 1);
        let ch = &result.channels[0];
        assert_eq!(ch.samples.len(), 13);
        assert_eq!(ch.start, BranchEnd::ScanBoundary);
        assert_eq!(ch.end, BranchEnd::ScanBoundary);
        for s in &ch.samples {
            assert!((s.omega + s.k1).abs() < 2e-2, "sample {s:?}");
        }
    }

    #[test]
    fn three_band_scan_yields_two_families_and_index_two() {
        let spec = ModelSpec::new(Sector::ShallowWater, Profile::Sign { amplitude: 1.0 }).unwrap();
        let grid = Grid1d::new(16.0, 0.01).unwrap();
        let params = CensusParams::for_model(&spec, grid);
        let range = ScanRange {
            min: -1.5,
            max: 1.5,
            count: 13,
        };
        let fibers = scan_fibers(&spec, grid, &range, &params).unwrap();
        let result = edge_index(&fibers, 1.0, 0.1).unwrap();
        assert_eq!(
            result.family_count,
            2,
            "channels: {:#?}",
            result
                .channels
                .iter()
                .map(|c| (c.id, c.family, c.first(), c.last()))
                .collect::<Vec<_>>()
        );
        assert_eq!(result.edge_index, 2);
    }

    #[test]
    fn halfplane_index_counts_positive_merging_frequencies() {
        let i = C64::new(0.0, 1.0);
        assert_eq!(halfplane_edge_index(i, 1.0).unwrap(), 1);
        assert_eq!(halfplane_edge_index(-i, 1.0).unwrap(), 0);
        let oblique = C64::from_polar(1.0, std::f64::consts::FRAC_PI_6);
        assert_eq!(halfplane_edge_index(oblique, 2.0).unwrap(), 1);
        assert_eq!(halfplane_edge_index(oblique.conj(), 2.0).unwrap(), 0);
        assert!(matches!(
            halfplane_edge_index(C64::new(1.0, 0.0), 1.0),
            Err(BecError::BoundaryCaseImZZero { .. })
        ));
    }
}
