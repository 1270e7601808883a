//! Bulk topology: Berry curvature of the positive band, half-Chern numbers
//! of the two asymptotic symbols, the glued bulk index, and the independent
//! boundary-map degree.
//!
//! The half-Chern number of the symbol frozen at one asymptote is
//! `(1/2π) ∫ F d²k` over the momentum plane, where `F` is the Berry
//! curvature of the positive-band projector. The plane is compactified by
//! the radial substitution `r = ρ/(1-ρ)` and the integral evaluated with
//! deterministic adaptive Gauss–Kronrod panels. The bulk index is the
//! difference of the two half-Chern numbers (the gluing orientation flips
//! the sign of the second chart), and [`boundary_degree`] recomputes the
//! same integer as the winding of the in-plane components of the unit
//! symbol vector along a large equatorial loop — two routes to one integer.

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{BecError, Result};
use crate::model::{spin1_s1, spin1_s2, spin1_s3, C64, ModelSpec, Sector};

/// Orientation chart on the compactified momentum sphere. The minus chart
/// reverses the `k2` direction, which flips the orientation of area and
/// loop traversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hemisphere {
    Plus,
    Minus,
}

/// Adaptive-quadrature budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Absolute error target for each half-Chern integral.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Maximum number of leaf panels before giving up.
    #[serde(default = "default_max_panels")]
    pub max_panels: usize,
}

fn default_tol() -> f64 {
    1e-7
}

fn default_max_panels() -> usize {
    1 << 20
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            tol: default_tol(),
            max_panels: default_max_panels(),
        }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(BecError::InvalidConfig {
                reason: format!("quadrature tol must be positive, got {}", self.tol),
            });
        }
        if self.max_panels < 4 {
            return Err(BecError::InvalidConfig {
                reason: format!("max_panels must be at least 4, got {}", self.max_panels),
            });
        }
        Ok(())
    }
}

/// Berry curvature evaluator for one sector frozen at a constant mass (or
/// Coriolis) value, tagged with the orientation chart.
#[derive(Debug, Clone, Copy)]
pub struct CurvatureField {
    pub sector: Sector,
    pub mass: f64,
    pub hemisphere: Hemisphere,
}

impl CurvatureField {
    /// Evaluates the curvature at `(k1, k2)` in this chart.
    pub fn eval(&self, k1: f64, k2: f64) -> Result<f64> {
        match self.hemisphere {
            Hemisphere::Plus => curvature_plus_chart(self.sector, self.mass, k1, k2),
            // The chart flip (k1, k2) ↦ (k1, -k2) reverses orientation.
            Hemisphere::Minus => {
                Ok(-curvature_plus_chart(self.sector, self.mass, k1, -k2)?)
            }
        }
    }
}

/// Berry curvature `F(k)` of the positive band of the planar symbol at
/// momentum `k`, for the sector frozen at `mass`.
///
/// Computed as the gauge-invariant projection-commutator trace
/// `Im tr(P [∂1P, ∂2P])`, normalized so that `(1/2π) ∫ F d²k` equals the
/// half-Chern number (+1/2 for the two-band sector with positive mass). The
/// projector derivatives are closed-form: the two-band projector is linear
/// in the unit symbol vector `e = d/|d|`, and the three-band positive-band
/// projector is the matrix polynomial `(A² + A)/2` in `A = (d·S)/|d|`, so
/// no eigenvector derivatives are needed in either sector.
///
/// `hemisphere = Minus` evaluates in the orientation-reversed chart
/// `(k1, k2) ↦ (k1, -k2)`, which multiplies the curvature by the chart
/// orientation sign.
///
/// # Errors
///
/// [`BecError::GaplessPoint`] if the symbol gap closes at `k` (only
/// possible when `mass = 0`).
pub fn berry_curvature(
    sector: Sector,
    mass: f64,
    k1: f64,
    k2: f64,
    hemisphere: Hemisphere,
) -> Result<f64> {
    CurvatureField {
        sector,
        mass,
        hemisphere,
    }
    .eval(k1, k2)
}

fn curvature_plus_chart(sector: Sector, mass: f64, k1: f64, k2: f64) -> Result<f64> {
    let norm = (k1 * k1 + k2 * k2 + mass * mass).sqrt();
    if norm < 1e-14 {
        return Err(BecError::GaplessPoint {
            k1,
            k2,
            separation: norm,
        });
    }
    let e = [k1 / norm, k2 / norm, mass / norm];
    // ∂_a e_i = (δ_ai - e_i e_a)/|d| for a ∈ {1, 2}.
    let de1 = [
        (1.0 - e[0] * e[0]) / norm,
        (-e[1] * e[0]) / norm,
        (-e[2] * e[0]) / norm,
    ];
    let de2 = [
        (-e[0] * e[1]) / norm,
        (1.0 - e[1] * e[1]) / norm,
        (-e[2] * e[1]) / norm,
    ];
    match sector {
        Sector::Dirac => {
            // P = (I + e·σ)/2, ∂aP = (∂a e · σ)/2.
            let p = half_identity2() + sigma_dot(&e) * C64::new(0.5, 0.0);
            let dp1 = sigma_dot(&de1) * C64::new(0.5, 0.0);
            let dp2 = sigma_dot(&de2) * C64::new(0.5, 0.0);
            let comm = dp1 * dp2 - dp2 * dp1;
            Ok((p * comm).trace().im)
        }
        Sector::ShallowWater => {
            // A = e·S; P = (A² + A)/2; ∂aA = (S_a - A e_a)/|d|;
            // ∂aP = (∂aA·A + A·∂aA + ∂aA)/2.
            let a = s_dot(&e);
            let p = (a * a + a) * C64::new(0.5, 0.0);
            let inv = C64::new(1.0 / norm, 0.0);
            let da1 = (spin1_s1() - a * C64::new(e[0], 0.0)) * inv;
            let da2 = (spin1_s2() - a * C64::new(e[1], 0.0)) * inv;
            let dp1 = (da1 * a + a * da1 + da1) * C64::new(0.5, 0.0);
            let dp2 = (da2 * a + a * da2 + da2) * C64::new(0.5, 0.0);
            let comm = dp1 * dp2 - dp2 * dp1;
            Ok((p * comm).trace().im)
        }
    }
}

fn half_identity2() -> Matrix2<C64> {
    Matrix2::identity() * C64::new(0.5, 0.0)
}

fn sigma_dot(v: &[f64; 3]) -> Matrix2<C64> {
    Matrix2::new(
        C64::new(v[2], 0.0),
        C64::new(v[0], -v[1]),
        C64::new(v[0], v[1]),
        C64::new(-v[2], 0.0),
    )
}

fn s_dot(v: &[f64; 3]) -> Matrix3<C64> {
    spin1_s1() * C64::new(v[0], 0.0)
        + spin1_s2() * C64::new(v[1], 0.0)
        + spin1_s3() * C64::new(v[2], 0.0)
}

/// Half-Chern number `(1/2π) ∫ F d²k` of the positive band for the sector
/// frozen at `mass`, integrated over the compactified plane in the plus
/// chart.
///
/// Deterministic: panel refinement order, evaluation order, and the final
/// compensated summation are all fixed, so repeated calls return
/// bit-identical values.
///
/// # Errors
///
/// [`BecError::InvalidConfig`] for `mass = 0` (the symbol is gapless) or a
/// bad budget; [`BecError::QuadratureDivergence`] if the panel budget is
/// exhausted above `config.tol`.
pub fn chern_half(sector: Sector, mass: f64, config: &QuadratureConfig) -> Result<f64> {
    Ok(chern_half_with_estimate(sector, mass, config)?.0)
}

/// [`chern_half`] plus its absolute error estimate and leaf-panel count.
pub fn chern_half_with_estimate(
    sector: Sector,
    mass: f64,
    config: &QuadratureConfig,
) -> Result<(f64, f64, usize)> {
    config.validate()?;
    if mass == 0.0 || !mass.is_finite() {
        return Err(BecError::InvalidConfig {
            reason: format!("half-Chern number needs a nonzero finite mass, got {mass}"),
        });
    }
    // Transformed integrand: k = (r cosθ, r sinθ), r = ρ/(1-ρ),
    // dk² = r dr dθ, dr/dρ = (1-ρ)^{-2}.
    let f = |rho: f64, theta: f64| -> Result<f64> {
        let one_m = 1.0 - rho;
        let r = rho / one_m;
        let k1 = r * theta.cos();
        let k2 = r * theta.sin();
        let fval = curvature_plus_chart(sector, mass, k1, k2)?;
        Ok(fval * r / (one_m * one_m))
    };
    let (integral, err, panels) = adaptive_2d(
        &f,
        (0.0, 1.0),
        (0.0, std::f64::consts::TAU),
        config.tol * std::f64::consts::TAU, // tol on the raw integral
        config.max_panels,
    )?;
    Ok((
        integral / std::f64::consts::TAU,
        err / std::f64::consts::TAU,
        panels,
    ))
}

/// Bulk index and its cross-checks, as produced by [`bulk_index`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkIndexResult {
    /// Half-Chern number of the symbol frozen at the `x2 → +∞` asymptote.
    pub c_half_plus: f64,
    /// Half-Chern number of the symbol frozen at the `x2 → -∞` asymptote.
    pub c_half_minus: f64,
    /// Glued value `c_half_plus - c_half_minus` (the minus chart enters
    /// with reversed orientation).
    pub chern_glued: f64,
    /// `chern_glued` rounded to the nearest integer: the bulk index.
    pub chern_rounded: i32,
    /// Combined absolute error estimate of the two quadratures.
    pub quadrature_error_estimate: f64,
    /// Degree of the boundary map evaluated on the plus chart.
    pub degree_plus: i32,
    /// Degree of the boundary map on the minus chart, including the gluing
    /// orientation sign (so `degree_plus = -degree_minus` always).
    pub degree_minus: i32,
}

/// Computes the bulk index of an interface model: half-Chern numbers of the
/// two frozen asymptotic symbols, their glued difference, and the
/// boundary-map degrees as an independent integer cross-check.
///
/// # Errors
///
/// [`BecError::InvalidForProfile`] unless the profile is an interface
/// (non-constant with asymptotes of opposite sign); propagates
/// [`BecError::QuadratureDivergence`] from either half-Chern integral.
pub fn bulk_index(spec: &ModelSpec, config: &QuadratureConfig) -> Result<BulkIndexResult> {
    spec.profile.validate()?;
    let m_minus = spec.profile.asymptote_minus();
    let m_plus = spec.profile.asymptote_plus();
    if !spec.profile.is_interface() {
        return Err(BecError::InvalidForProfile {
            label: "bulk_index".into(),
            reason: format!(
                "needs asymptotes of opposite sign, got m- = {m_minus}, m+ = {m_plus}"
            ),
        });
    }
    let (c_plus, e_plus, _) = chern_half_with_estimate(spec.sector, m_plus, config)?;
    let (c_minus, e_minus, _) = chern_half_with_estimate(spec.sector, m_minus, config)?;
    let glued = c_plus - c_minus;
    let degree_plus = boundary_degree(spec.sector, m_plus, Hemisphere::Plus, 256)?;
    // The minus chart contributes with the gluing orientation reversed.
    let degree_minus = -boundary_degree(spec.sector, m_minus, Hemisphere::Minus, 256)?;
    Ok(BulkIndexResult {
        c_half_plus: c_plus,
        c_half_minus: c_minus,
        chern_glued: glued,
        chern_rounded: glued.round() as i32,
        quadrature_error_estimate: e_plus + e_minus,
        degree_plus,
        degree_minus,
    })
}

/// Degree of the boundary map: the winding number of the in-plane
/// components `(e1, e2)` of the unit symbol vector along the equatorial
/// loop `k(θ) = (K cosθ, ±K sinθ)` at large radius `K = 10³·max(|mass|, 1)`
/// (sign per hemisphere chart), multiplied by the sign of `e3` at the
/// enclosed pole `k = 0`. Equals `sgn(mass)` for both sectors.
///
/// # Errors
///
/// [`BecError::InvalidConfig`] for `n_samples < 64` or zero mass;
/// [`BecError::DegenerateLoop`] if the loop passes too close to a pole;
/// [`BecError::WindingResidual`] if the accumulated angle does not land
/// near an integer multiple of 2π.
pub fn boundary_degree(
    sector: Sector,
    mass: f64,
    hemisphere: Hemisphere,
    n_samples: usize,
) -> Result<i32> {
    if n_samples < 64 {
        return Err(BecError::InvalidConfig {
            reason: format!("boundary_degree needs n_samples >= 64, got {n_samples}"),
        });
    }
    if mass == 0.0 || !mass.is_finite() {
        return Err(BecError::InvalidConfig {
            reason: format!("boundary_degree needs a nonzero finite mass, got {mass}"),
        });
    }
    // Both sectors share the same coefficient vector d = (k1, k2, mass),
    // hence the same unit map; `sector` is accepted for interface symmetry
    // and future sectors with distinct symbol vectors.
    let _ = sector;
    let radius = 1e3 * mass.abs().max(1.0);
    let chart_sign = match hemisphere {
        Hemisphere::Plus => 1.0,
        Hemisphere::Minus => -1.0,
    };
    let samples: Vec<(f64, f64)> = (0..=n_samples)
        .map(|j| {
            let theta = std::f64::consts::TAU * j as f64 / n_samples as f64;
            let k1 = radius * theta.cos();
            let k2 = chart_sign * radius * theta.sin();
            let norm = (k1 * k1 + k2 * k2 + mass * mass).sqrt();
            (k1 / norm, k2 / norm)
        })
        .collect();
    let winding = winding_of_loop(&samples)?;
    // Degree = equator winding × covering sign of the enclosed pole:
    // e(0) = (0, 0, sgn(mass)).
    Ok(winding * if mass > 0.0 { 1 } else { -1 })
}

/// Winding number of a closed planar loop (first and last samples must
/// agree) by accumulated angle.
fn winding_of_loop(samples: &[(f64, f64)]) -> Result<i32> {
    let mut total = 0.0f64;
    let mut prev_angle = f64::NAN;
    for (index, &(x, y)) in samples.iter().enumerate() {
        let norm = x.hypot(y);
        if norm < 1e-8 {
            return Err(BecError::DegenerateLoop {
                min_norm: norm,
                index,
            });
        }
        let angle = y.atan2(x);
        if index > 0 {
            let mut delta = angle - prev_angle;
            // Wrap to (-π, π]: samples of a reasonable loop never jump more.
            if delta > std::f64::consts::PI {
                delta -= std::f64::consts::TAU;
            } else if delta <= -std::f64::consts::PI {
                delta += std::f64::consts::TAU;
            }
            total += delta;
        }
        prev_angle = angle;
    }
    let winding = (total / std::f64::consts::TAU).round();
    let residual = (total - winding * std::f64::consts::TAU).abs();
    if residual >= 0.1 * std::f64::consts::TAU {
        return Err(BecError::WindingResidual { residual });
    }
    Ok(winding as i32)
}

// --- Deterministic adaptive tensor-panel quadrature (Gauss-7/Kronrod-15) ---

/// Positive Kronrod-15 abscissae (descending), last entry 0.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
/// Kronrod-15 weights matching [`XGK`].
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
/// Gauss-7 weights for the embedded rule (nodes XGK[1], XGK[3], XGK[5], 0).
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// All 15 nodes on [-1, 1] with Kronrod and (mostly zero) Gauss weights.
fn kronrod_nodes() -> ([f64; 15], [f64; 15], [f64; 15]) {
    let mut t = [0.0f64; 15];
    let mut wk = [0.0f64; 15];
    let mut wg = [0.0f64; 15];
    for j in 0..7 {
        t[j] = -XGK[j];
        wk[j] = WGK[j];
        t[14 - j] = XGK[j];
        wk[14 - j] = WGK[j];
    }
    t[7] = 0.0;
    wk[7] = WGK[7];
    // Gauss-7 nodes sit at Kronrod indices 1, 3, 5, 7, 9, 11, 13.
    wg[1] = WG[0];
    wg[3] = WG[1];
    wg[5] = WG[2];
    wg[7] = WG[3];
    wg[9] = WG[2];
    wg[11] = WG[1];
    wg[13] = WG[0];
    (t, wk, wg)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    xa: f64,
    xb: f64,
    ya: f64,
    yb: f64,
    value: f64,
    error: f64,
}

/// Total order on panels: worst error first, ties broken by coordinates so
/// the refinement order is independent of insertion order.
#[derive(Debug, Clone, Copy)]
struct PanelKey(Panel);

impl PartialEq for PanelKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for PanelKey {}
impl PartialOrd for PanelKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PanelKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .error
            .total_cmp(&other.0.error)
            .then(other.0.xa.total_cmp(&self.0.xa))
            .then(other.0.ya.total_cmp(&self.0.ya))
    }
}

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn eval_panel(
    f: &dyn Fn(f64, f64) -> Result<f64>,
    xa: f64,
    xb: f64,
    ya: f64,
    yb: f64,
) -> Result<Panel> {
    let (t, wk, wg) = kronrod_nodes();
    let cx = 0.5 * (xa + xb);
    let hx = 0.5 * (xb - xa);
    let cy = 0.5 * (ya + yb);
    let hy = 0.5 * (yb - ya);
    let mut vals = [[0.0f64; 15]; 15];
    for (i, &ti) in t.iter().enumerate() {
        for (j, &tj) in t.iter().enumerate() {
            vals[i][j] = f(cx + hx * ti, cy + hy * tj)?;
        }
    }
    let mut kk = Kahan::default();
    let mut gg = Kahan::default();
    for i in 0..15 {
        for j in 0..15 {
            kk.add(wk[i] * wk[j] * vals[i][j]);
            if wg[i] != 0.0 && wg[j] != 0.0 {
                gg.add(wg[i] * wg[j] * vals[i][j]);
            }
        }
    }
    let jac = hx * hy;
    let value = kk.value() * jac;
    let error = ((kk.value() - gg.value()) * jac).abs();
    Ok(Panel {
        xa,
        xb,
        ya,
        yb,
        value,
        error,
    })
}

/// Adaptive tensor-product quadrature of `f` over `[x0,x1]×[y0,y1]` to
/// absolute tolerance `tol`. Deterministic for a given `f` regardless of
/// timing: the refinement queue has a total order and the final sum runs
/// over canonically sorted leaves with compensated accumulation.
fn adaptive_2d(
    f: &dyn Fn(f64, f64) -> Result<f64>,
    x_range: (f64, f64),
    y_range: (f64, f64),
    tol: f64,
    max_panels: usize,
) -> Result<(f64, f64, usize)> {
    let mut heap: std::collections::BinaryHeap<PanelKey> = std::collections::BinaryHeap::new();
    let mut total_error = 0.0f64;
    // Seed with a 2×2 split so the first refinement decision has contrast.
    let xm = 0.5 * (x_range.0 + x_range.1);
    let ym = 0.5 * (y_range.0 + y_range.1);
    for &(xa, xb) in &[(x_range.0, xm), (xm, x_range.1)] {
        for &(ya, yb) in &[(y_range.0, ym), (ym, y_range.1)] {
            let p = eval_panel(f, xa, xb, ya, yb)?;
            total_error += p.error;
            heap.push(PanelKey(p));
        }
    }
    while total_error > tol && heap.len() + 3 <= max_panels {
        let worst = heap.pop().expect("heap is non-empty").0;
        total_error -= worst.error;
        let xm = 0.5 * (worst.xa + worst.xb);
        let ym = 0.5 * (worst.ya + worst.yb);
        if xm <= worst.xa || ym <= worst.ya {
            // Panel no longer splittable in f64; keep its estimate.
            total_error += worst.error;
            heap.push(PanelKey(worst));
            break;
        }
        for &(xa, xb) in &[(worst.xa, xm), (xm, worst.xb)] {
            for &(ya, yb) in &[(worst.ya, ym), (ym, worst.yb)] {
                let p = eval_panel(f, xa, xb, ya, yb)?;
                total_error += p.error;
                heap.push(PanelKey(p));
            }
        }
    }
    let mut leaves: Vec<Panel> = heap.into_iter().map(|k| k.0).collect();
    if total_error > tol {
        return Err(BecError::QuadratureDivergence {
            tol,
            estimate: total_error,
            panels: leaves.len(),
        });
    }
    // Canonical order: independent of the heap's internal layout.
    leaves.sort_by(|a, b| a.xa.total_cmp(&b.xa).then(a.ya.total_cmp(&b.ya)));
    let mut value = Kahan::default();
    let mut err = Kahan::default();
    for p in &leaves {
        value.add(p.value);
        err.add(p.error);
    }
    Ok((value.value(), err.value(), leaves.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::bloch_point;
    use crate::profile::Profile;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    /// Closed-form curvature of the two-band positive band:
    /// m / (2 (k² + m²)^{3/2}).
    fn dirac_closed_form(m: f64, k1: f64, k2: f64) -> f64 {
        m / (2.0 * (k1 * k1 + k2 * k2 + m * m).powf(1.5))
    }

    /// Geometric solid-angle form for the three-band positive band:
    /// f / (k² + f²)^{3/2} (twice the two-band value: the band spans the
    /// full unit-spin projection instead of half).
    fn sw_closed_form(f: f64, k1: f64, k2: f64) -> f64 {
        f / (k1 * k1 + k2 * k2 + f * f).powf(1.5)
    }

    #[test]
    fn dirac_curvature_matches_closed_form() {
        for &m in &[0.5, 1.0, -2.0] {
            for &(k1, k2) in &[(0.0, 0.0), (0.3, -0.8), (2.0, 1.5), (10.0, -7.0)] {
                let f = berry_curvature(Sector::Dirac, m, k1, k2, Hemisphere::Plus).unwrap();
                assert_abs_diff_eq!(f, dirac_closed_form(m, k1, k2), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn shallow_water_curvature_matches_solid_angle_form() {
        for &fc in &[1.0, -1.0, 2.5] {
            for &(k1, k2) in &[(0.0, 0.0), (0.4, 0.2), (-1.5, 2.0), (8.0, -3.0)] {
                let f =
                    berry_curvature(Sector::ShallowWater, fc, k1, k2, Hemisphere::Plus).unwrap();
                assert_abs_diff_eq!(f, sw_closed_form(fc, k1, k2), epsilon = 1e-12);
            }
        }
    }

    /// Independent oracle: curvature from central finite differences of the
    /// spectral projector produced by `bloch_point` (eigenvector route).
    fn curvature_fd(sector: Sector, m: f64, k1: f64, k2: f64) -> f64 {
        let step = 1e-5 * (1.0 + (k1 * k1 + k2 * k2).sqrt());
        let p = |a: f64, b: f64| -> DMatrix<C64> { bloch_point(sector, a, b, m).unwrap().projector };
        let p0 = p(k1, k2);
        let dp1 = (p(k1 + step, k2) - p(k1 - step, k2)) / C64::new(2.0 * step, 0.0);
        let dp2 = (p(k1, k2 + step) - p(k1, k2 - step)) / C64::new(2.0 * step, 0.0);
        let comm = &dp1 * &dp2 - &dp2 * &dp1;
        (p0 * comm).trace().im
    }

    #[test]
    fn finite_difference_oracle_agrees_with_analytic_derivatives() {
        for &(sector, m) in &[
            (Sector::Dirac, 1.0),
            (Sector::Dirac, -0.5),
            (Sector::ShallowWater, 1.0),
            (Sector::ShallowWater, -1.0),
        ] {
            for &(k1, k2) in &[(0.0, 0.0), (0.7, -0.4), (1.8, 2.2)] {
                let analytic =
                    berry_curvature(sector, m, k1, k2, Hemisphere::Plus).unwrap();
                let fd = curvature_fd(sector, m, k1, k2);
                assert_abs_diff_eq!(analytic, fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn minus_hemisphere_flips_orientation() {
        for &(sector, m) in &[(Sector::Dirac, 1.0), (Sector::ShallowWater, -1.0)] {
            for &(k1, k2) in &[(0.4, 0.9), (-1.0, 0.3)] {
                let plus = berry_curvature(sector, m, k1, -k2, Hemisphere::Plus).unwrap();
                let minus = berry_curvature(sector, m, k1, k2, Hemisphere::Minus).unwrap();
                assert_abs_diff_eq!(minus, -plus, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dirac_curvature_is_single_signed() {
        for &m in &[1.0, -1.0] {
            for &(k1, k2) in &[(0.0, 0.0), (1.0, 1.0), (5.0, -3.0), (40.0, 0.0)] {
                let f = berry_curvature(Sector::Dirac, m, k1, k2, Hemisphere::Plus).unwrap();
                assert!(
                    f * m > 0.0,
                    "m={m}: curvature {f} does not share the sign of the mass"
                );
            }
        }
    }

    #[test]
    fn chern_half_dirac_values() {
        let config = QuadratureConfig::default();
        for &m in &[0.5, 1.0, 3.0] {
            let c = chern_half(Sector::Dirac, m, &config).unwrap();
            assert_abs_diff_eq!(c, 0.5, epsilon = 1e-6);
            let c = chern_half(Sector::Dirac, -m, &config).unwrap();
            assert_abs_diff_eq!(c, -0.5, epsilon = 1e-6);
        }
    }

    #[test]
    fn chern_half_shallow_water_values() {
        let config = QuadratureConfig::default();
        let c = chern_half(Sector::ShallowWater, 1.0, &config).unwrap();
        assert_abs_diff_eq!(c, 1.0, epsilon = 1e-6);
        let c = chern_half(Sector::ShallowWater, -1.0, &config).unwrap();
        assert_abs_diff_eq!(c, -1.0, epsilon = 1e-6);
    }

    #[test]
    fn chern_half_scale_invariance_and_antisymmetry() {
        let config = QuadratureConfig::default();
        for sector in [Sector::Dirac, Sector::ShallowWater] {
            let base = chern_half(sector, 0.7, &config).unwrap();
            let scaled = chern_half(sector, 1.4, &config).unwrap();
            assert_abs_diff_eq!(base, scaled, epsilon = 1e-6);
            let negated = chern_half(sector, -0.7, &config).unwrap();
            assert_abs_diff_eq!(base, -negated, epsilon = 1e-6);
        }
    }

    #[test]
    fn chern_half_is_deterministic() {
        let config = QuadratureConfig::default();
        let a = chern_half(Sector::ShallowWater, 1.0, &config).unwrap();
        let b = chern_half(Sector::ShallowWater, 1.0, &config).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn quadrature_budget_exhaustion_is_reported() {
        let config = QuadratureConfig {
            tol: 1e-15,
            max_panels: 8,
        };
        let err = chern_half(Sector::Dirac, 1.0, &config).unwrap_err();
        assert!(matches!(err, BecError::QuadratureDivergence { .. }));
    }

    #[test]
    fn zero_mass_is_rejected() {
        let config = QuadratureConfig::default();
        assert!(matches!(
            chern_half(Sector::Dirac, 0.0, &config),
            Err(BecError::InvalidConfig { .. })
        ));
        assert!(matches!(
            boundary_degree(Sector::Dirac, 0.0, Hemisphere::Plus, 256),
            Err(BecError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn boundary_degree_examples() {
        // Plus chart: degree equals sgn(mass).
        for &m in &[0.5, 1.0, 3.0] {
            assert_eq!(
                boundary_degree(Sector::Dirac, m, Hemisphere::Plus, 256).unwrap(),
                1
            );
            assert_eq!(
                boundary_degree(Sector::Dirac, -m, Hemisphere::Plus, 256).unwrap(),
                -1
            );
        }
        // Minus chart flips the sweep: raw winding -1 times pole sign -1.
        assert_eq!(
            boundary_degree(Sector::Dirac, -1.0, Hemisphere::Minus, 256).unwrap(),
            1
        );
        assert_eq!(
            boundary_degree(Sector::ShallowWater, 1.0, Hemisphere::Plus, 256).unwrap(),
            1
        );
    }

    #[test]
    fn boundary_degree_validates_sample_count() {
        assert!(matches!(
            boundary_degree(Sector::Dirac, 1.0, Hemisphere::Plus, 63),
            Err(BecError::InvalidConfig { .. })
        ));
        assert!(boundary_degree(Sector::Dirac, 1.0, Hemisphere::Plus, 64).is_ok());
    }

    #[test]
    fn winding_helper_detects_degenerate_and_unresolved_loops() {
        // Loop through the origin.
        let samples = vec![(1.0, 0.0), (0.0, 1e-12), (1.0, 0.0)];
        assert!(matches!(
            winding_of_loop(&samples),
            Err(BecError::DegenerateLoop { .. })
        ));
        // Open arc: accumulated angle lands mid-way between integers.
        let n = 100;
        let samples: Vec<(f64, f64)> = (0..=n)
            .map(|j| {
                let t = std::f64::consts::PI * j as f64 / n as f64;
                (t.cos(), t.sin())
            })
            .collect();
        assert!(matches!(
            winding_of_loop(&samples),
            Err(BecError::WindingResidual { .. })
        ));
        // Proper double loop.
        let samples: Vec<(f64, f64)> = (0..=400)
            .map(|j| {
                let t = 2.0 * std::f64::consts::TAU * j as f64 / 400.0;
                (t.cos(), t.sin())
            })
            .collect();
        assert_eq!(winding_of_loop(&samples).unwrap(), 2);
    }

    #[test]
    fn quadrature_degree_consistency() {
        let config = QuadratureConfig::default();
        for &m in &[0.5, 1.0, 3.0, -0.5, -1.0, -3.0] {
            let c = chern_half(Sector::Dirac, m, &config).unwrap();
            let d = boundary_degree(Sector::Dirac, m, Hemisphere::Plus, 256).unwrap();
            assert_eq!((2.0 * c).round() as i32, d, "m = {m}");
        }
    }

    #[test]
    fn bulk_index_examples() {
        let config = QuadratureConfig::default();
        let dirac = ModelSpec::new(
            Sector::Dirac,
            Profile::Tanh {
                asymptote_minus: -1.0,
                asymptote_plus: 1.0,
                length_scale: 1.0,
            },
        )
        .unwrap();
        let r = bulk_index(&dirac, &config).unwrap();
        assert_eq!(r.chern_rounded, 1);
        assert!((r.chern_glued - 1.0).abs() <= 1e-3);
        assert_eq!(r.degree_plus, 1);
        assert_eq!(r.degree_minus, -1);
        assert_abs_diff_eq!(
            r.chern_glued,
            r.c_half_plus - r.c_half_minus,
            epsilon = 1e-15
        );

        // Asymmetric magnitudes: only the signs enter.
        let skew = ModelSpec::new(
            Sector::Dirac,
            Profile::Tanh {
                asymptote_minus: -0.5,
                asymptote_plus: 2.0,
                length_scale: 1.0,
            },
        )
        .unwrap();
        let r = bulk_index(&skew, &config).unwrap();
        assert_eq!(r.chern_rounded, 1);

        let sw = ModelSpec::new(Sector::ShallowWater, Profile::Sign { amplitude: 1.0 }).unwrap();
        let r = bulk_index(&sw, &config).unwrap();
        assert_eq!(r.chern_rounded, 2);
        assert!((r.chern_glued - 2.0).abs() <= 1e-3);
        assert_eq!(r.degree_plus, -r.degree_minus);
    }

    #[test]
    fn bulk_index_rejects_non_interface_profiles() {
        let config = QuadratureConfig::default();
        let constant =
            ModelSpec::new(Sector::Dirac, Profile::Constant { value: 1.0 }).unwrap();
        assert!(matches!(
            bulk_index(&constant, &config),
            Err(BecError::InvalidForProfile { .. })
        ));
        // Same-sign asymptotes: not an interface either.
        let same_sign = ModelSpec::new(
            Sector::Dirac,
            Profile::Tanh {
                asymptote_minus: 0.5,
                asymptote_plus: 2.0,
                length_scale: 1.0,
            },
        )
        .unwrap();
        assert!(matches!(
            bulk_index(&same_sign, &config),
            Err(BecError::InvalidForProfile { .. })
        ));
    }
}
