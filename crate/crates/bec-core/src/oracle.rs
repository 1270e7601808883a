//! Closed-form ground truth for the interface models: exact bound states
//! and their dispersions, effective one-dimensional potentials and the
//! associated energy window, essential-spectrum thresholds, half-plane
//! dispersion/merging formulas, and the spin-1 operator identity checker.
//!
//! Everything here is independent of the banded eigensolver path, so these
//! functions serve as oracles for it: a discretized fiber operator is
//! correct when the sampled closed forms are near-eigenvectors with the
//! predicted eigenvalues, with residuals vanishing linearly in the grid
//! spacing.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BecError, Result};
use crate::model::{C64, FiberLayout, FiberOperator, Grid1d, ModelSpec, Sector};
use crate::profile::Profile;

/// Closed-form interface states, named by their role.
///
/// The left/right movers exist for any monotone sign-changing profile of
/// the right orientation and disperse as `ω = ∓k1`. The even/odd pair is
/// specific to the step profile: the even state is the left mover in that
/// special case, the odd state is a genuinely three-component solution
/// pinned at `ω = f·sgn(k1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateLabel {
    /// Two-band left mover, `ω = -k1`; needs a non-decreasing interface.
    DiracLeft,
    /// Two-band right mover, `ω = +k1`; needs a non-increasing interface.
    DiracRight,
    /// Three-band left mover, `ω = -k1`; needs a non-decreasing interface.
    SwLeft,
    /// Three-band right mover, `ω = +k1`; needs a non-increasing interface.
    SwRight,
    /// Even-parity step-profile state (`ω = -k1`, decay rate `f`).
    SwEven,
    /// Odd-parity step-profile state (`ω = f·sgn(k1)`, decay rate `|k1|`).
    SwOdd,
}

impl StateLabel {
    /// Stable snake-case name, used for error messages and file stems.
    pub fn name(self) -> &'static str {
        match self {
            StateLabel::DiracLeft => "dirac_left",
            StateLabel::DiracRight => "dirac_right",
            StateLabel::SwLeft => "sw_left",
            StateLabel::SwRight => "sw_right",
            StateLabel::SwEven => "sw_even",
            StateLabel::SwOdd => "sw_odd",
        }
    }
}

/// A closed-form state sampled on the solver grid, in the solver's working
/// gauge and row layout, normalized to unit discrete norm.
#[derive(Debug, Clone)]
pub struct AnalyticState {
    pub label: StateLabel,
    /// Exact dispersion value at this `k1`.
    pub omega: f64,
    /// Real components in fiber-layout row order, unit norm.
    pub values: Vec<f64>,
    /// Row layout the values follow.
    pub layout: FiberLayout,
}

fn invalid(label: StateLabel, reason: impl Into<String>) -> BecError {
    BecError::InvalidForProfile {
        label: label.name().into(),
        reason: reason.into(),
    }
}

/// Samples the closed-form state `label` for `spec` at momentum `k1` on
/// `grid`.
///
/// The movers are exact eigenstates in the continuum for *any* integrable
/// profile; square-summability (hence validity) requires the profile
/// orientations listed on [`StateLabel`]. The step-profile pair requires
/// the step profile itself, and the odd state additionally `k1 ≠ 0`
/// (its decay rate is `|k1|`).
///
/// # Errors
///
/// [`BecError::InvalidForProfile`] when the validity predicate fails;
/// [`BecError::NotApplicable`] when the label belongs to the other sector.
pub fn analytic_state(
    label: StateLabel,
    spec: &ModelSpec,
    k1: f64,
    grid: Grid1d,
) -> Result<AnalyticState> {
    spec.profile.validate()?;
    let layout = FiberLayout::new(spec.sector, grid, k1);
    let expected_sector = match label {
        StateLabel::DiracLeft | StateLabel::DiracRight => Sector::Dirac,
        _ => Sector::ShallowWater,
    };
    if spec.sector != expected_sector {
        return Err(BecError::NotApplicable {
            operation: "analytic_state",
            reason: format!(
                "state {} belongs to the {} sector, model is {}",
                label.name(),
                expected_sector,
                spec.sector
            ),
        });
    }
    let require_interface = |dir: &str, ok: bool| -> Result<()> {
        if !spec.profile.is_interface() {
            return Err(invalid(
                label,
                "profile asymptotes must have opposite signs for a square-summable state",
            ));
        }
        if !ok {
            return Err(invalid(
                label,
                format!("profile must be monotone {dir} for this mover to decay"),
            ));
        }
        Ok(())
    };
    let n_sites = grid.primary_sites();
    let mut values = vec![0.0; layout.dim];
    let omega;
    match label {
        StateLabel::DiracLeft | StateLabel::SwLeft | StateLabel::DiracRight
        | StateLabel::SwRight => {
            let leftward = matches!(label, StateLabel::DiracLeft | StateLabel::SwLeft);
            if leftward {
                require_interface("non-decreasing", spec.profile.is_non_decreasing())?;
            } else {
                require_interface("non-increasing", spec.profile.is_non_increasing())?;
            }
            // e^{∓∫₀^x m} (1, ∓1) for the two-band sector;
            // e^{∓∫₀^x f} (1, ∓1, 0) for the three-band sector.
            let sign = if leftward { -1.0 } else { 1.0 };
            omega = sign * k1;
            for n in 0..n_sites {
                let x = grid.primary_x(n);
                let amp = (sign * spec.profile.antiderivative_from_zero(x)).exp();
                values[layout.primary_row(n)] = amp;
                match spec.sector {
                    Sector::Dirac => {}
                    Sector::ShallowWater => {
                        values[layout.velocity_row(n)] = sign * amp;
                    }
                }
            }
            if spec.sector == Sector::Dirac {
                for n in 0..n_sites - 1 {
                    let y = grid.midpoint_x(n);
                    let amp = (sign * spec.profile.antiderivative_from_zero(y)).exp();
                    values[layout.midpoint_row(n)] = sign * amp;
                }
            }
            // Shallow-water movers have a vanishing staggered component.
        }
        StateLabel::SwEven | StateLabel::SwOdd => {
            let f = match spec.profile {
                Profile::Sign { amplitude } if amplitude > 0.0 => amplitude,
                _ => {
                    return Err(invalid(
                        label,
                        "closed form requires the step profile with positive amplitude",
                    ));
                }
            };
            if label == StateLabel::SwEven {
                // e^{-f|x|} (1, -1, 0): the left mover specialized to the step.
                omega = -k1;
                for n in 0..n_sites {
                    let amp = (-f * grid.primary_x(n).abs()).exp();
                    values[layout.primary_row(n)] = amp;
                    values[layout.velocity_row(n)] = -amp;
                }
            } else {
                if k1 == 0.0 {
                    return Err(invalid(
                        label,
                        "decay rate |k1| vanishes at k1 = 0; the state delocalizes",
                    ));
                }
                // e^{-|k1||x|} (0, sgn(x)·sgn(k1), i); in the real working
                // gauge the staggered component becomes -e^{-|k1||x|}.
                omega = f * k1.signum();
                for n in 0..n_sites {
                    let x = grid.primary_x(n);
                    let sgn_x = if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    values[layout.velocity_row(n)] =
                        sgn_x * k1.signum() * (-k1.abs() * x.abs()).exp();
                }
                for n in 0..n_sites - 1 {
                    let y = grid.midpoint_x(n);
                    values[layout.midpoint_row(n)] = -(-k1.abs() * y.abs()).exp();
                }
            }
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 0.0 || norm.is_nan() {
        return Err(invalid(label, "sampled state vanished on the grid"));
    }
    for v in &mut values {
        *v /= norm;
    }
    Ok(AnalyticState {
        label,
        omega,
        values,
        layout,
    })
}

/// Relative eigen-residual `‖(H - ω)ψ‖ / ‖ψ‖` of a sampled closed form
/// against a discretized fiber operator (the state is unit-norm already).
pub fn dispersion_residual(op: &FiberOperator, state: &AnalyticState) -> f64 {
    assert_eq!(
        op.matrix.dim(),
        state.values.len(),
        "operator and state live on different grids"
    );
    let mut image = vec![0.0; state.values.len()];
    op.matrix.mul_vec(&state.values, &mut image);
    let mut res = 0.0f64;
    for (hi, vi) in image.iter().zip(&state.values) {
        let d = hi - state.omega * vi;
        res += d * d;
    }
    res.sqrt()
}

/// The two decoupled second-order effective potentials of the two-band
/// interface eigenproblem, `k1² + m² ± m'`, with their infima over a grid.
#[derive(Debug, Clone)]
pub struct EffectivePotentials {
    profile: Profile,
    k1: f64,
    /// Infimum of the `+m'` branch over the sampled grid.
    pub inf_sum: f64,
    /// Infimum of the `-m'` branch over the sampled grid.
    pub inf_diff: f64,
}

impl EffectivePotentials {
    /// `k1² + m(x2)² + m'(x2)`.
    pub fn w_sum(&self, x2: f64) -> f64 {
        let m = self.profile.eval(x2);
        self.k1 * self.k1 + m * m + self.profile.derivative(x2)
    }

    /// `k1² + m(x2)² - m'(x2)`.
    pub fn w_diff(&self, x2: f64) -> f64 {
        let m = self.profile.eval(x2);
        self.k1 * self.k1 + m * m - self.profile.derivative(x2)
    }
}

/// Builds the effective potentials for a two-band model at momentum `k1`,
/// with infima taken over the primary sites of `grid`.
///
/// # Errors
///
/// [`BecError::NotApplicable`] for the three-band sector (its eigenproblem
/// does not decouple this way).
pub fn effective_potentials(
    spec: &ModelSpec,
    k1: f64,
    grid: Grid1d,
) -> Result<EffectivePotentials> {
    if spec.sector != Sector::Dirac {
        return Err(BecError::NotApplicable {
            operation: "effective_potentials",
            reason: "defined for the two-band sector only".into(),
        });
    }
    let mut pot = EffectivePotentials {
        profile: spec.profile.clone(),
        k1,
        inf_sum: f64::INFINITY,
        inf_diff: f64::INFINITY,
    };
    for n in 0..grid.primary_sites() {
        let x = grid.primary_x(n);
        pot.inf_sum = pot.inf_sum.min(pot.w_sum(x));
        pot.inf_diff = pot.inf_diff.min(pot.w_diff(x));
    }
    Ok(pot)
}

/// True iff `k1² ≤ ω² < k1² + m̃²`: the window between the light cone and
/// the essential spectrum where interface channels may live.
pub fn energy_window_check(spec: &ModelSpec, k1: f64, omega: f64) -> bool {
    let m_tilde = spec.profile.gap_scale();
    let w2 = omega * omega;
    k1 * k1 <= w2 && w2 < k1 * k1 + m_tilde * m_tilde
}

/// Essential-spectrum threshold at fixed `k1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssentialSpectrumEdge {
    /// `√(k1² + m̃²)`: continuum states exist exactly at `|ω| ≥ threshold`
    /// (plus the flat band when present).
    pub threshold: f64,
    /// The three-band sector contributes a flat `ω = 0` band.
    pub has_zero_band: bool,
}

/// Computes the essential-spectrum edge `√(k1² + m̃²)` where `m̃` is the
/// smaller asymptotic magnitude, and whether a zero-frequency flat band is
/// part of the essential spectrum.
pub fn essential_spectrum_edge(spec: &ModelSpec, k1: f64) -> EssentialSpectrumEdge {
    let m_tilde = spec.profile.gap_scale();
    EssentialSpectrumEdge {
        threshold: (k1 * k1 + m_tilde * m_tilde).sqrt(),
        has_zero_band: spec.sector == Sector::ShallowWater,
    }
}

/// Closed-form half-plane quantities for one boundary phase `z` at one
/// momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfplaneFormulas {
    /// Dispersion `ω = -k1·Re z + m₊·Im z` of the boundary channel.
    pub omega: f64,
    /// Decay rate `k1·Im z + m₊·Re z` of the candidate bound state;
    /// positive means square-summable, zero is the delocalization
    /// threshold.
    pub decay_rate: f64,
    /// Whether the channel is bound at this `k1` (`decay_rate ≥ 0`).
    pub bound: bool,
    /// Where the channel meets the bulk bands, `(k1*, ω*)`; absent when
    /// `|Im z|` is below the degeneracy guard (the channel never merges).
    pub merging: Option<(f64, f64)>,
}

fn check_unit_modulus(z: C64) -> Result<()> {
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(BecError::InvalidConfig {
            reason: format!("boundary phase must have unit modulus, got |z| = {}", z.norm()),
        });
    }
    Ok(())
}

/// Evaluates the closed-form half-plane dispersion, decay rate, bound
/// condition, and merging point for boundary phase `z` and bulk value
/// `m_plus > 0` at momentum `k1`.
///
/// # Errors
///
/// [`BecError::InvalidConfig`] for non-unit `z` or non-positive `m_plus`.
pub fn halfplane_formulas(z: C64, m_plus: f64, k1: f64) -> Result<HalfplaneFormulas> {
    check_unit_modulus(z)?;
    if m_plus <= 0.0 || !m_plus.is_finite() {
        return Err(BecError::InvalidConfig {
            reason: format!("half-plane bulk value must be positive, got {m_plus}"),
        });
    }
    let omega = -k1 * z.re + m_plus * z.im;
    let decay_rate = k1 * z.im + m_plus * z.re;
    Ok(HalfplaneFormulas {
        omega,
        decay_rate,
        bound: decay_rate >= 0.0,
        merging: merging_point(z, m_plus).ok(),
    })
}

/// The point `(k1*, ω*) = (-m₊·Re z / Im z, m₊ / Im z)` where the
/// half-plane channel delocalizes into the bulk bands.
///
/// # Errors
///
/// [`BecError::ImZZero`] when `|Im z| < 1e-9`: the channel then never
/// reaches zero decay rate at finite momentum.
pub fn merging_point(z: C64, m_plus: f64) -> Result<(f64, f64)> {
    check_unit_modulus(z)?;
    if z.im.abs() < 1e-9 {
        return Err(BecError::ImZZero { re: z.re, im: z.im });
    }
    Ok((-m_plus * z.re / z.im, m_plus / z.im))
}

/// Norm scale used by the Hermiticity guards.
fn herm_deviation(d: &DMatrix<C64>) -> f64 {
    let adj = d.adjoint();
    (d - adj).norm() / (1.0 + d.norm())
}

/// The commutator-defect matrix coupling the three operator components:
/// the unique `D` with `d²(d·S) = (d·S)³ + D`, identically zero when
/// `d1, d2, d3` commute. Blocks (row-major on the three-component factor):
///
/// ```text
/// | i(d1 d3 d2 - d2 d3 d1)   [d3², d1]                 [d3², d2]              |
/// | [d2², d1]                i(d3 d2 d1 - d1 d2 d3)    -i[d2², d3]            |
/// | [d1², d2]                i[d1², d3]                i(d2 d1 d3 - d3 d1 d2) |
/// ```
pub fn commutator_defect_matrix(
    d1: &DMatrix<C64>,
    d2: &DMatrix<C64>,
    d3: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    let n = check_triple(d1, d2, d3)?;
    let i = C64::new(0.0, 1.0);
    let comm = |a: &DMatrix<C64>, b: &DMatrix<C64>| a * b - b * a;
    let d1sq = d1 * d1;
    let d2sq = d2 * d2;
    let d3sq = d3 * d3;
    let blocks = [
        [
            (d1 * d3 * d2 - d2 * d3 * d1) * i,
            comm(&d3sq, d1),
            comm(&d3sq, d2),
        ],
        [
            comm(&d2sq, d1),
            (d3 * d2 * d1 - d1 * d2 * d3) * i,
            comm(&d2sq, d3) * (-i),
        ],
        [
            comm(&d1sq, d2),
            comm(&d1sq, d3) * i,
            (d2 * d1 * d3 - d3 * d1 * d2) * i,
        ],
    ];
    let mut out = DMatrix::<C64>::zeros(3 * n, 3 * n);
    for (a, row) in blocks.iter().enumerate() {
        for (b, blk) in row.iter().enumerate() {
            out.view_mut((a * n, b * n), (n, n)).copy_from(blk);
        }
    }
    Ok(out)
}

fn check_triple(d1: &DMatrix<C64>, d2: &DMatrix<C64>, d3: &DMatrix<C64>) -> Result<usize> {
    let n = d1.nrows();
    for (name, d) in [("d1", d1), ("d2", d2), ("d3", d3)] {
        if d.nrows() != n || d.ncols() != n {
            return Err(BecError::InvalidConfig {
                reason: format!(
                    "component matrices must be square and equal-sized; {name} is {}x{}",
                    d.nrows(),
                    d.ncols()
                ),
            });
        }
        let dev = herm_deviation(d);
        if dev > 1e-12 {
            return Err(BecError::NotHermitian {
                name: name.into(),
                deviation: dev,
            });
        }
    }
    if n == 0 || n > 64 {
        return Err(BecError::InvalidConfig {
            reason: format!("component dimension must be in 1..=64, got {n}"),
        });
    }
    Ok(n)
}

/// Builds `d·S` on the three-fold tensor space: the spin-1 coupling of an
/// operator triple.
pub fn operator_spin_coupling(
    d1: &DMatrix<C64>,
    d2: &DMatrix<C64>,
    d3: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    let n = check_triple(d1, d2, d3)?;
    let i = C64::new(0.0, 1.0);
    let mut out = DMatrix::<C64>::zeros(3 * n, 3 * n);
    let mut put = |a: usize, b: usize, m: DMatrix<C64>| {
        out.view_mut((a * n, b * n), (n, n)).copy_from(&m);
    };
    put(0, 1, d1.clone());
    put(1, 0, d1.clone());
    put(0, 2, d2.clone());
    put(2, 0, d2.clone());
    put(1, 2, d3 * (-i));
    put(2, 1, d3 * i);
    Ok(out)
}

/// Verifies the quartic operator identity
/// `(d·S)·d²·(d·S) = (d·S)⁴ + ((d·S)·D + D†·(d·S))/2`,
/// where `d² = d1² + d2² + d3²` acts diagonally on the three components
/// and `D` is [`commutator_defect_matrix`]. Returns the relative residual
/// `‖LHS - RHS‖ / (1 + ‖LHS‖)` in the Frobenius norm.
///
/// # Errors
///
/// [`BecError::NotHermitian`] if an input deviates from Hermitian by more
/// than 1e-12 (relative); [`BecError::InvalidConfig`] for mismatched or
/// oversized matrices (n must be ≤ 64).
pub fn verify_spin1_identity(
    d1: &DMatrix<C64>,
    d2: &DMatrix<C64>,
    d3: &DMatrix<C64>,
) -> Result<f64> {
    let n = check_triple(d1, d2, d3)?;
    let ds = operator_spin_coupling(d1, d2, d3)?;
    let defect = commutator_defect_matrix(d1, d2, d3)?;
    let dsq_small = d1 * d1 + d2 * d2 + d3 * d3;
    let mut dsq = DMatrix::<C64>::zeros(3 * n, 3 * n);
    for a in 0..3 {
        dsq.view_mut((a * n, a * n), (n, n)).copy_from(&dsq_small);
    }
    let lhs = &ds * &dsq * &ds;
    let ds2 = &ds * &ds;
    let rhs = &ds2 * &ds2
        + (&ds * &defect + defect.adjoint() * &ds) * C64::new(0.5, 0.0);
    let resid = (&lhs - &rhs).norm() / (1.0 + lhs.norm());
    Ok(resid)
}

/// Deterministic random Hermitian matrix with entries of order one,
/// for exercising the operator identity.
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in (i + 1)..n {
            let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    m
}

/// Seeded triple of random Hermitian matrices.
pub fn random_hermitian_triple(
    n: usize,
    seed: u64,
) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_hermitian(n, &mut rng);
    let b = random_hermitian(n, &mut rng);
    let c = random_hermitian(n, &mut rng);
    (a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_fiber_operator, parity_operator};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

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

    fn sw_sign() -> ModelSpec {
        ModelSpec::new(Sector::ShallowWater, Profile::Sign { amplitude: 1.0 }).unwrap()
    }

    fn residual_for(spec: &ModelSpec, label: StateLabel, k1: f64, grid: Grid1d) -> f64 {
        let state = analytic_state(label, spec, k1, grid).unwrap();
        let op = build_fiber_operator(spec, grid, k1).unwrap();
        dispersion_residual(&op, &state)
    }

    #[test]
    fn left_mover_is_a_discrete_near_eigenvector() {
        let spec = dirac_tanh();
        let grid = Grid1d::new(12.0, 0.05).unwrap();
        for &k1 in &[0.0, 0.5, 1.5] {
            let res = residual_for(&spec, StateLabel::DiracLeft, k1, grid);
            assert!(res < 0.02, "k1={k1}: residual {res} too large");
        }
    }

    #[test]
    fn left_mover_residual_is_first_order_in_spacing() {
        let spec = dirac_tanh();
        let coarse = residual_for(
            &spec,
            StateLabel::DiracLeft,
            0.7,
            Grid1d::new(12.0, 0.05).unwrap(),
        );
        let fine = residual_for(
            &spec,
            StateLabel::DiracLeft,
            0.7,
            Grid1d::new(12.0, 0.025).unwrap(),
        );
        let order = (coarse / fine).log2();
        assert!(
            order >= 0.9,
            "observed convergence order {order} (coarse {coarse}, fine {fine})"
        );
    }

    #[test]
    fn right_mover_on_decreasing_profile() {
        let spec = ModelSpec::new(
            Sector::Dirac,
            Profile::Tanh {
                asymptote_minus: 1.0,
                asymptote_plus: -1.0,
                length_scale: 1.0,
            },
        )
        .unwrap();
        let grid = Grid1d::new(12.0, 0.05).unwrap();
        let state = analytic_state(StateLabel::DiracRight, &spec, 0.6, grid).unwrap();
        assert_abs_diff_eq!(state.omega, 0.6);
        let res = residual_for(&spec, StateLabel::DiracRight, 0.6, grid);
        assert!(res < 0.02, "residual {res}");
    }

    #[test]
    fn three_band_step_states_are_near_eigenvectors() {
        let spec = sw_sign();
        let grid = Grid1d::new(16.0, 0.02).unwrap();
        for &k1 in &[0.4, 1.0] {
            let even = residual_for(&spec, StateLabel::SwEven, k1, grid);
            // The odd state's middle component jumps at the interface, so
            // its pointwise residual concentrates there and scales like
            // √h after normalization; the eigenvalue error is still O(h).
            let odd = residual_for(&spec, StateLabel::SwOdd, k1, grid);
            assert!(even < 0.05, "even residual {even} at k1={k1}");
            assert!(odd < 0.15, "odd residual {odd} at k1={k1}");
            let odd_fine = residual_for(
                &spec,
                StateLabel::SwOdd,
                k1,
                Grid1d::new(16.0, 0.01).unwrap(),
            );
            assert!(
                odd_fine < 0.8 * odd,
                "odd residual did not refine: {odd} -> {odd_fine}"
            );
        }
        // The general left mover coincides with the even state here.
        let a = analytic_state(StateLabel::SwLeft, &spec, 0.4, grid).unwrap();
        let b = analytic_state(StateLabel::SwEven, &spec, 0.4, grid).unwrap();
        let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
        assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn validity_predicates_reject_wrong_profiles() {
        let spec = dirac_tanh();
        let grid = Grid1d::new(10.0, 0.05).unwrap();
        // Right mover grows on a non-decreasing interface.
        assert!(matches!(
            analytic_state(StateLabel::DiracRight, &spec, 0.3, grid),
            Err(BecError::InvalidForProfile { .. })
        ));
        // Constant profile binds nothing.
        let constant =
            ModelSpec::new(Sector::Dirac, Profile::Constant { value: 1.0 }).unwrap();
        assert!(matches!(
            analytic_state(StateLabel::DiracLeft, &constant, 0.3, grid),
            Err(BecError::InvalidForProfile { .. })
        ));
        // Odd step state needs k1 != 0 and the step profile.
        assert!(matches!(
            analytic_state(StateLabel::SwOdd, &sw_sign(), 0.0, grid),
            Err(BecError::InvalidForProfile { .. })
        ));
        let sw_tanh = ModelSpec::new(
            Sector::ShallowWater,
            Profile::Tanh {
                asymptote_minus: -1.0,
                asymptote_plus: 1.0,
                length_scale: 1.0,
            },
        )
        .unwrap();
        assert!(matches!(
            analytic_state(StateLabel::SwOdd, &sw_tanh, 0.5, grid),
            Err(BecError::InvalidForProfile { .. })
        ));
        // Sector mismatch is a different error.
        assert!(matches!(
            analytic_state(StateLabel::SwEven, &spec, 0.5, grid),
            Err(BecError::NotApplicable { .. })
        ));
    }

    #[test]
    fn step_state_decay_rates_match_log_slopes() {
        let grid = Grid1d::new(16.0, 0.02).unwrap();
        let spec = sw_sign();
        // Fit log |primary component| on 1 <= x <= 5 against -kappa x.
        let fit_rate = |state: &AnalyticState, row: &dyn Fn(usize) -> usize| {
            let grid = state.layout.grid;
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for n in 0..grid.primary_sites() {
                let x = grid.primary_x(n);
                if (1.0..=5.0).contains(&x) {
                    let v = state.values[row(n)].abs();
                    if v > 0.0 {
                        xs.push(x);
                        ys.push(v.ln());
                    }
                }
            }
            let n = xs.len() as f64;
            let sx: f64 = xs.iter().sum();
            let sy: f64 = ys.iter().sum();
            let sxx: f64 = xs.iter().map(|x| x * x).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
            -(n * sxy - sx * sy) / (n * sxx - sx * sx)
        };
        let even = analytic_state(StateLabel::SwEven, &spec, 0.7, grid).unwrap();
        let layout = even.layout.clone();
        let rate = fit_rate(&even, &|n| layout.primary_row(n));
        assert_relative_eq!(rate, 1.0, max_relative = 0.01);
        let odd = analytic_state(StateLabel::SwOdd, &spec, 0.7, grid).unwrap();
        let layout = odd.layout.clone();
        let rate = fit_rate(&odd, &|n| layout.velocity_row(n));
        assert_relative_eq!(rate, 0.7, max_relative = 0.01);
    }

    #[test]
    fn step_states_have_definite_parity() {
        let grid = Grid1d::new(16.0, 0.02).unwrap();
        let spec = sw_sign();
        let even = analytic_state(StateLabel::SwEven, &spec, 0.7, grid).unwrap();
        let parity = parity_operator(&even.layout).unwrap();
        let image = parity.apply(&even.values);
        for (a, b) in image.iter().zip(&even.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        let odd = analytic_state(StateLabel::SwOdd, &spec, 0.7, grid).unwrap();
        let image = parity.apply(&odd.values);
        for (a, b) in image.iter().zip(&odd.values) {
            assert_abs_diff_eq!(*a, -b, epsilon = 1e-15);
        }
    }

    #[test]
    fn effective_potentials_match_hand_values() {
        let spec = dirac_tanh();
        let grid = Grid1d::new(10.0, 0.05).unwrap();
        let pot = effective_potentials(&spec, 0.0, grid).unwrap();
        // At the interface center: m = 0, m' = 1.
        assert_abs_diff_eq!(pot.w_sum(0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pot.w_diff(0.0), -1.0, epsilon = 1e-12);
        // Monotone non-decreasing profile: the + branch stays above k1².
        for &k1 in &[0.0, 0.7] {
            let pot = effective_potentials(&spec, k1, grid).unwrap();
            assert!(pot.inf_sum >= k1 * k1 - 1e-12);
            assert!(pot.inf_diff < pot.inf_sum);
        }
        let constant =
            ModelSpec::new(Sector::Dirac, Profile::Constant { value: 2.0 }).unwrap();
        let pot = effective_potentials(&constant, 0.5, grid).unwrap();
        for &x in &[-3.0, 0.0, 4.0] {
            assert_abs_diff_eq!(pot.w_sum(x), 4.25, epsilon = 1e-12);
            assert_abs_diff_eq!(pot.w_diff(x), 4.25, epsilon = 1e-12);
        }
        assert!(matches!(
            effective_potentials(&sw_sign(), 0.0, grid),
            Err(BecError::NotApplicable { .. })
        ));
    }

    #[test]
    fn energy_window_examples() {
        let spec = dirac_tanh();
        assert!(energy_window_check(&spec, 0.5, -0.5)); // light-cone boundary allowed
        assert!(!energy_window_check(&spec, 0.5, 1.2)); // beyond the band edge
        assert!(!energy_window_check(&spec, 1.0, 0.5)); // inside the light cone
    }

    #[test]
    fn essential_spectrum_edges() {
        assert_eq!(
            essential_spectrum_edge(&dirac_tanh(), 0.0),
            EssentialSpectrumEdge {
                threshold: 1.0,
                has_zero_band: false
            }
        );
        let sw = essential_spectrum_edge(&sw_sign(), 2.0);
        assert_abs_diff_eq!(sw.threshold, 5.0f64.sqrt(), epsilon = 1e-15);
        assert!(sw.has_zero_band);
        // The smaller asymptote magnitude sets the edge.
        let skew = ModelSpec::new(
            Sector::Dirac,
            Profile::Tanh {
                asymptote_minus: -1.0,
                asymptote_plus: 2.0,
                length_scale: 1.0,
            },
        )
        .unwrap();
        assert_abs_diff_eq!(
            essential_spectrum_edge(&skew, 0.0).threshold,
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn halfplane_dispersion_and_merging() {
        // Purely imaginary phase: flat channel at m+, merging at the origin.
        let f = halfplane_formulas(C64::new(0.0, 1.0), 1.0, 0.3).unwrap();
        assert_abs_diff_eq!(f.omega, 1.0, epsilon = 1e-15);
        assert!(f.bound);
        let (k1s, ws) = f.merging.unwrap();
        assert_abs_diff_eq!(k1s, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ws, 1.0, epsilon = 1e-15);
        // Real phase: ω = -k1, always bound, never merges.
        let f = halfplane_formulas(C64::new(1.0, 0.0), 1.0, 0.3).unwrap();
        assert_abs_diff_eq!(f.omega, -0.3, epsilon = 1e-15);
        assert!(f.bound);
        assert!(f.merging.is_none());
        assert!(matches!(
            merging_point(C64::new(1.0, 0.0), 1.0),
            Err(BecError::ImZZero { .. })
        ));
        // Oblique phase: substitution oracle.
        let z = C64::from_polar(1.0, 3.0 * std::f64::consts::FRAC_PI_4);
        let f = halfplane_formulas(z, 2.0, 1.0).unwrap();
        assert_abs_diff_eq!(f.omega, 1.5 * 2.0f64.sqrt(), epsilon = 1e-12);
        // Conjugate phases flip boundedness in k1.
        let up = halfplane_formulas(C64::new(0.0, 1.0), 1.0, -0.4).unwrap();
        assert!(!up.bound);
        let down = halfplane_formulas(C64::new(0.0, -1.0), 1.0, -0.4).unwrap();
        assert!(down.bound);
        assert!(halfplane_formulas(C64::new(0.5, 0.5), 1.0, 0.0).is_err());
    }

    #[test]
    fn identity_holds_for_random_hermitian_triples() {
        for seed in 0..5 {
            let (a, b, c) = random_hermitian_triple(8, seed);
            let resid = verify_spin1_identity(&a, &b, &c).unwrap();
            assert!(resid <= 1e-10, "seed {seed}: residual {resid}");
        }
    }

    #[test]
    fn defect_matrix_matches_its_constructive_definition() {
        // D is characterized by d²(d·S) = (d·S)³ + D; the closed-form
        // blocks must reproduce that difference exactly.
        let (a, b, c) = random_hermitian_triple(6, 42);
        let ds = operator_spin_coupling(&a, &b, &c).unwrap();
        let n = 6;
        let dsq_small = &a * &a + &b * &b + &c * &c;
        let mut dsq = DMatrix::<C64>::zeros(3 * n, 3 * n);
        for blk in 0..3 {
            dsq.view_mut((blk * n, blk * n), (n, n)).copy_from(&dsq_small);
        }
        let truth = &dsq * &ds - &ds * &ds * &ds;
        let closed = commutator_defect_matrix(&a, &b, &c).unwrap();
        let rel = (&truth - &closed).norm() / (1.0 + truth.norm());
        assert!(rel <= 1e-13, "defect mismatch {rel}");
    }

    #[test]
    fn commuting_triple_has_zero_defect() {
        let n = 4;
        let diag = |vals: [f64; 4]| {
            DMatrix::<C64>::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                vals.iter().map(|&v| C64::new(v, 0.0)),
            ))
        };
        let a = diag([1.0, -0.5, 2.0, 0.25]);
        let b = diag([0.5, 1.5, -1.0, 3.0]);
        let c = diag([2.0, 0.0, 1.0, -2.0]);
        let defect = commutator_defect_matrix(&a, &b, &c).unwrap();
        assert!(defect.norm() <= 1e-14);
        let resid = verify_spin1_identity(&a, &b, &c).unwrap();
        assert!(resid <= 1e-12);
    }

    #[test]
    fn identity_holds_for_momentum_stencil_triple() {
        // The intended operator use: scalar, tridiagonal momentum, diagonal
        // profile.
        let n = 8;
        let h = 0.5;
        let mut d2 = DMatrix::<C64>::zeros(n, n);
        for i in 0..n - 1 {
            d2[(i, i + 1)] = C64::new(0.0, -1.0 / (2.0 * h));
            d2[(i + 1, i)] = C64::new(0.0, 1.0 / (2.0 * h));
        }
        let d1 = DMatrix::<C64>::identity(n, n) * C64::new(0.8, 0.0);
        let mut d3 = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            d3[(i, i)] = C64::new(if i < n / 2 { -1.0 } else { 1.0 }, 0.0);
        }
        let resid = verify_spin1_identity(&d1, &d2, &d3).unwrap();
        assert!(resid <= 1e-10, "residual {resid}");
    }

    #[test]
    fn identity_guards_inputs() {
        let (a, b, _) = random_hermitian_triple(4, 7);
        let mut skew = a.clone();
        skew[(0, 1)] += C64::new(1e-6, 0.0);
        assert!(matches!(
            verify_spin1_identity(&skew, &a, &b),
            Err(BecError::NotHermitian { .. })
        ));
        let big = DMatrix::<C64>::identity(65, 65);
        assert!(matches!(
            verify_spin1_identity(&big, &big, &big),
            Err(BecError::InvalidConfig { .. })
        ));
    }
}
