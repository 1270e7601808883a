//! Model construction: planar Bloch Hamiltonians, their spectral projectors,
//! and the one-dimensional fiber operators obtained by Fourier transforming
//! along the interface direction.
//!
//! Two sectors are supported:
//!
//! * [`Sector::Dirac`] — a two-band operator `H = k1·σ1 + k2·σ2 + m·σ3`
//!   built from Pauli matrices, with a mass profile `m(x2)`;
//! * [`Sector::ShallowWater`] — a three-band rotating shallow-water operator
//!   `H = k1·S1 + k2·S2 + f·S3` built from spin-1 generators, with a
//!   Coriolis profile `f(x2)`.
//!
//! For a profile frozen at one of its asymptotic values the operator is a
//! translation-invariant symbol `H(k1, k2)`; [`bloch_point`] evaluates it
//! together with the spectral projector onto its positive band. For the
//! spatially varying profile, [`build_fiber_operator`] discretizes the
//! half-Fourier operator `H(k1, -i d/dx2, m(x2))` on a finite interval with
//! Dirichlet walls, producing a real symmetric banded matrix.

use crate::banded::RealBanded;
use crate::error::{BecError, Result};
use crate::profile::Profile;
use nalgebra::{Complex, DMatrix, Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Complex scalar used throughout the spectral code.
pub type C64 = Complex<f64>;

/// Which of the two supported wave operators a computation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    /// Two-band spin-1/2 operator with Pauli-matrix structure.
    Dirac,
    /// Three-band spin-1 rotating shallow-water operator.
    ShallowWater,
}

impl Sector {
    /// Number of internal components of the wave field.
    pub fn bands(self) -> usize {
        match self {
            Sector::Dirac => 2,
            Sector::ShallowWater => 3,
        }
    }
}

impl std::fmt::Display for Sector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sector::Dirac => write!(f, "dirac"),
            Sector::ShallowWater => write!(f, "shallow_water"),
        }
    }
}

/// A sector together with the transverse profile (mass or Coriolis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Which wave operator to build.
    pub sector: Sector,
    /// Mass profile `m(x2)` (Dirac) or Coriolis profile `f(x2)`
    /// (shallow water).
    pub profile: Profile,
}

impl ModelSpec {
    /// Validates the profile and returns the spec.
    pub fn new(sector: Sector, profile: Profile) -> Result<Self> {
        profile.validate()?;
        Ok(ModelSpec { sector, profile })
    }
}

/// First Pauli matrix `σ1`.
pub fn pauli1() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
    )
}

/// Second Pauli matrix `σ2`.
pub fn pauli2() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(0.0, 0.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, 0.0),
    )
}

/// Third Pauli matrix `σ3`.
pub fn pauli3() -> Matrix2<C64> {
    Matrix2::new(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-1.0, 0.0),
    )
}

/// Spin-1 generator coupling the height field to the first velocity
/// component: `(S1)_{12} = (S1)_{21} = 1`, all other entries zero.
pub fn spin1_s1() -> Matrix3<C64> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    Matrix3::new(z, o, z, o, z, z, z, z, z)
}

/// Spin-1 generator coupling the height field to the second velocity
/// component: `(S2)_{13} = (S2)_{31} = 1`, all other entries zero.
pub fn spin1_s2() -> Matrix3<C64> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    Matrix3::new(z, z, o, z, z, z, o, z, z)
}

/// Spin-1 generator rotating the velocity plane:
/// `(S3)_{23} = -i`, `(S3)_{32} = +i`, all other entries zero.
pub fn spin1_s3() -> Matrix3<C64> {
    let z = C64::new(0.0, 0.0);
    Matrix3::new(
        z,
        z,
        z,
        z,
        z,
        C64::new(0.0, -1.0),
        z,
        C64::new(0.0, 1.0),
        z,
    )
}

/// Builds the translation-invariant symbol `d1·G1 + d2·G2 + d3·G3` where
/// `(G1, G2, G3)` are the sector's generators (Pauli or spin-1) and
/// `d = (k1, k2, mass)`.
///
/// The result is Hermitian by construction; dimension is
/// [`Sector::bands`]`()`.
pub fn build_planar_hamiltonian(sector: Sector, k1: f64, k2: f64, mass: f64) -> DMatrix<C64> {
    let d1 = C64::new(k1, 0.0);
    let d2 = C64::new(k2, 0.0);
    let d3 = C64::new(mass, 0.0);
    match sector {
        Sector::Dirac => {
            let m = pauli1() * d1 + pauli2() * d2 + pauli3() * d3;
            DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
        }
        Sector::ShallowWater => {
            let m = spin1_s1() * d1 + spin1_s2() * d2 + spin1_s3() * d3;
            DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
        }
    }
}

/// The symbol at one momentum point together with its positive-band
/// spectral projector.
#[derive(Debug, Clone)]
pub struct BlochPoint {
    /// Momentum `(k1, k2)` the symbol was evaluated at.
    pub k: (f64, f64),
    /// Coefficient vector `d = (k1, k2, mass)`.
    pub d: Vector3<f64>,
    /// Unit vector `d/|d|`.
    pub e: Vector3<f64>,
    /// Orthogonal projector onto the band with eigenvalue `+|d|`.
    pub projector: DMatrix<C64>,
}

/// Minimum admissible `|d|` before the symbol is declared gapless.
fn gap_floor(sector: Sector) -> f64 {
    match sector {
        Sector::Dirac => 1e-14,
        // The rank-1 projector formula divides by |d|^2 twice; keep a
        // slightly wider exclusion zone for the three-band sector.
        Sector::ShallowWater => 1e-12,
    }
}

/// Evaluates the positive-band projector of the planar symbol at `(k1, k2)`
/// for the sector frozen at constant `mass`.
///
/// For the two-band sector the projector is `(I + e·σ)/2`. For the
/// three-band sector it is the rank-1 projector `v v†` onto the band with
/// eigenvalue `+|d|`, assembled from a closed-form eigenvector (no iterative
/// diagonalization).
///
/// # Errors
///
/// Returns [`BecError::GaplessPoint`] when `|d|` falls below the sector's
/// floor, i.e. when the positive band touches the others and the projector
/// stops being defined.
pub fn bloch_point(sector: Sector, k1: f64, k2: f64, mass: f64) -> Result<BlochPoint> {
    let d = Vector3::new(k1, k2, mass);
    let norm = d.norm();
    if norm < gap_floor(sector) {
        return Err(BecError::GaplessPoint {
            k1,
            k2,
            separation: norm,
        });
    }
    let e = d / norm;
    let projector = match sector {
        Sector::Dirac => {
            let m = (pauli1() * C64::new(e[0], 0.0)
                + pauli2() * C64::new(e[1], 0.0)
                + pauli3() * C64::new(e[2], 0.0)
                + Matrix2::identity())
                * C64::new(0.5, 0.0);
            DMatrix::from_fn(2, 2, |i, j| m[(i, j)])
        }
        Sector::ShallowWater => {
            let v = positive_band_vector(d[0], d[1], d[2], norm);
            DMatrix::from_fn(3, 3, |i, j| v[i] * v[j].conj())
        }
    };
    Ok(BlochPoint {
        k: (k1, k2),
        d,
        e,
        projector,
    })
}

/// Closed-form unit eigenvector of `d1 S1 + d2 S2 + d3 S3` for the
/// eigenvalue `+|d|`.
///
/// Away from the `d3` axis the (unnormalized) eigenvector is
/// `(ρ², d1·ω − i·d2·d3, d2·ω + i·d1·d3)` with `ρ² = d1² + d2²` and
/// `ω = |d|`; on the axis it degenerates, and the limit
/// `(0, 1, i·sgn(d3))/√2` is used instead.
fn positive_band_vector(d1: f64, d2: f64, d3: f64, norm: f64) -> Vector3<C64> {
    let rho2 = d1 * d1 + d2 * d2;
    // Switch to the on-axis limit once ρ² is so small that the generic
    // formula loses all significant digits.
    if rho2 <= norm * norm * 1e-24 {
        let s = if d3 >= 0.0 { 1.0 } else { -1.0 };
        let r = std::f64::consts::FRAC_1_SQRT_2;
        return Vector3::new(C64::new(0.0, 0.0), C64::new(r, 0.0), C64::new(0.0, s * r));
    }
    let v = Vector3::new(
        C64::new(rho2, 0.0),
        C64::new(d1 * norm, -d2 * d3),
        C64::new(d2 * norm, d1 * d3),
    );
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Uniform transverse grid used to discretize a fiber operator.
///
/// Primary sites are `x_n = (n - M) h` for `n = 0, …, N-1` with
/// `M = ⌊L/h⌋` and `N = 2M + 1`, spanning `[-Mh, +Mh]`. Field components
/// that the first-derivative stencil pairs with live on the midpoint grid
/// `y_n = x_n + h/2` (one fewer site), which keeps the discrete derivative
/// an exact adjoint pair and the matrix symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1d {
    /// Half-width `L` of the computational interval.
    pub half_width: f64,
    /// Grid spacing `h`.
    pub spacing: f64,
}

impl Grid1d {
    /// Creates a grid after validating `L > 0`, `h > 0`, and `L/h ≥ 16`
    /// (below which the discretization cannot resolve anything useful).
    pub fn new(half_width: f64, spacing: f64) -> Result<Self> {
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(BecError::BadGrid {
                reason: format!("half_width must be positive and finite, got {half_width}"),
            });
        }
        if !spacing.is_finite() || spacing <= 0.0 {
            return Err(BecError::BadGrid {
                reason: format!("spacing must be positive and finite, got {spacing}"),
            });
        }
        if half_width / spacing < 16.0 {
            return Err(BecError::BadGrid {
                reason: format!(
                    "half_width/spacing = {:.3} is below the minimum of 16 sites per side",
                    half_width / spacing
                ),
            });
        }
        Ok(Grid1d {
            half_width,
            spacing,
        })
    }

    /// Number of primary sites `N = 2⌊L/h⌋ + 1`.
    pub fn primary_sites(self) -> usize {
        2 * (self.half_width / self.spacing).floor() as usize + 1
    }

    /// Index offset `M = ⌊L/h⌋` such that `x_M = 0`.
    pub fn center_index(self) -> usize {
        (self.half_width / self.spacing).floor() as usize
    }

    /// Coordinate of primary site `n`.
    pub fn primary_x(self, n: usize) -> f64 {
        (n as f64 - self.center_index() as f64) * self.spacing
    }

    /// Coordinate of midpoint site `n` (there are `N - 1` of them).
    pub fn midpoint_x(self, n: usize) -> f64 {
        self.primary_x(n) + 0.5 * self.spacing
    }

    /// Default grid for a profile with gap scale `m̃` scanned up to
    /// momentum `k_max`: wide enough to hold several decay lengths of the
    /// slowest trapped state, fine enough to resolve the shortest
    /// oscillation.
    pub fn default_for(gap_scale: f64, k_max: f64) -> Result<Self> {
        let m = gap_scale.max(1e-3);
        let half_width = (10.0 / m).max(10.0 / k_max.abs().max(1.0));
        let spacing = (0.05 / m).min(0.05);
        Grid1d::new(half_width, spacing)
    }
}

/// Layout of the discretized fiber operator: which matrix row corresponds
/// to which field component and site.
#[derive(Debug, Clone)]
pub struct FiberLayout {
    /// Sector the operator was built for.
    pub sector: Sector,
    /// Grid the operator was built on.
    pub grid: Grid1d,
    /// Interface momentum `k1`.
    pub k1: f64,
    /// Total matrix dimension.
    pub dim: usize,
}

impl FiberLayout {
    /// Layout for `sector` on `grid` at interface momentum `k1`.
    ///
    /// Primary sites carry the collocated components (Dirac `u`; shallow
    /// water `η` and `u`), midpoints carry the staggered component (`v`),
    /// of which there is one fewer.
    pub fn new(sector: Sector, grid: Grid1d, k1: f64) -> Self {
        let n_sites = grid.primary_sites();
        let dim = match sector {
            Sector::Dirac => 2 * n_sites - 1,
            Sector::ShallowWater => 3 * n_sites - 1,
        };
        FiberLayout {
            sector,
            grid,
            k1,
            dim,
        }
    }

    /// Row of the first-component field at primary site `n`.
    ///
    /// Dirac: the upper spinor component `u_n`. Shallow water: the height
    /// field `η_n`.
    pub fn primary_row(&self, n: usize) -> usize {
        match self.sector {
            Sector::Dirac => 2 * n,
            Sector::ShallowWater => 3 * n,
        }
    }

    /// Row of the field living on midpoint site `n`.
    ///
    /// Dirac: the lower spinor component `v_n`. Shallow water: the second
    /// velocity component `v_n`.
    pub fn midpoint_row(&self, n: usize) -> usize {
        match self.sector {
            Sector::Dirac => 2 * n + 1,
            Sector::ShallowWater => 3 * n + 2,
        }
    }

    /// Row of the first velocity component `u_n` (shallow water only),
    /// collocated with the height field on primary sites.
    pub fn velocity_row(&self, n: usize) -> usize {
        debug_assert_eq!(self.sector, Sector::ShallowWater);
        3 * n + 1
    }

    /// `|x|` coordinate associated with each matrix row, used by
    /// localization diagnostics.
    pub fn row_positions(&self) -> Vec<f64> {
        let n_sites = self.grid.primary_sites();
        let mut pos = vec![0.0; self.dim];
        for n in 0..n_sites {
            pos[self.primary_row(n)] = self.grid.primary_x(n).abs();
            if self.sector == Sector::ShallowWater {
                pos[self.velocity_row(n)] = self.grid.primary_x(n).abs();
            }
        }
        for n in 0..n_sites - 1 {
            pos[self.midpoint_row(n)] = self.grid.midpoint_x(n).abs();
        }
        pos
    }
}

/// A discretized fiber operator: the banded matrix plus its layout.
#[derive(Debug, Clone)]
pub struct FiberOperator {
    /// Real symmetric banded matrix representing the operator.
    pub matrix: RealBanded,
    /// Row layout and grid metadata.
    pub layout: FiberLayout,
}

/// Discretizes the fiber operator `H(k1, -i d/dx2, profile(x2))` on `grid`
/// with Dirichlet (hard wall) truncation at `±L`.
///
/// Both sectors are realized as *real* symmetric matrices: for the Dirac
/// sector the symbol `k1 σ1 + k2 σ2 + m σ3` is already real once
/// `-i d/dx2` replaces `k2` (the `σ2` entries pick up `∓d/dx2`); for the
/// shallow-water sector the second velocity component is regauged by a
/// factor `i`, which turns all couplings real while preserving the
/// spectrum and the modulus of every component.
///
/// The first-derivative term pairs primary sites with midpoint sites
/// (`(u_n, v_n) = -1/h`, `(v_n, u_{n+1}) = +1/h`), an adjoint pair whose
/// skew part is the exact centered derivative on the fine grid. Profile
/// samples multiply each component at its own site (primary or midpoint).
/// The Dirac `k1 σ1` coupling, which connects the two staggered grids, is
/// realized by fourth-order midpoint interpolation (weights
/// `-1/16, 9/16, 9/16, -1/16`) in the interior and two-point averaging at
/// the walls; this keeps the dispersion error of trapped branches far
/// inside the spectral windows used by downstream checks. The
/// shallow-water `k1 S1` coupling is collocated (height and first velocity
/// share primary sites) and therefore exact.
///
/// # Errors
///
/// Propagates profile validation failures as [`BecError::InvalidConfig`].
pub fn build_fiber_operator(spec: &ModelSpec, grid: Grid1d, k1: f64) -> Result<FiberOperator> {
    spec.profile.validate()?;
    if !k1.is_finite() {
        return Err(BecError::InvalidConfig {
            reason: format!("k1 must be finite, got {k1}"),
        });
    }
    let n_sites = grid.primary_sites();
    let h = grid.spacing;
    match spec.sector {
        Sector::Dirac => {
            let layout = FiberLayout::new(Sector::Dirac, grid, k1);
            let mut m = RealBanded::zeros(layout.dim, 3);
            // Mass term: +m on the upper component (primary sites), -m on
            // the lower component (midpoint sites).
            for n in 0..n_sites {
                let r = layout.primary_row(n);
                m.add_upper(r, r, spec.profile.eval(grid.primary_x(n)));
            }
            for n in 0..n_sites - 1 {
                let r = layout.midpoint_row(n);
                m.add_upper(r, r, -spec.profile.eval(grid.midpoint_x(n)));
            }
            // Derivative term (adjoint pair across the staggered grids).
            for n in 0..n_sites - 1 {
                m.add_upper(layout.primary_row(n), layout.midpoint_row(n), -1.0 / h);
                m.add_upper(layout.midpoint_row(n), layout.primary_row(n + 1), 1.0 / h);
            }
            // k1 coupling: u_n picks up interpolated v values.
            for n in 0..n_sites {
                for (j, w) in dirac_coupling_stencil(n, n_sites) {
                    let (row, col, val) = order_pair(
                        layout.primary_row(n),
                        layout.midpoint_row(j),
                        k1 * w,
                    );
                    m.add_upper(row, col, val);
                }
            }
            Ok(FiberOperator { matrix: m, layout })
        }
        Sector::ShallowWater => {
            let layout = FiberLayout::new(Sector::ShallowWater, grid, k1);
            let mut m = RealBanded::zeros(layout.dim, 2);
            // k1 coupling between height and first velocity (collocated).
            for n in 0..n_sites {
                m.add_upper(layout.primary_row(n), layout.velocity_row(n), k1);
            }
            for n in 0..n_sites - 1 {
                let f_mid = spec.profile.eval(grid.midpoint_x(n));
                // Derivative term between height and second velocity.
                m.add_upper(layout.primary_row(n), layout.midpoint_row(n), -1.0 / h);
                m.add_upper(layout.midpoint_row(n), layout.primary_row(n + 1), 1.0 / h);
                // Coriolis rotation between the two velocity components,
                // averaged onto the midpoint where v lives.
                m.add_upper(layout.velocity_row(n), layout.midpoint_row(n), -f_mid / 2.0);
                m.add_upper(layout.midpoint_row(n), layout.velocity_row(n + 1), -f_mid / 2.0);
            }
            Ok(FiberOperator { matrix: m, layout })
        }
    }
}

/// Interpolation stencil carrying the midpoint field onto primary site `n`:
/// pairs `(midpoint index, weight)`.
///
/// Interior sites use the fourth-order four-point midpoint interpolation;
/// sites too close to a wall fall back to the two-point average (or a
/// single neighbor at the outermost sites).
fn dirac_coupling_stencil(n: usize, n_sites: usize) -> Vec<(usize, f64)> {
    if n >= 2 && n + 3 <= n_sites {
        vec![
            (n - 2, -1.0 / 16.0),
            (n - 1, 9.0 / 16.0),
            (n, 9.0 / 16.0),
            (n + 1, -1.0 / 16.0),
        ]
    } else {
        let mut out = Vec::with_capacity(2);
        if n >= 1 {
            out.push((n - 1, 0.5));
        }
        if n + 1 < n_sites {
            out.push((n, 0.5));
        }
        out
    }
}

/// Orders a matrix entry into upper-triangle form.
fn order_pair(a: usize, b: usize, v: f64) -> (usize, usize, f64) {
    if a <= b {
        (a, b, v)
    } else {
        (b, a, v)
    }
}

/// The reflection `x2 ↦ -x2` acting on the discretized fiber, stored as a
/// signed permutation (entry `perm[i]` with sign `sign[i]` is where row `i`
/// is sent).
#[derive(Debug, Clone)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    sign: Vec<f64>,
}

impl SignedPermutation {
    /// Applies the operator to a vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (i, (&p, &s)) in self.perm.iter().zip(&self.sign).enumerate() {
            y[p] = s * x[i];
        }
        y
    }

    /// Expectation value `⟨x, Π x⟩ / ⟨x, x⟩`, the parity of a state.
    pub fn expectation(&self, x: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, (&p, &s)) in self.perm.iter().zip(&self.sign).enumerate() {
            num += x[p] * s * x[i];
            den += x[i] * x[i];
        }
        num / den
    }

    /// Destination row of row `i`.
    pub fn image(&self, i: usize) -> (usize, f64) {
        (self.perm[i], self.sign[i])
    }
}

/// Builds the parity operator `Π` for a shallow-water fiber: height and
/// first velocity reflect evenly across the center site, the second
/// velocity (which lives on midpoints and carries one derivative) reflects
/// with a sign flip.
///
/// `Π` commutes with the fiber operator exactly when the profile is odd;
/// `Π² = 1` holds by construction.
///
/// # Errors
///
/// Returns [`BecError::NotApplicable`] for the Dirac sector, whose fiber
/// operator has no parity symmetry (the mass term is odd but the `σ3`
/// structure does not flip).
pub fn parity_operator(layout: &FiberLayout) -> Result<SignedPermutation> {
    match layout.sector {
        Sector::Dirac => Err(BecError::NotApplicable {
            operation: "parity_operator",
            reason: "the two-band fiber operator has no reflection symmetry".into(),
        }),
        Sector::ShallowWater => {
            let n_sites = layout.grid.primary_sites();
            let mut perm = vec![0usize; layout.dim];
            let mut sign = vec![0.0f64; layout.dim];
            for n in 0..n_sites {
                let r = layout.primary_row(n);
                perm[r] = layout.primary_row(n_sites - 1 - n);
                sign[r] = 1.0;
                let r = layout.velocity_row(n);
                perm[r] = layout.velocity_row(n_sites - 1 - n);
                sign[r] = 1.0;
            }
            for n in 0..n_sites - 1 {
                let r = layout.midpoint_row(n);
                // Midpoint y_n = x_n + h/2 reflects to -y_n = y_{N-2-n}.
                perm[r] = layout.midpoint_row(n_sites - 2 - n);
                sign[r] = -1.0;
            }
            Ok(SignedPermutation { perm, sign })
        }
    }
}
