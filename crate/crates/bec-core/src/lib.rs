//! Numerical laboratory for bulk and edge topological indices of 2D wave
//! operators with a spatially varying mass or Coriolis profile.
//!
//! The crate computes three independent views of the same integer:
//!
//! * a **bulk index** obtained by integrating Berry curvature of the
//!   half-space Bloch Hamiltonians on either side of an interface and gluing
//!   the two half-integers ([`bulk`]),
//! * a **boundary degree** counting the winding of the symbol around the
//!   interface ([`bulk::boundary_degree`]),
//! * an **edge index** counting signed intersections of interface-trapped
//!   spectral channels with a reference Fermi line ([`edge`]),
//!
//! and checks that they agree. Two sectors are supported: a spin-1/2 Dirac
//! operator and a spin-1 rotating shallow-water operator, both reduced to
//! one-dimensional fiber operators by a Fourier transform along the
//! interface ([`model`], [`fiber`]). Closed-form trapped states and related
//! identities used for cross-validation live in [`oracle`].

pub mod banded;
pub mod bulk;
pub mod edge;
pub mod error;
pub mod fiber;
pub mod model;
pub mod oracle;
pub mod profile;
pub mod report;

pub use error::{BecError, Result};
pub use profile::Profile;
