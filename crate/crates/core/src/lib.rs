//! Exact torus decompositions and singularity classification for plane quartics.
//!
//! The crate is layered bottom-up:
//!
//! * [`fieldtower`]: exact coefficient fields, iterated extensions of Q.
//! * [`polyring`] and [`parse`]: sparse multivariate polynomials over a tower.
//! * [`localsing`]: singular loci, Milnor numbers, germ and configuration classification.
//! * [`torusdec`]: verification and construction of torus decompositions.
//! * [`degen`]: degeneration families of quartics and sextics.
//! * [`catalog`]: embedded fixtures and the verification harness.
//! * [`doc`]: the text document format shared by fixtures and the CLI.

pub mod fieldtower;
pub mod parse;
pub mod polyring;
pub mod localsing;
pub mod report;
pub mod torusdec;
pub mod catalog;
pub mod degen;
pub mod doc;
pub mod upoly;

pub use fieldtower::{Coeff, ExtensionStep, FieldElement, FieldTower, TowerError};
pub use parse::{parse_coeff, parse_poly, parse_tower, ParseError};
pub use polyring::{MultiPoly, PolyError, PolyRing, ProjectiveTransform};
