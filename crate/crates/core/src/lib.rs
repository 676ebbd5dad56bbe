//! Numerical geometry of complex plane curves in (ℂ*)²: amoebas, coamoebas,
//! the logarithmic Gauss map, tropical spines and coamoeba region analysis.

pub mod analysis;
pub mod curve;
pub mod error;
mod index;
pub mod measure;
pub mod newton;
pub mod parse;
pub mod phase;
pub mod poly;
pub mod raster;
pub mod roots;
pub mod torus;
pub mod tropical;

pub use error::{Error, Result};
pub use newton::NewtonPolygon;
pub use phase::{real_up_to_torus_action, TorusPhase};
pub use poly::{Chart, LatticePoint, Polynomial};
pub use torus::{alga_project, QuotientPoint, TorusPoint};
