//! Lie groupoids, connections on them, and principal bundles over them,
//! modelled in global coordinates and verified numerically.
//!
//! Every geometric object is a concrete smooth map on coordinate space.
//! Derivatives come from forward-mode dual numbers ([`smooth::Jet`]), and
//! each axiom is checked as a residual at seeded sample points. The
//! [`zoo`] holds examples with known answers, including ones built to
//! fail, and [`suite`] runs them and writes a report.
//!
//! ```
//! use liegroupoid::connection::check_composition_axiom;
//! use liegroupoid::zoo;
//!
//! let ex = zoo::pair_groupoid(1);
//! let c = ex.connection.as_ref().unwrap();
//! assert!(check_composition_axiom(c, 20, 7).unwrap().max() < 1e-12);
//!
//! let bad = zoo::pair_groupoid_perturbed();
//! let c = bad.connection.as_ref().unwrap();
//! assert!(check_composition_axiom(c, 20, 7).unwrap().max() > 1e-3);
//! ```

pub mod connection;
pub mod error;
pub mod forms;
pub mod groupoid;
pub mod liegroup;
pub mod principal;
pub mod residual;
pub mod sampling;
pub mod smooth;
pub mod suite;
pub mod zoo;

pub use connection::GroupoidConnection;
pub use error::{GeomError, Result};
pub use forms::DifferentialForm;
pub use groupoid::{GroupoidMorphism, LieGroupoid};
pub use liegroup::{InvariantPolynomial, MatrixLieGroup};
pub use principal::{ConnectionForm, PrincipalGroupoidBundle};
pub use residual::Residuals;
pub use smooth::{Jet, SmoothMap};
