//! Exterior calculus on R^4.

pub mod coefficient;
pub mod form;
pub mod homotopy;
pub mod json;
pub mod numeric;
pub mod path;
pub mod poly;

pub use coefficient::{Coefficient, Partials, Point, SampledField};
pub use form::{DifferentialForm, MultiIndex, SmoothMap, VectorField, BIRTH_ALIASES, PAIRS, THETA_ALIASES};
pub use homotopy::{center_projection, fiber_from_center, homotopy_operator, homotopy_residual, Fiber};
pub use numeric::CompiledForm;
pub use path::FormPath;
pub use poly::{rat, rat_int, Poly4, Rational};
