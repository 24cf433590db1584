//! Distributive set functions on boxes of `R^n`: Peano–Jordan measure,
//! decompositions, strict derivatives and integrals against set functions.

pub mod catalog;
pub mod cavalieri;
pub mod decomposition;
pub mod derivative;
pub mod error;
pub mod exactsum;
pub mod expr;
pub mod func;
pub mod geometry;
pub mod integral;
pub mod measure;
pub mod quadrature;
pub mod region;
pub mod regionspec;
pub mod setfunc;

pub use error::{Error, Result};
pub use expr::{parse_expression, Enclosure, Expr};
pub use func::{NativeFn, RangeMethod, ScalarFn, SharedFn};
pub use geometry::{DyadicGrid, Hyperplane, Interval, Point};
pub use region::{Classification, Region};
pub use regionspec::{parse_region, RegionSpec};
pub use measure::{measure, MeasureReport};
pub use decomposition::{cantor_point, common_refinement, interval_decompose, mesh_decompose, Cut, Decomposition};
pub use setfunc::{parse_setfunc, parse_setfunc_on, SetFunction, SharedSetFn};
pub use derivative::{estimate_strict_derivative, ratio_bounds, Mode, RatioBounds, Schedule};
pub use integral::{darboux_sums, integrate, DarbouxSums, IntegralResult};
