//! Construction of atomic line measures from torus measures.

mod atomic;
mod build;
mod nested;
mod point_mass;
mod window;

pub use atomic::{AtomicLineMeasure, Growth, LineAtom};
pub use build::{build_point_mass_lambda, level_step, level_tolerance, BuildOptions};
pub use nested::{
    build_nested_lambda, NestedConstruction, NestedConstructionPlan, PlanJson, WindowRecord,
    MAX_EXTRA_PRECISION,
};
pub use point_mass::{
    parse_point_mass_json, PointMassAtomJson, PointMassJson, TorusPointMassMeasure,
    WEIGHT_SUM_TOLERANCE,
};
pub use window::{window_check, WindowReport};
