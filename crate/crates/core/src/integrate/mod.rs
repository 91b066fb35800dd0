//! Expectations under the Poisson measure and the identity checks built on them.

pub mod checks;
pub mod forms;
pub mod observable;
pub mod series;

pub use checks::{
    check_bochner_form, check_derham_form, check_derham_gradient, check_dirichlet_form, check_ibp, check_mecke, check_weitzenbock, CheckReport,
    MeckeIntegrand, CSV_HEADER,
};
pub use observable::{point_fn, Observable, PointFn, Slot};
pub use series::{expect_mc, expect_series, MCExpectation, SeriesExpectation, SeriesOptions};
