//! Workload control problem: effective cost, reflection map, reflected
//! Brownian motion cost and the lower-bound report.

pub mod effective_cost;
pub mod lp;
pub mod rbm;
pub mod report;
pub mod skorokhod;

pub use effective_cost::{BcpError, EffectiveCost, MonotoneCheck};
pub use rbm::{psd_sqrt, rbm_stationary_cost, BcpModel, RbmEstimate, RbmParams, ReflectionScheme};
pub use report::{bcp_model, lower_bound_report, BoundKind, BoundParams, BoundReport, ReportError};
pub use skorokhod::{skorokhod_reflect, GridPath, Reflection};
