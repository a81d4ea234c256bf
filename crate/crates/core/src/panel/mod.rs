//! Panel data: representation, ingestion, balancing, transformations,
//! design matrices and cluster-robust covariance.

mod covariance;
mod dataset;
mod design;
mod io;
mod transform;

pub use covariance::{clustered_covariance, ClusteredCov};
pub use dataset::{PanelDataset, PanelRow, CENSOR_PERIOD, CENSOR_VALUE};
pub use design::{build_design, Design, DesignSpec, INTERCEPT};
pub use io::{load_panel, load_panel_from_reader, PanelSchema};
pub use transform::{balance_panel, make_absorbing, within_transform};
pub(crate) use transform::demean_blocks as demean_in_blocks;
