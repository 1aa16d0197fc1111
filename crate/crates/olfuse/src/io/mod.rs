//! On-disk formats: network description text, fixed-point rasters, and
//! CSV report rows.

pub mod netfile;
pub mod raster;
pub mod report;

pub use netfile::{parse_network, NetfileError};
pub use raster::{
    read_feature_map, read_weights, write_feature_map, write_weights, RasterError,
};
pub use report::{write_csv, ReportRow, CSV_HEADER};
