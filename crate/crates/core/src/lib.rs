pub mod calib;
pub mod config;
pub mod contour;
pub mod digits;
pub mod evalkit;
pub mod font;
pub mod gauge;
pub mod marker;
pub mod orient;
pub mod raster;
pub mod synth;
