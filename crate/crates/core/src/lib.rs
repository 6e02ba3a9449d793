//! Core algorithms for synthetic nuclei mask generation, skeleton-based
//! shape encodings, contour regularization losses, image quality metrics,
//! and instance segmentation evaluation.

pub mod io;
pub mod loss;
pub mod quality;
pub mod raster;
pub mod seg;
pub mod synth;
pub mod topo;

pub use raster::{
    BinaryMask, Connectivity, ContourSet, GrayImage, LabelMap, Neighborhood, PixelCoord,
    RasterError, Region, RgbImage,
};
