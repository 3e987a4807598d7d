//! Classical feature detection for hand-hygiene imagery.
//!
//! The pipeline stages are:
//!
//! 1. **imgcore** – pixel-grid primitives: PNM I/O, grayscale conversion,
//!    separable Gaussian blur, thresholding, dilation, Sobel gradients.
//! 2. **segmentation** – skin masking, Moore-neighbor contour tracing,
//!    convex hulls and region moments/centroids.
//! 3. **corners** – structure-tensor corner detection (Harris and
//!    Shi-Tomasi responses) with shared non-max suppression.
//! 4. **sift** – Gaussian scale-space keypoints, orientation assignment,
//!    128-value descriptors and ratio-test matching.
//! 5. **invariance** – rotation/scale/illumination repeatability
//!    experiments producing a per-detector verdict matrix.
//! 6. **pipeline** – frame-sequence centroid tracking, pause-based stage
//!    segmentation, dataset manifest ingestion and report assembly.

pub mod corners;
pub mod imgcore;
pub mod invariance;
pub mod pipeline;
pub mod segmentation;
pub mod sift;

pub use imgcore::{BinaryMask, FloatImage, GradientField, GrayImage, Kernel1D, RasterImage};
