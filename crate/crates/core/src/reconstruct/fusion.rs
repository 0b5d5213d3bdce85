//! Incoherent combination of per-patch images on a common ground grid.

use ndarray::Array2;

use super::{bilinear, ImageFrame, ReconstructedImage};
use crate::geometry::GroundPoint;
use crate::{Error, Result};

/// Axis-aligned output raster: pixel `(i, j)` at `origin + (i·spacing, j·spacing)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetGrid {
    pub origin: GroundPoint,
    pub spacing: f64,
    pub dims: (usize, usize),
}

impl TargetGrid {
    /// Grid of `spacing` covering a `width × height` rectangle centered on `center`.
    pub fn centered(center: GroundPoint, width: f64, height: f64, spacing: f64) -> Self {
        let nx = (width / spacing).round().max(1.0) as usize;
        let ny = (height / spacing).round().max(1.0) as usize;
        Self {
            origin: GroundPoint::ground(
                center.x - (nx / 2) as f64 * spacing,
                center.y - (ny / 2) as f64 * spacing,
            ),
            spacing,
            dims: (nx, ny),
        }
    }

    pub fn frame(&self) -> ImageFrame {
        ImageFrame::ground(self.origin, [self.spacing, self.spacing])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub image: ReconstructedImage,
    /// Indices of input images that contribute nothing to the target grid.
    pub disjoint: Vec<usize>,
}

/// Resamples each image bilinearly onto `target`, divides it by its own
/// peak, and averages over all images. Pixels outside an image's raster or
/// its support contribute zero. The result is scaled to peak 1.
pub fn fuse_images(images: &[ReconstructedImage], target: &TargetGrid) -> Result<FusionOutput> {
    if images.is_empty() {
        return Err(Error::EmptyInput("fusion needs at least one image"));
    }
    if !(target.spacing > 0.0) || target.dims.0 == 0 || target.dims.1 == 0 {
        return Err(Error::param("target_grid", "spacing and dimensions must be positive"));
    }
    let frame = target.frame();
    let mut acc = Array2::<f64>::zeros(target.dims);
    let mut disjoint = Vec::new();
    let (nx, ny) = target.dims;
    for (k, img) in images.iter().enumerate() {
        let peak = img.magnitude.iter().copied().fold(0.0, f64::max);
        let Some([i0, i1, j0, j1]) = target_window(img, target) else {
            log::warn!("image {k} does not overlap the fusion grid");
            disjoint.push(k);
            continue;
        };
        let mut touched = false;
        for i in i0..i1.min(nx) {
            for j in j0..j1.min(ny) {
                let w = frame.world(i as f64, j as f64);
                if let Some(s) = &img.support {
                    if !s.contains(GroundPoint::ground(w[0], w[1])) {
                        continue;
                    }
                }
                let [u, v] = img.frame.index_of(w);
                if let Some(val) = bilinear(&img.magnitude, u, v) {
                    touched = true;
                    if peak > 0.0 {
                        acc[(i, j)] += val / peak;
                    }
                }
            }
        }
        if !touched {
            log::warn!("image {k} does not overlap the fusion grid");
            disjoint.push(k);
        }
    }
    let n = images.len() as f64;
    acc.mapv_inplace(|v| v / n);
    let max = acc.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        acc.mapv_inplace(|v| v / max);
    }
    let mut contributing: Vec<(usize, usize)> = images
        .iter()
        .flat_map(|i| i.contributing_patches.iter().copied())
        .collect();
    contributing.dedup();
    Ok(FusionOutput {
        image: ReconstructedImage {
            magnitude: acc,
            frame,
            contributing_patches: contributing,
            height: None,
            support: None,
        },
        disjoint,
    })
}

/// Target index ranges `[i0, i1, j0, j1)` covering the image raster.
fn target_window(img: &ReconstructedImage, target: &TargetGrid) -> Option<[usize; 4]> {
    let (n0, n1) = img.dim();
    if n0 == 0 || n1 == 0 {
        return None;
    }
    let (a, b) = ((n0 - 1) as f64, (n1 - 1) as f64);
    let corners = [[0.0, 0.0], [a, 0.0], [0.0, b], [a, b]].map(|[u, v]| img.frame.world(u, v));
    let lo = |c: usize, o: f64| {
        let m = corners.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min);
        ((m - o) / target.spacing).floor()
    };
    let hi = |c: usize, o: f64| {
        let m = corners.iter().map(|p| p[c]).fold(f64::NEG_INFINITY, f64::max);
        ((m - o) / target.spacing).ceil() + 1.0
    };
    let (i0, i1) = (lo(0, target.origin.x).max(0.0), hi(0, target.origin.x));
    let (j0, j1) = (lo(1, target.origin.y).max(0.0), hi(1, target.origin.y));
    if i1 <= 0.0 || j1 <= 0.0 || i0 >= target.dims.0 as f64 || j0 >= target.dims.1 as f64 {
        return None;
    }
    Some([i0 as usize, i1 as usize, j0 as usize, j1 as usize])
}
