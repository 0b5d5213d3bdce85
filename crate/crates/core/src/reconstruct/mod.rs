//! Image formation from aligned patches.
//!
//! * [`procedure1_invert`]: bin every sample of every patch into one
//!   zero-filled spectrum grid and inverse-transform it.
//! * [`procedure2_per_patch`] and [`fuse_images`]: image each patch on its own
//!   rotated lattice, then combine magnitudes on a common ground grid.
//! * [`range_profiles`] and [`intersect_lines`]: locate reflectors from range
//!   information alone when the cross resolution is too coarse.
//! * [`estimate_height`]: surface height from the phase progression of images
//!   formed at several projection heights.

mod fusion;
mod height;
mod procedure1;
mod procedure2;
mod profiles;

use std::path::Path;

use ndarray::Array2;

use crate::geometry::{Direction, EllipseFootprint, GroundPoint};
use crate::Result;

pub use fusion::{fuse_images, FusionOutput, TargetGrid};
pub use height::{estimate_height, HeightConfig, HeightMap, HeightPlane};
pub use procedure1::{procedure1_invert, procedure1_invert_masked, Procedure1Config, Procedure1Output, SpectrumGrid};
pub use procedure2::{
    lattice_steps, procedure2_per_patch, Procedure2Config, Procedure2Output,
};
pub use profiles::{
    intersect_lines, range_profiles, IntersectConfig, IntersectOutput, LocusModel,
    ProfileConfig, RangePeak, RangeProfile, ReflectorEstimate, StationProfile, Taper,
    write_estimates_csv,
};

/// Placement of an image raster on the ground: pixel `(i, j)` sits at
/// `origin + i·spacing[0]·axes[0] + j·spacing[1]·axes[1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageFrame {
    pub origin: GroundPoint,
    pub axes: [Direction; 2],
    pub spacing: [f64; 2],
}

impl ImageFrame {
    /// Axis-aligned frame.
    pub fn ground(origin: GroundPoint, spacing: [f64; 2]) -> Self {
        Self {
            origin,
            axes: [Direction::X, Direction::Y],
            spacing,
        }
    }

    pub fn world(&self, i: f64, j: f64) -> [f64; 2] {
        let [a, b] = self.axes;
        let u = i * self.spacing[0];
        let v = j * self.spacing[1];
        [
            self.origin.x + u * a.x() + v * b.x(),
            self.origin.y + u * a.y() + v * b.y(),
        ]
    }

    /// Fractional pixel indices of a ground point. Assumes orthogonal axes.
    pub fn index_of(&self, p: [f64; 2]) -> [f64; 2] {
        let d = [p[0] - self.origin.x, p[1] - self.origin.y];
        [
            self.axes[0].dot(d) / self.spacing[0],
            self.axes[1].dot(d) / self.spacing[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedImage {
    /// Indexed `[i, j]` along the frame axes.
    pub magnitude: Array2<f64>,
    pub frame: ImageFrame,
    /// `(tx_id, rx_id)` of every patch that contributed.
    pub contributing_patches: Vec<(usize, usize)>,
    pub height: Option<Array2<f64>>,
    /// Ground region the image is trusted over; fusion ignores pixels outside it.
    pub support: Option<EllipseFootprint>,
}

impl ReconstructedImage {
    pub fn pixel_spacing(&self) -> [f64; 2] {
        self.frame.spacing
    }

    pub fn origin(&self) -> GroundPoint {
        self.frame.origin
    }

    pub fn dim(&self) -> (usize, usize) {
        self.magnitude.dim()
    }

    pub fn peak(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for ((i, j), v) in self.magnitude.indexed_iter() {
            if *v > best.2 {
                best = (i, j, *v);
            }
        }
        best
    }

    /// Ground position of the brightest pixel.
    pub fn peak_position(&self) -> [f64; 2] {
        let (i, j, _) = self.peak();
        self.frame.world(i as f64, j as f64)
    }

    /// Copy with the peak scaled to 1 (unchanged if the image is all zero).
    pub fn normalized(&self) -> ReconstructedImage {
        let mut out = self.clone();
        let max = self.magnitude.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            out.magnitude.mapv_inplace(|v| v / max);
        }
        out
    }

    /// Length in meters along each frame axis of the contiguous run of
    /// pixels through the peak whose magnitude is at least `1/√2` of the
    /// peak (the −3 dB extent).
    pub fn half_power_extent(&self) -> [f64; 2] {
        let (pi, pj, peak) = self.peak();
        let level = peak / std::f64::consts::SQRT_2;
        let (ni, nj) = self.dim();
        let run = |n: usize, p: usize, get: &dyn Fn(usize) -> f64| -> usize {
            let mut lo = p;
            while lo > 0 && get(lo - 1) >= level {
                lo -= 1;
            }
            let mut hi = p;
            while hi + 1 < n && get(hi + 1) >= level {
                hi += 1;
            }
            hi - lo + 1
        };
        let along_i = run(ni, pi, &|i| self.magnitude[(i, pj)]);
        let along_j = run(nj, pj, &|j| self.magnitude[(pi, j)]);
        [
            along_i as f64 * self.frame.spacing[0],
            along_j as f64 * self.frame.spacing[1],
        ]
    }

    /// CSV with columns `x_index, y_index, magnitude[, height]`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        if self.height.is_some() {
            w.write_record(["x_index", "y_index", "magnitude", "height"])?;
        } else {
            w.write_record(["x_index", "y_index", "magnitude"])?;
        }
        for ((i, j), v) in self.magnitude.indexed_iter() {
            let mut rec = vec![i.to_string(), j.to_string(), v.to_string()];
            if let Some(h) = &self.height {
                rec.push(h[(i, j)].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        crate::io::write_pgm(path, &self.magnitude)
    }
}

/// Bilinear sample of `a` at fractional index `(u, v)`; `None` outside the
/// raster.
pub(crate) fn bilinear(a: &Array2<f64>, u: f64, v: f64) -> Option<f64> {
    let (n0, n1) = a.dim();
    if n0 == 0 || n1 == 0 || !(u >= 0.0 && v >= 0.0) {
        return None;
    }
    let max0 = (n0 - 1) as f64;
    let max1 = (n1 - 1) as f64;
    if u > max0 || v > max1 {
        return None;
    }
    let i = (u.floor() as usize).min(n0.saturating_sub(2));
    let j = (v.floor() as usize).min(n1.saturating_sub(2));
    let s = if n0 > 1 { u - i as f64 } else { 0.0 };
    let t = if n1 > 1 { v - j as f64 } else { 0.0 };
    let at = |di: usize, dj: usize| a[((i + di).min(n0 - 1), (j + dj).min(n1 - 1))];
    Some(
        (1.0 - s) * (1.0 - t) * at(0, 0)
            + s * (1.0 - t) * at(1, 0)
            + (1.0 - s) * t * at(0, 1)
            + s * t * at(1, 1),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trip() {
        let f = ImageFrame {
            origin: GroundPoint::ground(3.0, -2.0),
            axes: [Direction::from_angle(0.7), Direction::from_angle(0.7).perp()],
            spacing: [0.4, 1.3],
        };
        let w = f.world(5.5, -2.25);
        let back = f.index_of(w);
        assert!((back[0] - 5.5).abs() < 1e-12 && (back[1] + 2.25).abs() < 1e-12);
    }

    #[test]
    fn bilinear_matches_plane() {
        let a = Array2::from_shape_fn((4, 5), |(i, j)| 2.0 * i as f64 - 0.5 * j as f64 + 1.0);
        let v = bilinear(&a, 1.25, 3.5).unwrap();
        assert!((v - (2.5 - 1.75 + 1.0)).abs() < 1e-12);
        assert_eq!(bilinear(&a, 3.0, 4.0), Some(6.0 - 2.0 + 1.0));
        assert!(bilinear(&a, 3.01, 0.0).is_none());
        assert!(bilinear(&a, -0.01, 0.0).is_none());
    }

    #[test]
    fn extent_of_box() {
        let mut m = Array2::<f64>::zeros((9, 9));
        for i in 3..6 {
            m[(i, 4)] = 0.8;
        }
        m[(4, 4)] = 1.0;
        let img = ReconstructedImage {
            magnitude: m,
            frame: ImageFrame::ground(GroundPoint::ORIGIN, [0.5, 0.25]),
            contributing_patches: vec![],
            height: None,
            support: None,
        };
        assert_eq!(img.half_power_extent(), [1.5, 0.25]);
    }
}
