//! Surface height from images formed at a ladder of projection heights.
//!
//! With the data surfaces projected to height `Zᵢ`, a pixel of the image
//! gains phase `e^{-jZᵢh}` relative to the ground-plane image, so `h` is the
//! frequency of the per-pixel sequence `rᵢ/r`. A length-`n` DFT over the
//! planes resolves it to bins of `2π/(nΔZ)`; heights wrap modulo `2π/ΔZ`.

use ndarray::Array2;

use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HeightPlane {
    pub z: f64,
    pub image: Array2<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightConfig {
    /// Pixels with `|r|` below this fraction of the ground-image peak are invalid.
    pub mask_fraction: f64,
}

impl Default for HeightConfig {
    fn default() -> Self {
        Self { mask_fraction: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightMap {
    /// Estimated height; `NaN` where `valid` is false.
    pub height: Array2<f64>,
    pub valid: Array2<bool>,
    /// DFT bin width `2π/(nΔZ)`.
    pub bin_width: f64,
    /// Heights are reported in `[0, 2π/ΔZ)`.
    pub unambiguous_range: f64,
}

/// Per-pixel DFT peak of `rᵢ/r` over uniformly spaced planes `Zᵢ`.
pub fn estimate_height(
    ground: &Array2<Complex64>,
    planes: &[HeightPlane],
    cfg: &HeightConfig,
) -> Result<HeightMap> {
    let n = planes.len();
    if n < 4 {
        return Err(Error::param("planes", "at least four projection heights are needed"));
    }
    let dz = planes[1].z - planes[0].z;
    if !(dz.abs() > 0.0) {
        return Err(Error::param("planes", "projection heights must be distinct"));
    }
    for (i, p) in planes.iter().enumerate() {
        let expected = planes[0].z + i as f64 * dz;
        if (p.z - expected).abs() > 1e-9 * dz.abs().max(1.0) {
            return Err(Error::param("planes", "projection heights must be uniformly spaced"));
        }
        if p.image.dim() != ground.dim() {
            return Err(Error::DimensionMismatch(format!(
                "plane {i} is {:?}, ground image is {:?}",
                p.image.dim(),
                ground.dim()
            )));
        }
    }
    let bin_width = std::f64::consts::TAU / (n as f64 * dz.abs());
    let peak = ground.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let threshold = cfg.mask_fraction * peak;

    // Steering terms e^{+j h_q Z_i} for every candidate bin.
    let steer: Vec<Vec<Complex64>> = (0..n)
        .map(|q| {
            let h = q as f64 * bin_width;
            planes
                .iter()
                .map(|p| Complex64::from_polar(1.0, h * p.z))
                .collect()
        })
        .collect();

    let dim = ground.dim();
    let mut height = Array2::from_elem(dim, f64::NAN);
    let mut valid = Array2::from_elem(dim, false);
    let mut ratios = vec![Complex64::default(); n];
    for ((i, j), r) in ground.indexed_iter() {
        if peak == 0.0 || r.norm() < threshold {
            continue;
        }
        for (ratio, p) in ratios.iter_mut().zip(planes) {
            *ratio = p.image[(i, j)] / r;
        }
        let mut best = (0usize, f64::NEG_INFINITY);
        for (q, s) in steer.iter().enumerate() {
            let v: Complex64 = ratios.iter().zip(s).map(|(a, b)| a * b).sum();
            if v.norm() > best.1 + 1e-12 {
                best = (q, v.norm());
            }
        }
        height[(i, j)] = best.0 as f64 * bin_width;
        valid[(i, j)] = true;
    }
    Ok(HeightMap {
        height,
        valid,
        bin_width,
        unambiguous_range: n as f64 * bin_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn synthetic(h: &Array2<f64>, zs: &[f64]) -> (Array2<Complex64>, Vec<HeightPlane>) {
        let ground = h.mapv(|_| Complex64::new(0.7, -0.4));
        let planes = zs
            .iter()
            .map(|&z| HeightPlane {
                z,
                image: Array2::from_shape_fn(h.dim(), |ij| {
                    ground[ij] * Complex64::from_polar(1.0, -z * h[ij])
                }),
            })
            .collect();
        (ground, planes)
    }

    fn ladder(n: usize, dz: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dz).collect()
    }

    #[test]
    fn on_bin_height_exact() {
        // n = 8, ΔZ = 2π/40 gives bins of 5 units; 5 is bin 1.
        let zs = ladder(8, std::f64::consts::TAU / 40.0);
        let mut h = Array2::zeros((3, 3));
        h[(1, 1)] = 5.0;
        let (g, planes) = synthetic(&h, &zs);
        let map = estimate_height(&g, &planes, &HeightConfig::default()).unwrap();
        assert!((map.bin_width - 5.0).abs() < 1e-12);
        assert_eq!(map.height[(1, 1)], 5.0);
        assert_eq!(map.height[(0, 0)], 0.0);
    }

    #[test]
    fn flat_scene_is_zero_everywhere_valid() {
        let zs = ladder(6, 0.3);
        let h = Array2::zeros((4, 5));
        let (g, planes) = synthetic(&h, &zs);
        let map = estimate_height(&g, &planes, &HeightConfig::default()).unwrap();
        assert!(map.valid.iter().all(|v| *v));
        assert!(map.height.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn aliased_beyond_unambiguous_range() {
        let zs = ladder(8, std::f64::consts::TAU / 40.0);
        let mut h = Array2::zeros((1, 1));
        h[(0, 0)] = 45.0;
        let (g, planes) = synthetic(&h, &zs);
        let map = estimate_height(&g, &planes, &HeightConfig::default()).unwrap();
        assert_eq!(map.unambiguous_range, 40.0);
        assert!((map.height[(0, 0)] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn masks_weak_pixels_and_rejects_bad_ladders() {
        let zs = ladder(4, 0.5);
        let h = Array2::zeros((2, 1));
        let (mut g, mut planes) = synthetic(&h, &zs);
        g[(1, 0)] = Complex64::new(0.01, 0.0);
        let map = estimate_height(&g, &planes, &HeightConfig::default()).unwrap();
        assert!(map.valid[(0, 0)] && !map.valid[(1, 0)]);
        assert!(map.height[(1, 0)].is_nan());
        planes[2].z += 0.1;
        assert!(estimate_height(&g, &planes, &HeightConfig::default()).is_err());
        assert!(estimate_height(&g, &planes[..3], &HeightConfig::default()).is_err());
    }

    proptest! {
        #[test]
        fn off_bin_within_half_bin(frac in 0.0f64..0.999, n in 4usize..16) {
            let bin = 2.0;
            let dz = std::f64::consts::TAU / (n as f64 * bin);
            let truth = frac * n as f64 * bin;
            let mut h = Array2::zeros((1, 1));
            h[(0, 0)] = truth;
            let (g, planes) = synthetic(&h, &ladder(n, dz));
            let map = estimate_height(&g, &planes, &HeightConfig::default()).unwrap();
            let range = n as f64 * bin;
            let mut err = (map.height[(0, 0)] - truth).rem_euclid(range);
            if err > range / 2.0 {
                err -= range;
            }
            prop_assert!(err.abs() <= bin / 2.0 + 1e-9, "{} vs {}", map.height[(0, 0)], truth);
        }
    }
}
