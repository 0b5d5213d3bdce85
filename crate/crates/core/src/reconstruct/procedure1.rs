//! Zero-filled spectrum gridding followed by a 2-D inverse DFT.

use ndarray::Array2;

use super::{ImageFrame, ReconstructedImage};
use crate::fft::{fftshift2, ifft2};
use crate::geometry::GroundPoint;
use crate::patches::AlignedPatch;
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Procedure1Config {
    /// Half the grid side: the spectrum grid is `2S × 2S`.
    pub half_size: usize,
    /// Image pixel spacing in meters; sets the wavenumber step
    /// `δκ = 2π / (2S · pixel_spacing)`.
    pub pixel_spacing: f64,
    /// Wavenumber subtracted from every sample before binning. `None` uses the
    /// mean of the patches' spectrum centers, which keeps the occupied bins
    /// near the grid center for patches with similar look directions.
    pub anchor: Option<[f64; 2]>,
    /// Ground point the image is centered on. `None` uses the first patch's
    /// region center.
    pub image_center: Option<GroundPoint>,
    /// Skip samples that fall outside the grid instead of failing.
    pub drop_outside: bool,
}

impl Procedure1Config {
    pub fn new(half_size: usize, pixel_spacing: f64) -> Self {
        Self {
            half_size,
            pixel_spacing,
            anchor: None,
            image_center: None,
            drop_outside: false,
        }
    }
}

/// The zero-filled `2S × 2S` spectrum and its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumGrid {
    pub values: Array2<Complex64>,
    /// Number of samples averaged into each bin.
    pub counts: Array2<u32>,
    /// `(δκ_x, δκ_y)`, radians per meter.
    pub wavenumber_step: [f64; 2],
    /// Grid index of `κ = anchor`.
    pub origin_index: [usize; 2],
    pub anchor: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Procedure1Output {
    pub image: ReconstructedImage,
    pub complex: Array2<Complex64>,
    pub grid: SpectrumGrid,
    /// Samples skipped under `drop_outside`.
    pub dropped: usize,
}

/// Bins every sample at `round(κ / δκ)` (colliding samples are averaged),
/// leaves unmeasured bins at zero, and inverse-transforms the grid.
///
/// Samples are first re-referenced to a common image center `C'`: a sample
/// taken about region center `C` is multiplied by `e^{-jκ·(C − C')}`.
pub fn procedure1_invert(patches: &[AlignedPatch], cfg: &Procedure1Config) -> Result<Procedure1Output> {
    procedure1_invert_masked(patches, cfg, |_, _| true)
}

/// [`procedure1_invert`] restricted to the samples for which
/// `keep(patch_index, sample_index)` holds; sample indices run row-major over
/// `[antenna, subcarrier]`.
pub fn procedure1_invert_masked(
    patches: &[AlignedPatch],
    cfg: &Procedure1Config,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<Procedure1Output> {
    let first = patches
        .first()
        .ok_or(Error::EmptyInput("procedure 1 needs at least one patch"))?;
    let s = cfg.half_size;
    if s == 0 {
        return Err(Error::param("half_size", "must be positive"));
    }
    if !(cfg.pixel_spacing > 0.0 && cfg.pixel_spacing.is_finite()) {
        return Err(Error::param("pixel_spacing", "must be positive"));
    }
    let n = 2 * s;
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * cfg.pixel_spacing);
    let anchor = cfg.anchor.unwrap_or_else(|| {
        let k = patches.len() as f64;
        let sx: f64 = patches.iter().map(|p| p.spectrum_center[0]).sum();
        let sy: f64 = patches.iter().map(|p| p.spectrum_center[1]).sum();
        [sx / k, sy / k]
    });
    let center = cfg.image_center.unwrap_or(first.patch.region_center);

    let mut sums = Array2::<Complex64>::zeros((n, n));
    let mut counts = Array2::<u32>::zeros((n, n));
    let mut dropped = 0;
    for (pi, p) in patches.iter().enumerate() {
        let shift = p.patch.region_center - center;
        for (si, (v, (kx, ky))) in p
            .samples()
            .iter()
            .zip(p.kx.iter().zip(p.ky.iter()))
            .enumerate()
        {
            if !keep(pi, si) {
                continue;
            }
            let ix = ((kx - anchor[0]) / dk).round() as i64 + s as i64;
            let iy = ((ky - anchor[1]) / dk).round() as i64 + s as i64;
            if ix < 0 || iy < 0 || ix >= n as i64 || iy >= n as i64 {
                if cfg.drop_outside {
                    dropped += 1;
                    continue;
                }
                return Err(Error::IndexOverflow {
                    patch: pi,
                    sample: si,
                    ix,
                    iy,
                    size: n,
                });
            }
            let rebased = v * Complex64::from_polar(1.0, -(kx * shift.x + ky * shift.y));
            sums[(ix as usize, iy as usize)] += rebased;
            counts[(ix as usize, iy as usize)] += 1;
        }
    }
    let values = Array2::from_shape_fn((n, n), |ij| {
        let c = counts[ij];
        if c == 0 { Complex64::default() } else { sums[ij] / c as f64 }
    });

    // Bin index u holds κ − anchor = (u − S)δκ; pixel a sits at (a − S)·δ.
    let complex = fftshift2(&ifft2(&fftshift2(&values)));
    let magnitude = complex.mapv(|v| v.norm());
    let half = s as f64 * cfg.pixel_spacing;
    let origin = GroundPoint::ground(center.x - half, center.y - half);
    let image = ReconstructedImage {
        magnitude,
        frame: ImageFrame::ground(origin, [cfg.pixel_spacing, cfg.pixel_spacing]),
        contributing_patches: patches.iter().map(|p| (p.tx_id(), p.rx_id())).collect(),
        height: None,
        support: None,
    };
    Ok(Procedure1Output {
        image,
        complex,
        grid: SpectrumGrid {
            values,
            counts,
            wavenumber_step: [dk, dk],
            origin_index: [s, s],
            anchor,
        },
        dropped,
    })
}
