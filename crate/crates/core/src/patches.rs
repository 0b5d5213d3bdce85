//! Conditioning of raw patches before fusion: bulk distance and path-loss
//! removal, array-orientation phase correction, and placement of every
//! sample in the global wavenumber plane.
//!
//! After both alignments, sample `(l, m)` approximates the spatial spectrum
//! `G(κ) = Σ g(p) e^{-jκ·p}` at `κ_lm = -k_m (û_tx + û_rx,l)`, where the unit
//! vectors point from the region center toward the transmitter and toward
//! antenna `l` and `p` is measured from the region center. The ground-plane
//! part of `κ` therefore points away from the stations, and adjacent
//! subcarriers sit `2π δf/c · |û_tx + û_rx|_xy` apart (a two-way step).

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;

use crate::forward::MeasurementPatch;
use crate::geometry::Direction;
use crate::{Complex64, Error, Result};

/// Removes the free-space spreading and the bulk propagation phase to the
/// region center: each sample is multiplied by `d_tx · d_rx · e^{+j k_m d_n}`
/// with `d_n = d_tx + d_rx`.
pub fn align_distance(patch: &MeasurementPatch) -> Result<MeasurementPatch> {
    if !(patch.tx_distance > 0.0 && patch.rx_distance > 0.0 && patch.composite_distance > 0.0) {
        return Err(Error::param(
            "composite_distance",
            "stations must not sit at the region center",
        ));
    }
    let mut out = patch.clone();
    let gain = patch.tx_distance * patch.rx_distance;
    let d = patch.composite_distance;
    let ks = patch.waveform.wavenumbers();
    for mut row in out.samples.rows_mut() {
        for (v, k) in row.iter_mut().zip(&ks) {
            *v *= Complex64::from_polar(gain, k * d);
        }
    }
    out.distance_aligned = true;
    Ok(out)
}

/// Angle between the receive array's broadside and the look direction:
/// `ψ = π/2 − ∠r₀ + θ_array`. Zero when the array is perpendicular to `r₀`.
pub fn orientation_angle(patch: &MeasurementPatch) -> f64 {
    FRAC_PI_2 - patch.direction().angle() + patch.rx_array.orientation
}

/// Which line the per-antenna phase ramp is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrientationReference {
    /// The bistatic look direction `r₀`, through `ψ`. Exact only when the
    /// receiver lies on `r₀` (monostatic geometry).
    #[default]
    LookDirection,
    /// The line of sight from the region center to the receive array
    /// center, elevation included. Exact to first order in the antenna
    /// offset for any bistatic geometry.
    ReceiverLine,
}

/// Projection of the array axis onto the reference line; the ramp across
/// antennas is `o_l k_m` times this value.
pub fn orientation_factor(patch: &MeasurementPatch, reference: OrientationReference) -> f64 {
    match reference {
        OrientationReference::LookDirection => orientation_angle(patch).sin(),
        OrientationReference::ReceiverLine => {
            let los = patch.rx_array.center().relative_to(&patch.region_center);
            let (s, c) = patch.rx_array.orientation.sin_cos();
            los.unit().map_or(0.0, |u| u.x * c + u.y * s)
        }
    }
}

/// Removes the linear phase ramp across antennas caused by the array not
/// facing the look direction: sample `(l, m)` is multiplied by
/// `e^{+j o_l k_m sin ψ}`, with `o_l` the antenna's offset from the array
/// center.
pub fn align_orientation(patch: &MeasurementPatch) -> MeasurementPatch {
    align_orientation_to(patch, OrientationReference::LookDirection)
}

/// [`align_orientation`] with the ramp measured against `reference`.
pub fn align_orientation_to(patch: &MeasurementPatch, reference: OrientationReference) -> MeasurementPatch {
    let mut out = patch.clone();
    out.orientation_aligned = true;
    let s = orientation_factor(patch, reference);
    if s == 0.0 {
        return out;
    }
    let ks = patch.waveform.wavenumbers();
    for (l, mut row) in out.samples.rows_mut().into_iter().enumerate() {
        let o = patch.rx_array.offset(l);
        for (v, k) in row.iter_mut().zip(&ks) {
            *v *= Complex64::from_polar(1.0, o * k * s);
        }
    }
    out
}

/// A conditioned patch with per-sample wavenumber coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPatch {
    /// The aligned measurement; `patch.samples` holds the aligned values.
    pub patch: MeasurementPatch,
    /// Ground-plane wavenumber coordinates, radians per meter, `[antenna, subcarrier]`.
    pub kx: Array2<f64>,
    pub ky: Array2<f64>,
    /// Vertical wavenumber component, used by height estimation and ISAR.
    pub kz: Array2<f64>,
    /// Mean of the ground-plane coordinates.
    pub spectrum_center: [f64; 2],
}

impl AlignedPatch {
    pub fn samples(&self) -> &Array2<Complex64> {
        &self.patch.samples
    }

    pub fn direction(&self) -> Direction {
        self.patch.direction()
    }

    pub fn tx_id(&self) -> usize {
        self.patch.tx_id
    }

    pub fn rx_id(&self) -> usize {
        self.patch.rx_id
    }

    pub fn len(&self) -> usize {
        self.patch.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patch.samples.is_empty()
    }

    /// Radial spacing between adjacent subcarriers in the ground plane.
    pub fn radial_step(&self) -> f64 {
        self.patch.waveform.wavenumber_step() * self.patch.look.ground_norm
    }

    /// The same patch with coordinates shifted so `spectrum_center` is the
    /// origin. Inverting the shifted spectrum gives `g(p) e^{jκ₀·p}`, which
    /// has the magnitude of `g`.
    pub fn recentered(&self) -> AlignedPatch {
        let [cx, cy] = self.spectrum_center;
        AlignedPatch {
            patch: self.patch.clone(),
            kx: self.kx.mapv(|v| v - cx),
            ky: self.ky.mapv(|v| v - cy),
            kz: self.kz.clone(),
            spectrum_center: [0.0, 0.0],
        }
    }

    /// Coordinates of sample `(l, m)` in the patch frame: `(range, cross)`
    /// along `r₀` and its +90° rotation.
    pub fn frame_coordinates(&self, l: usize, m: usize) -> [f64; 2] {
        let f = crate::geometry::rotated_frame(self.direction());
        f.to_frame([self.kx[(l, m)], self.ky[(l, m)]])
    }
}

/// Attaches wavenumber coordinates to a fully aligned patch.
pub fn place_in_spectrum(patch: &MeasurementPatch) -> Result<AlignedPatch> {
    if !patch.distance_aligned {
        return Err(Error::NotAligned {
            patch: patch.rx_id,
            missing: "distance",
        });
    }
    if !patch.orientation_aligned {
        return Err(Error::NotAligned {
            patch: patch.rx_id,
            missing: "orientation",
        });
    }
    let (na, m) = patch.samples.dim();
    let ks = patch.waveform.wavenumbers();
    let mut kx = Array2::zeros((na, m));
    let mut ky = Array2::zeros((na, m));
    let mut kz = Array2::zeros((na, m));
    for l in 0..na {
        let s = patch.look_sum(l);
        for (j, k) in ks.iter().enumerate() {
            kx[(l, j)] = -k * s.x;
            ky[(l, j)] = -k * s.y;
            kz[(l, j)] = -k * s.z;
        }
    }
    let n = (na * m) as f64;
    let spectrum_center = [kx.sum() / n, ky.sum() / n];
    Ok(AlignedPatch {
        patch: patch.clone(),
        kx,
        ky,
        kz,
        spectrum_center,
    })
}

/// Both alignments followed by placement.
pub fn align(patch: &MeasurementPatch) -> Result<AlignedPatch> {
    align_with(patch, OrientationReference::LookDirection)
}

/// [`align`] with the orientation ramp measured against `reference`.
pub fn align_with(patch: &MeasurementPatch, reference: OrientationReference) -> Result<AlignedPatch> {
    let d = align_distance(patch)?;
    place_in_spectrum(&align_orientation_to(&d, reference))
}
