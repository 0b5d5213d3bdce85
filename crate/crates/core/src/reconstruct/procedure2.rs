//! Per-patch imaging on a regular lattice in the patch frame.
//!
//! The lattice steps follow the bistatic angle `θ`:
//! `δk₁ = (δf/c)·cos(θ/2)` and `δk₂ = (δf/c)·sin(θ/2)` in cycles per meter.
//! These are one-way quantities; the measured two-way samples along the range
//! axis sit `2δk₁` apart, so the lattice uses `(2δk₁, 2δk₂)` and the image
//! pixel spacing is `(δr₁/2, δr₂/2)` with `δr₁ = 1/(M·δk₁)`, `δr₂ = 1/(N_a·δk₂)`.

use std::f64::consts::TAU;

use ndarray::Array2;

use super::{ImageFrame, ReconstructedImage};
use crate::fft::{fftshift2, ifft2};
use crate::forward::WaveformSpec;
use crate::geometry::{rotated_frame, GroundPoint};
use crate::patches::AlignedPatch;
use crate::{Complex64, Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Procedure2Config {
    /// Angle `θ` in the step formulas. `None` uses the patch's effective
    /// bistatic angle.
    pub angle: Option<f64>,
    /// Zero-padding factor for the inverse DFT; the image pixel spacing
    /// shrinks by this factor. `0` and `1` both mean no padding.
    pub oversample: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Procedure2Output {
    /// Magnitude in the patch frame: `i` along the range axis, `j` along the cross axis.
    pub image: ReconstructedImage,
    pub complex: Array2<Complex64>,
    /// Samples interpolated onto the lattice, `[range, cross]`.
    pub lattice: Array2<Complex64>,
    /// `(δk₁, δk₂)` in cycles per meter.
    pub steps: [f64; 2],
    pub angle: f64,
}

/// `(δk₁, δk₂)` in cycles per meter for subcarrier spacing `wf.subcarrier_spacing`.
pub fn lattice_steps(wf: &WaveformSpec, angle: f64) -> Result<[f64; 2]> {
    if !(angle > 0.0 && angle < std::f64::consts::PI) {
        return Err(Error::DegenerateStep(format!("angle {angle} outside (0, π)")));
    }
    let (s, c) = (angle / 2.0).sin_cos();
    if s < 1e-9 {
        return Err(Error::DegenerateStep(format!(
            "sin(θ/2) = {s:e}; the cross step vanishes"
        )));
    }
    if c < 1e-9 {
        return Err(Error::DegenerateStep(format!(
            "cos(θ/2) = {c:e}; the range step vanishes"
        )));
    }
    let base = wf.subcarrier_spacing / SPEED_OF_LIGHT;
    Ok([base * c, base * s])
}

/// Images one patch: samples are rotated into the patch frame, re-centered on
/// the spectrum center, offset so the lattice starts at their minimum
/// coordinates, interpolated bilinearly onto an `M × N_a` lattice and
/// inverse-transformed.
pub fn procedure2_per_patch(patch: &AlignedPatch, cfg: &Procedure2Config) -> Result<Procedure2Output> {
    let wf = patch.patch.waveform;
    let angle = cfg.angle.unwrap_or_else(|| patch.patch.look.effective_angle());
    let steps = lattice_steps(&wf, angle)?;
    let (na, m) = patch.samples().dim();
    let delta = [TAU * 2.0 * steps[0], TAU * 2.0 * steps[1]];

    let frame = rotated_frame(patch.direction());
    let [cx, cy] = patch.spectrum_center;
    let coords = Array2::from_shape_fn((na, m), |(l, j)| {
        frame.to_frame([patch.kx[(l, j)] - cx, patch.ky[(l, j)] - cy])
    });
    let rmin = coords.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
    let cmin = coords.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
    let lattice = interpolate_to_lattice(&coords, patch.samples(), [rmin, cmin], delta, (m, na));

    let o = cfg.oversample.max(1);
    let (pm, pn) = (o * m, o * na);
    let padded = if o == 1 {
        lattice.clone()
    } else {
        let mut p = Array2::zeros((pm, pn));
        p.slice_mut(ndarray::s![..m, ..na]).assign(&lattice);
        p
    };
    let complex = fftshift2(&ifft2(&padded));
    let spacing = [TAU / (pm as f64 * delta[0]), TAU / (pn as f64 * delta[1])];
    let c = patch.patch.region_center;
    let (r, x) = (frame.range_axis, frame.cross_axis);
    let (hi, hj) = ((pm / 2) as f64 * spacing[0], (pn / 2) as f64 * spacing[1]);
    let origin = GroundPoint::ground(
        c.x - hi * r.x() - hj * x.x(),
        c.y - hi * r.y() - hj * x.y(),
    );
    let image = ReconstructedImage {
        magnitude: complex.mapv(|v| v.norm()),
        frame: ImageFrame {
            origin,
            axes: [r, x],
            spacing,
        },
        contributing_patches: vec![(patch.tx_id(), patch.rx_id())],
        height: None,
        support: Some(patch.patch.footprint),
    };
    Ok(Procedure2Output {
        image,
        complex,
        lattice,
        steps,
        angle,
    })
}

/// Resamples values given on a curvilinear `[antenna, subcarrier]` grid of
/// positions onto the lattice `origin + (u·delta[0], v·delta[1])`,
/// `u < dims.0`, `v < dims.1`. Each lattice point inside a sample cell is
/// found by inverting that cell's bilinear map; points outside every cell
/// stay zero.
fn interpolate_to_lattice(
    coords: &Array2<[f64; 2]>,
    values: &Array2<Complex64>,
    origin: [f64; 2],
    delta: [f64; 2],
    dims: (usize, usize),
) -> Array2<Complex64> {
    let (na, m) = coords.dim();
    let mut out = Array2::<Complex64>::zeros(dims);
    let mut filled = Array2::from_elem(dims, false);
    let lattice_range = |lo: f64, hi: f64, o: f64, d: f64, n: usize| -> (usize, usize) {
        let a = ((lo - o) / d - 1e-9).ceil().max(0.0);
        let b = ((hi - o) / d + 1e-9).floor();
        if b < a || a >= n as f64 {
            (0, 0)
        } else {
            (a as usize, (b as usize + 1).min(n))
        }
    };

    if na == 1 || m == 1 {
        // A single line of samples: linear interpolation along it, with the
        // other lattice coordinate collapsed onto the line.
        let line: Vec<([f64; 2], Complex64)> = if na == 1 {
            (0..m).map(|j| (coords[(0, j)], values[(0, j)])).collect()
        } else {
            (0..na).map(|l| (coords[(l, 0)], values[(l, 0)])).collect()
        };
        let axis = if na == 1 { 0 } else { 1 };
        for w in line.windows(2) {
            let (a, b) = ((w[0].0)[axis], (w[1].0)[axis]);
            let (lo, hi) = (a.min(b), a.max(b));
            let n = if axis == 0 { dims.0 } else { dims.1 };
            let (s, e) = lattice_range(lo, hi, origin[axis], delta[axis], n);
            for u in s..e {
                let pos = origin[axis] + u as f64 * delta[axis];
                let t = if b != a { (pos - a) / (b - a) } else { 0.0 };
                let idx = if axis == 0 { (u, 0) } else { (0, u) };
                if !filled[idx] {
                    out[idx] = w[0].1 * (1.0 - t) + w[1].1 * t;
                    filled[idx] = true;
                }
            }
        }
        if line.len() == 1 {
            out[(0, 0)] = line[0].1;
        }
        return out;
    }

    for l in 0..na - 1 {
        for j in 0..m - 1 {
            let p = [
                coords[(l, j)],
                coords[(l + 1, j)],
                coords[(l, j + 1)],
                coords[(l + 1, j + 1)],
            ];
            let lo0 = p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
            let hi0 = p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
            let lo1 = p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
            let hi1 = p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max);
            let (u0, u1) = lattice_range(lo0, hi0, origin[0], delta[0], dims.0);
            let (v0, v1) = lattice_range(lo1, hi1, origin[1], delta[1], dims.1);
            for u in u0..u1 {
                for v in v0..v1 {
                    if filled[(u, v)] {
                        continue;
                    }
                    let q = [origin[0] + u as f64 * delta[0], origin[1] + v as f64 * delta[1]];
                    if let Some((s, t)) = invert_bilinear(&p, q) {
                        out[(u, v)] = values[(l, j)] * ((1.0 - s) * (1.0 - t))
                            + values[(l + 1, j)] * (s * (1.0 - t))
                            + values[(l, j + 1)] * ((1.0 - s) * t)
                            + values[(l + 1, j + 1)] * (s * t);
                        filled[(u, v)] = true;
                    }
                }
            }
        }
    }
    out
}

/// Solves `P(s, t) = q` for the bilinear patch with corners
/// `[P00, P10, P01, P11]`; `None` when `q` lies outside the cell.
fn invert_bilinear(p: &[[f64; 2]; 4], q: [f64; 2]) -> Option<(f64, f64)> {
    let eval = |s: f64, t: f64| -> [f64; 2] {
        let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
        [
            w.iter().zip(p).map(|(w, c)| w * c[0]).sum(),
            w.iter().zip(p).map(|(w, c)| w * c[1]).sum(),
        ]
    };
    let (mut s, mut t) = (0.5, 0.5);
    for _ in 0..20 {
        let f = eval(s, t);
        let r = [f[0] - q[0], f[1] - q[1]];
        let ds = [
            (1.0 - t) * (p[1][0] - p[0][0]) + t * (p[3][0] - p[2][0]),
            (1.0 - t) * (p[1][1] - p[0][1]) + t * (p[3][1] - p[2][1]),
        ];
        let dt = [
            (1.0 - s) * (p[2][0] - p[0][0]) + s * (p[3][0] - p[1][0]),
            (1.0 - s) * (p[2][1] - p[0][1]) + s * (p[3][1] - p[1][1]),
        ];
        let det = ds[0] * dt[1] - ds[1] * dt[0];
        if det.abs() < 1e-300 {
            return None;
        }
        let step_s = (r[0] * dt[1] - r[1] * dt[0]) / det;
        let step_t = (ds[0] * r[1] - ds[1] * r[0]) / det;
        s -= step_s;
        t -= step_t;
        if step_s.abs() < 1e-13 && step_t.abs() < 1e-13 {
            break;
        }
    }
    const EPS: f64 = 1e-9;
    ((-EPS..=1.0 + EPS).contains(&s) && (-EPS..=1.0 + EPS).contains(&t))
        .then(|| (s.clamp(0.0, 1.0), t.clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{aligned_point_patch, broadside_station, default_waveform};
    use approx::assert_relative_eq;

    #[test]
    fn lattice_steps_at_right_angle() {
        let wf = WaveformSpec::new(5.0e9, 256, 2.0e6).unwrap();
        let [a, b] = lattice_steps(&wf, std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        // (2e6 / 3e8)·(√2/2) with c rounded to 3e8.
        assert_relative_eq!(a, 4.714e-3, max_relative = 1e-3);
        assert!(matches!(lattice_steps(&wf, 0.0), Err(Error::DegenerateStep(_))));
        assert!(matches!(lattice_steps(&wf, 1e-12), Err(Error::DegenerateStep(_))));
    }

    #[test]
    fn inverse_bilinear_on_skewed_cell() {
        let p = [[0.0, 0.0], [2.0, 0.3], [0.4, 1.0], [2.5, 1.6]];
        let eval = |s: f64, t: f64| {
            let w = [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t];
            [
                w.iter().zip(&p).map(|(w, c)| w * c[0]).sum::<f64>(),
                w.iter().zip(&p).map(|(w, c)| w * c[1]).sum::<f64>(),
            ]
        };
        let (s, t) = invert_bilinear(&p, eval(0.3, 0.8)).unwrap();
        assert!((s - 0.3).abs() < 1e-12 && (t - 0.8).abs() < 1e-12);
        assert!(invert_bilinear(&p, [5.0, 5.0]).is_none());
    }

    #[test]
    fn point_peak_on_range_axis() {
        let tx = broadside_station(0, GroundPoint::new(90.0, 30.0, 25.0), 1);
        let rx = broadside_station(1, GroundPoint::new(20.0, 100.0, 25.0), 64);
        let target = GroundPoint::ground(1.3, -0.7);
        let p = aligned_point_patch(&tx, &rx, GroundPoint::ORIGIN, &[(target, Complex64::new(1.0, 0.0))]);
        let out = procedure2_per_patch(&p, &Procedure2Config::default()).unwrap();
        let wf = default_waveform();
        assert_eq!(out.image.dim(), (wf.subcarrier_count, 64));
        let peak = out.image.peak_position();
        let r = p.direction();
        let err = r.dot([peak[0] - target.x, peak[1] - target.y]) * p.patch.look.ground_norm / 2.0;
        let rho = SPEED_OF_LIGHT / (2.0 * wf.bandwidth());
        assert!(err.abs() <= rho, "{err}");
    }

    #[test]
    fn oversampling_keeps_peak_and_refines_grid() {
        let tx = broadside_station(0, GroundPoint::new(90.0, 30.0, 25.0), 1);
        let rx = broadside_station(1, GroundPoint::new(20.0, 100.0, 25.0), 16);
        let p = aligned_point_patch(&tx, &rx, GroundPoint::ORIGIN, &[(GroundPoint::ORIGIN, Complex64::new(1.0, 0.0))]);
        let plain = procedure2_per_patch(&p, &Procedure2Config::default()).unwrap().image;
        let fine = procedure2_per_patch(&p, &Procedure2Config { oversample: 3, ..Default::default() })
            .unwrap()
            .image;
        let (n, m) = plain.dim();
        assert_eq!(fine.dim(), (3 * n, 3 * m));
        assert_relative_eq!(fine.pixel_spacing()[0] * 3.0, plain.pixel_spacing()[0], max_relative = 1e-12);
        let (a, b) = (plain.peak_position(), fine.peak_position());
        assert!((a[0] - b[0]).hypot(a[1] - b[1]) < 1e-9, "{a:?} {b:?}");
        // Padding interpolates; original pixels keep their values up to the
        // inverse transform's 1/(MN) scale.
        assert_relative_eq!(plain.peak().2, fine.peak().2 * 9.0, max_relative = 1e-9);
    }

    #[test]
    fn parseval() {
        let tx = broadside_station(0, GroundPoint::new(90.0, 30.0, 25.0), 1);
        let rx = broadside_station(1, GroundPoint::new(-20.0, 100.0, 25.0), 16);
        let pts = [
            (GroundPoint::ground(1.0, 2.0), Complex64::new(1.0, 0.5)),
            (GroundPoint::ground(-3.0, 0.5), Complex64::new(-0.2, 0.9)),
        ];
        let p = aligned_point_patch(&tx, &rx, GroundPoint::ORIGIN, &pts);
        let out = procedure2_per_patch(&p, &Procedure2Config::default()).unwrap();
        let e_img: f64 = out.complex.iter().map(|v| v.norm_sqr()).sum();
        let e_spec: f64 = out.lattice.iter().map(|v| v.norm_sqr()).sum();
        let n = out.lattice.len() as f64;
        assert_relative_eq!(e_img, e_spec / n, max_relative = 1e-9);
        assert!(e_spec > 0.0);
    }

    #[test]
    fn lattice_filled_inside_hull() {
        let st = broadside_station(0, GroundPoint::new(100.0, 0.0, 25.0), 8);
        let p = aligned_point_patch(&st, &st, GroundPoint::ORIGIN, &[(GroundPoint::ORIGIN, Complex64::new(1.0, 0.0))]);
        let out = procedure2_per_patch(&p, &Procedure2Config::default()).unwrap();
        // Centered point: every aligned sample is 1 up to the array's
        // second-order curvature, and so is every filled lattice value.
        let filled: Vec<_> = out.lattice.iter().filter(|v| v.norm() > 0.0).collect();
        assert!(filled.len() > out.lattice.len() / 4);
        for v in filled {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-2, "{v}");
        }
    }
}
