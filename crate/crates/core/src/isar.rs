//! Volumetric recovery by inverting the sensing tensor.
//!
//! Each measurement is a sample of the 3-D source spectrum at a wavenumber
//! vector `k`. On an `M × M × M` voxel grid the forward map is
//! `x_s = Σ ρ_{lmn}·A·exp(-j k_s·r_{lmn})`, with voxel `(l, m, n)` at
//! `((l − M/2)δ, (m − M/2)δ, (n − M/2)δ)`. The map is recovered through a
//! truncated-SVD pseudo-inverse; network geometries are usually rank
//! deficient, so the rank is always reported.

use std::path::Path;

use nalgebra::DMatrix;
use ndarray::Array3;
use rayon::prelude::*;

use crate::forward::WaveformSpec;
use crate::geometry::{BaseStation, GroundPoint};
use crate::patches::AlignedPatch;
use crate::{Complex64, Error, Result, SPEED_OF_LIGHT};

/// Largest grid side accepted before anything is allocated.
pub const MAX_SIDE: usize = 16;
/// Largest tensor (rows × columns) accepted.
pub const MAX_ENTRIES: usize = 64 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavenumberSample {
    pub k: [f64; 3],
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub spacing: f64,
    /// Indexed `[l, m, n]` from 0; index `side/2` is the grid origin.
    pub values: Array3<Complex64>,
}

impl VoxelGrid {
    pub fn zeros(side: usize, spacing: f64) -> Self {
        Self {
            spacing,
            values: Array3::zeros((side, side, side)),
        }
    }

    pub fn side(&self) -> usize {
        self.values.dim().0
    }

    /// Index of the voxel at the origin.
    pub fn offset(&self) -> usize {
        self.side() / 2
    }

    pub fn position(&self, l: usize, m: usize, n: usize) -> [f64; 3] {
        let o = self.offset() as f64;
        [
            (l as f64 - o) * self.spacing,
            (m as f64 - o) * self.spacing,
            (n as f64 - o) * self.spacing,
        ]
    }

    /// CSV with columns `l, m, n, re, im`, indices relative to the origin voxel.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let o = self.offset() as i64;
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["l", "m", "n", "re", "im"])?;
        for ((l, m, n), v) in self.values.indexed_iter() {
            w.write_record(&[
                (l as i64 - o).to_string(),
                (m as i64 - o).to_string(),
                (n as i64 - o).to_string(),
                v.re.to_string(),
                v.im.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One magnitude PGM per `n` slice, named `<prefix>_<n>.pgm`.
    pub fn write_slices(&self, dir: &Path, prefix: &str) -> Result<Vec<std::path::PathBuf>> {
        let mut out = Vec::new();
        for n in 0..self.side() {
            let slice = self.values.index_axis(ndarray::Axis(2), n).mapv(|v| v.norm());
            let path = dir.join(format!("{prefix}_{n}.pgm"));
            crate::io::write_pgm(&path, &slice)?;
            out.push(path);
        }
        Ok(out)
    }
}

/// Dense `K × M³` sensing matrix. Column `c` is voxel `(l, m, n)` with
/// `c = (l·M + m)·M + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingTensor {
    pub matrix: DMatrix<Complex64>,
    pub side: usize,
    pub spacing: f64,
    pub amplitude: Complex64,
}

impl SensingTensor {
    pub fn build(k: &[[f64; 3]], side: usize, spacing: f64, amplitude: Complex64) -> Result<Self> {
        if k.is_empty() {
            return Err(Error::EmptyInput("sensing tensor needs at least one sample"));
        }
        if side == 0 || !(spacing > 0.0) {
            return Err(Error::param("voxel grid", "side and spacing must be positive"));
        }
        if side > MAX_SIDE {
            return Err(Error::TooLarge(format!("grid side {side} exceeds {MAX_SIDE}")));
        }
        let cols = side.pow(3);
        if k.len().saturating_mul(cols) > MAX_ENTRIES {
            return Err(Error::TooLarge(format!("{} × {cols} sensing tensor", k.len())));
        }
        let grid = VoxelGrid::zeros(side, spacing);
        let positions: Vec<[f64; 3]> = (0..cols)
            .map(|c| grid.position(c / (side * side), (c / side) % side, c % side))
            .collect();
        let rows: Vec<Vec<Complex64>> = k
            .par_iter()
            .map(|ks| {
                positions
                    .iter()
                    .map(|r| amplitude * Complex64::from_polar(1.0, -(ks[0] * r[0] + ks[1] * r[1] + ks[2] * r[2])))
                    .collect()
            })
            .collect();
        let matrix = DMatrix::from_fn(k.len(), cols, |s, c| rows[s][c]);
        Ok(Self {
            matrix,
            side,
            spacing,
            amplitude,
        })
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    fn flatten(&self, rho: &Array3<Complex64>) -> Result<nalgebra::DVector<Complex64>> {
        let s = self.side;
        if rho.dim() != (s, s, s) {
            return Err(Error::DimensionMismatch(format!("voxel values {:?}, grid side {s}", rho.dim())));
        }
        Ok(nalgebra::DVector::from_iterator(s.pow(3), rho.iter().copied()))
    }

    fn unflatten(&self, v: &nalgebra::DVector<Complex64>) -> VoxelGrid {
        let s = self.side;
        VoxelGrid {
            spacing: self.spacing,
            values: Array3::from_shape_fn((s, s, s), |(l, m, n)| v[(l * s + m) * s + n]),
        }
    }

    pub fn apply(&self, rho: &Array3<Complex64>) -> Result<Vec<Complex64>> {
        Ok((&self.matrix * self.flatten(rho)?).iter().copied().collect())
    }

    pub fn adjoint(&self, x: &[Complex64]) -> Result<VoxelGrid> {
        if x.len() != self.rows() {
            return Err(Error::DimensionMismatch(format!("{} samples, {} rows", x.len(), self.rows())));
        }
        let v = self.matrix.adjoint() * nalgebra::DVector::from_column_slice(x);
        Ok(self.unflatten(&v))
    }

    /// Moore–Penrose pseudo-inverse discarding singular values below
    /// `tolerance·σ_max`.
    pub fn pseudo_inverse(&self, tolerance: f64) -> PseudoInverse {
        let svd = self.matrix.clone().svd(true, true);
        let u = svd.u.as_ref().expect("requested U");
        let vt = svd.v_t.as_ref().expect("requested Vᵀ");
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let cut = tolerance * smax;
        let mut inv = DMatrix::<Complex64>::zeros(self.matrix.ncols(), self.matrix.nrows());
        let mut rank = 0;
        for (i, &s) in svd.singular_values.iter().enumerate() {
            if s > cut && s > 0.0 {
                rank += 1;
                let v = vt.row(i).adjoint();
                let uh = u.column(i).adjoint();
                inv += (v * uh).scale(1.0 / s);
            }
        }
        PseudoInverse {
            matrix: inv,
            rank,
            singular_values: svd.singular_values.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverse {
    pub matrix: DMatrix<Complex64>,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsarOutput {
    pub grid: VoxelGrid,
    pub rank: usize,
    /// False when the rank is below the voxel count; the result is then the
    /// minimum-norm solution.
    pub full_rank: bool,
}

/// Minimum-norm least-squares voxel values for measurements `x`.
pub fn invert_sensing_tensor(tensor: &SensingTensor, x: &[Complex64], tolerance: f64) -> Result<IsarOutput> {
    if x.len() != tensor.rows() {
        return Err(Error::DimensionMismatch(format!("{} samples, {} rows", x.len(), tensor.rows())));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::param("svd_tolerance", "must be nonnegative"));
    }
    let pinv = tensor.pseudo_inverse(tolerance);
    let voxels = tensor.side.pow(3);
    if pinv.rank < voxels {
        log::warn!("sensing tensor rank {} is below the {voxels} voxels", pinv.rank);
    }
    let v = &pinv.matrix * nalgebra::DVector::from_column_slice(x);
    Ok(IsarOutput {
        grid: tensor.unflatten(&v),
        rank: pinv.rank,
        full_rank: pinv.rank == voxels,
    })
}

/// Wavenumber vectors `(2πf/c)·û` for every antenna of every layer of every
/// station and every subcarrier, `û` pointing from `center` to the antenna.
pub fn samples_from_network(stations: &[BaseStation], waveform: &WaveformSpec, center: GroundPoint) -> Result<Vec<[f64; 3]>> {
    waveform.validate()?;
    let mut out = Vec::new();
    for bs in stations {
        for layer in 0..bs.layers.len() {
            for a in bs.antenna_positions(layer) {
                let u = (a - center)
                    .unit()
                    .ok_or_else(|| Error::DegenerateGeometry(format!("antenna of station {} at the region center", bs.id)))?;
                for m in 0..waveform.subcarrier_count {
                    let k = std::f64::consts::TAU * waveform.frequency(m) / SPEED_OF_LIGHT;
                    out.push([k * u.x, k * u.y, k * u.z]);
                }
            }
        }
    }
    Ok(out)
}

/// The aligned samples of a patch with their wavenumber vectors, re-referenced
/// to `center`.
pub fn samples_from_patch(patch: &AlignedPatch, center: GroundPoint) -> Vec<WavenumberSample> {
    let shift = patch.patch.region_center - center;
    patch
        .samples()
        .iter()
        .zip(patch.kx.iter().zip(patch.ky.iter().zip(patch.kz.iter())))
        .map(|(v, (kx, (ky, kz)))| WavenumberSample {
            k: [*kx, *ky, *kz],
            value: v * Complex64::from_polar(1.0, -(kx * shift.x + ky * shift.y + kz * shift.z)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_k(n: usize, spacing: f64, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lim = std::f64::consts::PI / spacing;
        (0..n)
            .map(|_| [rng.random_range(-lim..lim), rng.random_range(-lim..lim), rng.random_range(-lim..lim)])
            .collect()
    }

    fn random_values(shape: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..shape)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn random_rho(side: usize, seed: u64) -> Array3<Complex64> {
        Array3::from_shape_vec((side, side, side), random_values(side.pow(3), seed)).unwrap()
    }

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn origin_voxel_column_is_constant() {
        let k = random_k(10, 0.5, 1);
        let amp = Complex64::new(0.3, 0.4);
        let t = SensingTensor::build(&k, 3, 0.5, amp).unwrap();
        let c = (3 + 1) * 3 + 1;
        for s in 0..10 {
            assert!((t.matrix[(s, c)] - amp).norm() < 1e-15);
        }
        let zero = SensingTensor::build(&[[0.0; 3]], 2, 1.0, Complex64::new(1.0, 0.0)).unwrap();
        assert!(zero.matrix.iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn forward_matches_triple_loop() {
        let (side, spacing) = (3, 0.4);
        let k = random_k(40, spacing, 2);
        let t = SensingTensor::build(&k, side, spacing, Complex64::new(1.0, 0.0)).unwrap();
        let rho = random_rho(side, 3);
        let x = t.apply(&rho).unwrap();
        for (s, ks) in k.iter().enumerate() {
            let mut acc = Complex64::default();
            for l in 0..side {
                for m in 0..side {
                    for n in 0..side {
                        let r = [
                            (l as f64 - 1.0) * spacing,
                            (m as f64 - 1.0) * spacing,
                            (n as f64 - 1.0) * spacing,
                        ];
                        let phase = ks[0] * r[0] + ks[1] * r[1] + ks[2] * r[2];
                        acc += rho[(l, m, n)] * Complex64::new(phase.cos(), -phase.sin());
                    }
                }
            }
            assert!((x[s] - acc).norm() <= 1e-12 * acc.norm().max(1.0));
        }
    }

    #[test]
    fn adjoint_consistency() {
        let side = 4;
        let k = random_k(100, 0.3, 4);
        let t = SensingTensor::build(&k, side, 0.3, Complex64::new(1.0, -0.5)).unwrap();
        let rho = random_rho(side, 5);
        let x = random_values(100, 6);
        let lhs: Complex64 = t.apply(&rho).unwrap().iter().zip(&x).map(|(a, b)| a * b.conj()).sum();
        let adj = t.adjoint(&x).unwrap();
        let rhs: Complex64 = rho.iter().zip(adj.values.iter()).map(|(a, b)| a * b.conj()).sum();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn exact_recovery_full_rank() {
        let (side, spacing) = (3, 0.5);
        let k = random_k(54, spacing, 7);
        let t = SensingTensor::build(&k, side, spacing, Complex64::new(1.0, 0.0)).unwrap();
        let rho = random_rho(side, 8);
        let x = t.apply(&rho).unwrap();
        let out = invert_sensing_tensor(&t, &x, 1e-10).unwrap();
        assert!(out.full_rank);
        let got: Vec<_> = out.grid.values.iter().copied().collect();
        let want: Vec<_> = rho.iter().copied().collect();
        assert!(rel_err(&got, &want) < 1e-8);
    }

    #[test]
    fn pseudo_inverse_idempotence() {
        let k = random_k(12, 0.5, 9);
        let t = SensingTensor::build(&k, 2, 0.5, Complex64::new(1.0, 0.0)).unwrap();
        let g = t.pseudo_inverse(1e-10).matrix;
        let ggg = &g * &t.matrix * &g;
        let diff = (&ggg - &g).norm() / g.norm();
        assert!(diff < 1e-10, "{diff}");
    }

    #[test]
    fn dft_lattice_inverts_by_adjoint() {
        let (side, spacing) = (2, 0.5);
        let step = std::f64::consts::TAU / (side as f64 * spacing);
        let mut k = Vec::new();
        for a in 0..side {
            for b in 0..side {
                for c in 0..side {
                    k.push([a as f64 * step, b as f64 * step, c as f64 * step]);
                }
            }
        }
        let amp = Complex64::new(2.0, 0.0);
        let t = SensingTensor::build(&k, side, spacing, amp).unwrap();
        let x = random_values(k.len(), 10);
        let inv = invert_sensing_tensor(&t, &x, 1e-10).unwrap();
        let adj = t.adjoint(&x).unwrap();
        let scale = k.len() as f64 * amp.norm_sqr();
        for (a, b) in inv.grid.values.iter().zip(adj.values.iter()) {
            assert!((a - b / scale).norm() < 1e-12);
        }
    }

    #[test]
    fn underdetermined_gives_minimum_norm() {
        let side = 3;
        let k = random_k(10, 0.5, 11);
        let t = SensingTensor::build(&k, side, 0.5, Complex64::new(1.0, 0.0)).unwrap();
        let rho = random_rho(side, 12);
        let x = t.apply(&rho).unwrap();
        let out = invert_sensing_tensor(&t, &x, 1e-10).unwrap();
        assert!(!out.full_rank && out.rank == 10);
        let back = t.apply(&out.grid.values).unwrap();
        assert!(rel_err(&back, &x) < 1e-10);
        let n_out: f64 = out.grid.values.iter().map(|v| v.norm_sqr()).sum();
        let n_true: f64 = rho.iter().map(|v| v.norm_sqr()).sum();
        assert!(n_out <= n_true);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            SensingTensor::build(&[[0.0; 3]], MAX_SIDE + 1, 1.0, Complex64::new(1.0, 0.0)),
            Err(Error::TooLarge(_))
        ));
    }

    /// RMS distance, in rad/m, of the points from their least-squares plane.
    fn plane_residual(k: &[[f64; 3]]) -> f64 {
        let n = k.len() as f64;
        let mean: Vec<f64> = (0..3).map(|j| k.iter().map(|v| v[j]).sum::<f64>() / n).collect();
        let m = DMatrix::from_fn(k.len(), 3, |i, j| k[i][j] - mean[j]);
        let min = m.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        min / n.sqrt()
    }

    #[test]
    fn network_samples_planes() {
        let wf = WaveformSpec::new(5e9, 16, 2e6).unwrap();
        let one = BaseStation::new(0, GroundPoint::new(80.0, 20.0, 25.0), 1, 0.03, 0.3).unwrap();
        let k = samples_from_network(&[one], &wf, GroundPoint::ORIGIN).unwrap();
        assert_eq!(k.len(), 16);
        let u = |v: &[f64; 3]| {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            [v[0] / n, v[1] / n, v[2] / n]
        };
        for v in &k {
            let (a, b) = (u(v), u(&k[0]));
            assert!((0..3).all(|i| (a[i] - b[i]).abs() < 1e-12));
        }
        let a = BaseStation::new(0, GroundPoint::new(80.0, 20.0, 25.0), 16, 0.03, 1.2).unwrap();
        let b = BaseStation::new(1, GroundPoint::new(-30.0, 90.0, 25.0), 16, 0.03, 0.1).unwrap();
        let ka = samples_from_network(std::slice::from_ref(&a), &wf, GroundPoint::ORIGIN).unwrap();
        assert!(plane_residual(&ka) < 1e-9);
        let kab = samples_from_network(&[a, b], &wf, GroundPoint::ORIGIN).unwrap();
        assert!(plane_residual(&kab) > 1e-3);
    }
}
