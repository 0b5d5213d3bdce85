//! Verification mathematics: the projection-slice identity on a discrete
//! grid, closed-form resolutions, and the one-dimensional model of imaging
//! with many narrow spectrum windows.
//!
//! In the one-dimensional model an image `g` of `P` pixels is observed
//! through `N` windows of `W` DFT bins each. The reconstruction is the
//! inverse DFT of the windowed spectra summed over windows; its error
//! shrinks like `1/N` as window phases `e^{-jxXₙ}` decorrelate the sidelobes.

use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

use crate::fft::{fft, fft2, ifft};
use crate::forward::WaveformSpec;
use crate::rng::stream_rng;
use crate::{Complex64, Error, Result, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq)]
pub struct SliceCheck {
    /// Radial frequencies `2π(q − N/2)/N`, radians per pixel.
    pub frequencies: Vec<f64>,
    /// The 2-D spectrum along the line at `angle`, interpolated from the FFT.
    pub slice: Vec<Complex64>,
    /// 1-D transform of the projection of the image onto the same line.
    pub projection_transform: Vec<Complex64>,
    pub max_abs_error: f64,
    /// `max_abs_error / max|slice|`.
    pub relative_error: f64,
}

/// `Σ_{n<N} e^{jnθ}`.
fn dirichlet(n: usize, theta: f64) -> Complex64 {
    let half = 0.5 * theta;
    let s = half.sin();
    if s.abs() < 1e-12 {
        // θ is a multiple of 2π; the sign follows e^{j(N−1)θ/2}.
        return Complex64::from_polar(n as f64, (n as f64 - 1.0) * half) * (half.cos().signum());
    }
    Complex64::from_polar((n as f64 * half).sin() / s, (n as f64 - 1.0) * half)
}

/// Compares the central slice of the 2-D spectrum with the 1-D transform of
/// the projection, both about the grid center `(N/2, N/2)`.
///
/// The slice comes from the 2-D FFT evaluated off-grid by exact
/// trigonometric interpolation; the projection side never forms a 2-D
/// spectrum. Both sides agree to rounding at every angle.
pub fn projection_slice_check(image: &Array2<Complex64>, angle: f64) -> Result<SliceCheck> {
    let (n, m) = image.dim();
    if n != m || n == 0 {
        return Err(Error::DimensionMismatch(format!("projection-slice check needs a square grid, got {n}x{m}")));
    }
    let c = (n / 2) as f64;
    let (ux, uy) = (angle.cos(), angle.sin());
    let frequencies: Vec<f64> = (0..n)
        .map(|q| std::f64::consts::TAU * (q as f64 - c) / n as f64)
        .collect();

    let spectrum = fft2(image);
    let norm = 1.0 / (n * n) as f64;
    let slice: Vec<Complex64> = frequencies
        .iter()
        .map(|&w| {
            let (w1, w2) = (w * ux, w * uy);
            let d1: Vec<Complex64> = (0..n)
                .map(|k| dirichlet(n, std::f64::consts::TAU * k as f64 / n as f64 - w1))
                .collect();
            let d2: Vec<Complex64> = (0..n)
                .map(|k| dirichlet(n, std::f64::consts::TAU * k as f64 / n as f64 - w2))
                .collect();
            let mut acc = Complex64::default();
            for ((k1, k2), f) in spectrum.indexed_iter() {
                acc += f * d1[k1] * d2[k2];
            }
            acc * norm * Complex64::from_polar(1.0, (w1 + w2) * c)
        })
        .collect();

    // Projection: a point mass at t = (p − center)·u per pixel, merged where
    // positions coincide.
    let mut masses: Vec<(f64, Complex64)> = image
        .indexed_iter()
        .map(|((i, j), g)| ((i as f64 - c) * ux + (j as f64 - c) * uy, *g))
        .collect();
    masses.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut projection: Vec<(f64, Complex64)> = Vec::new();
    for (t, g) in masses {
        match projection.last_mut() {
            Some((t0, acc)) if (t - *t0).abs() < 1e-12 => *acc += g,
            _ => projection.push((t, g)),
        }
    }
    let projection_transform: Vec<Complex64> = frequencies
        .iter()
        .map(|&w| projection.iter().map(|(t, g)| g * Complex64::from_polar(1.0, -w * t)).sum())
        .collect();

    let max_abs_error = slice
        .iter()
        .zip(&projection_transform)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let scale = slice.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(SliceCheck {
        frequencies,
        slice,
        projection_transform,
        max_abs_error,
        relative_error: if scale > 0.0 { max_abs_error / scale } else { max_abs_error },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolutions {
    /// `c/(2W)`.
    pub range: f64,
    /// `λ/(2δθ)` with `δθ = aperture/d`.
    pub cross: f64,
    /// Cross-range sample spacing `d/N_a`.
    pub cross_sampling: f64,
}

pub fn range_resolution(bandwidth: f64) -> f64 {
    SPEED_OF_LIGHT / (2.0 * bandwidth)
}

pub fn cross_resolution(wavelength: f64, aperture: f64, distance: f64) -> f64 {
    wavelength / (2.0 * aperture / distance)
}

pub fn cross_sampling(distance: f64, antenna_count: usize) -> f64 {
    distance / antenna_count as f64
}

/// Resolutions of one patch at range `distance`, using the wavelength at
/// the band center.
pub fn resolutions(wf: &WaveformSpec, aperture: f64, distance: f64, antenna_count: usize) -> Result<Resolutions> {
    wf.validate()?;
    if !(aperture > 0.0) || !(distance > 0.0) || antenna_count == 0 {
        return Err(Error::param("resolutions", "aperture, distance and antenna count must be positive"));
    }
    Ok(Resolutions {
        range: range_resolution(wf.bandwidth()),
        cross: cross_resolution(wf.center_wavelength(), aperture, distance),
        cross_sampling: cross_sampling(distance, antenna_count),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneDimModel {
    pub image: Vec<Complex64>,
    /// Window width `W` in DFT bins.
    pub window_width: usize,
    /// Window centers `Xₙ` in bins, in `[0, P)`; windows wrap around.
    pub window_centers: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneDimReconstruction {
    pub estimate: Vec<Complex64>,
    pub per_window: Vec<Vec<Complex64>>,
    /// Number of windows covering each bin.
    pub coverage: Vec<u32>,
    /// Some bin lies in more than one window and is counted more than once.
    pub overlapping: bool,
}

/// Bins of the width-`w` window centered at `center`, modulo `p`.
pub fn window_bins(center: f64, w: usize, p: usize) -> impl Iterator<Item = usize> {
    let start = (center - w as f64 / 2.0).round() as i64;
    (0..w as i64).map(move |i| (start + i).rem_euclid(p as i64) as usize)
}

pub fn reconstruct_1d(model: &OneDimModel) -> Result<OneDimReconstruction> {
    let p = model.image.len();
    let w = model.window_width;
    if w == 0 {
        return Err(Error::param("window_width", "must be at least 1"));
    }
    if p < 2 * w {
        return Err(Error::param("image", "length must be at least twice the window width"));
    }
    if let Some(c) = model.window_centers.iter().find(|c| !(0.0..p as f64).contains(*c)) {
        return Err(Error::param("window_centers", format!("{c} lies outside [0, {p})")));
    }
    let spectrum = fft(&model.image);
    let mut coverage = vec![0u32; p];
    let per_window: Vec<Vec<Complex64>> = model
        .window_centers
        .iter()
        .map(|&c| {
            let mut windowed = vec![Complex64::default(); p];
            for k in window_bins(c, w, p) {
                windowed[k] = spectrum[k];
                coverage[k] += 1;
            }
            ifft(&windowed)
        })
        .collect();
    let overlapping = coverage.iter().any(|&c| c > 1);
    if overlapping {
        log::warn!("spectrum windows overlap; shared bins are counted once per window");
    }
    let mut estimate = vec![Complex64::default(); p];
    for img in &per_window {
        for (e, v) in estimate.iter_mut().zip(img) {
            *e += v;
        }
    }
    Ok(OneDimReconstruction {
        estimate,
        per_window,
        coverage,
        overlapping,
    })
}

/// Discrete sinc of a width-`w` window on `p` bins: the inverse DFT of the
/// window centered on bin 0, scaled so the value at 0 is 1.
pub fn discrete_sinc(w: usize, p: usize) -> Vec<Complex64> {
    let mut window = vec![Complex64::default(); p];
    for k in window_bins(0.0, w, p) {
        window[k] = Complex64::new(1.0, 0.0);
    }
    let scale = p as f64 / w as f64;
    ifft(&window).into_iter().map(|v| v * scale).collect()
}

/// Energy-normalized impulse response of the windowed reconstruction:
/// `h = s·sinc / √(Σ|s·sinc|²)`.
pub fn impulse_response(centers: &[f64], w: usize, p: usize) -> Result<Vec<Complex64>> {
    let mut delta = vec![Complex64::default(); p];
    if p > 0 {
        delta[0] = Complex64::new(1.0, 0.0);
    }
    let raw = reconstruct_1d(&OneDimModel {
        image: delta,
        window_width: w,
        window_centers: centers.to_vec(),
    })?
    .estimate;
    let energy: f64 = raw.iter().map(|v| v.norm_sqr()).sum();
    if energy == 0.0 {
        return Ok(raw);
    }
    let s = energy.sqrt();
    Ok(raw.into_iter().map(|v| v / s).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsePrediction {
    pub per_pixel: Vec<f64>,
    /// `N / √(N² + Σ_{t≠0} sinc²(t)/N)`.
    pub h0: f64,
}

/// Large-`N` error model of the windowed reconstruction of an image with
/// magnitudes `g`.
pub fn mse_prediction(g: &[f64], n: usize, w: usize) -> Result<MsePrediction> {
    if n == 0 {
        return Err(Error::param("N", "must be at least 1"));
    }
    let p = g.len();
    if w == 0 || w > p {
        return Err(Error::param("window_width", "must lie in [1, P]"));
    }
    let sinc2: Vec<f64> = discrete_sinc(w, p).iter().map(|v| v.norm_sqr()).collect();
    let tail: f64 = sinc2.iter().skip(1).sum();
    let nf = n as f64;
    let per_pixel = (0..p)
        .map(|x| {
            let own = g[x] * g[x] * tail / (2.0 * nf.powi(3));
            let spill: f64 = (0..p)
                .filter(|&t| t != x)
                .map(|t| g[t] * g[t] * sinc2[(x + p - t) % p])
                .sum();
            own + spill / nf
        })
        .collect();
    Ok(MsePrediction {
        per_pixel,
        h0: nf / (nf * nf + tail / nf).sqrt(),
    })
}

/// Law of the window centers in the Monte Carlo experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenterDistribution {
    /// Uniform over the whole circular spectrum `[0, P)`.
    #[default]
    FullCircle,
    /// Uniform over `[W/2, P − W/2]`, so no window wraps.
    Interior,
}

impl CenterDistribution {
    fn sample<R: Rng>(&self, rng: &mut R, w: usize, p: usize) -> f64 {
        match self {
            CenterDistribution::FullCircle => rng.random_range(0.0..p as f64),
            CenterDistribution::Interior => rng.random_range(w as f64 / 2.0..=(p - w / 2) as f64 - 1e-9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseTrial {
    pub n: usize,
    pub trial: usize,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseSweep {
    pub ns: Vec<usize>,
    pub mean_mse: Vec<f64>,
    /// Pixel mean of [`mse_prediction`] for the unit-energy image.
    pub predicted: Vec<f64>,
    /// Least-squares slope of `ln mse` against `ln N`.
    pub slope: f64,
    pub trials: Vec<MseTrial>,
}

fn unit_energy(v: &[Complex64]) -> Vec<Complex64> {
    let e: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    if e == 0.0 {
        return v.to_vec();
    }
    let s = e.sqrt();
    v.iter().map(|x| x / s).collect()
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Empirical MSE of unit-energy reconstructions against the unit-energy image,
/// averaged over `trials` random center draws for each `N`.
pub fn mse_sweep(
    image: &[Complex64],
    w: usize,
    ns: &[usize],
    trials: usize,
    dist: CenterDistribution,
    seed: u64,
) -> Result<MseSweep> {
    if ns.len() < 2 || trials == 0 {
        return Err(Error::param("mse_sweep", "needs at least two N values and one trial"));
    }
    let p = image.len();
    let truth = unit_energy(image);
    let mut all = Vec::new();
    let mut mean_mse = Vec::new();
    let mut predicted = Vec::new();
    for &n in ns {
        let results: Vec<Result<f64>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(seed, ((n as u64) << 32) | t as u64);
                let centers: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng, w, p)).collect();
                let rec = reconstruct_1d(&OneDimModel {
                    image: truth.clone(),
                    window_width: w,
                    window_centers: centers,
                })?;
                let est = unit_energy(&rec.estimate);
                Ok(truth.iter().zip(&est).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / p as f64)
            })
            .collect();
        let mut sum = 0.0;
        for (t, r) in results.into_iter().enumerate() {
            let mse = r?;
            sum += mse;
            all.push(MseTrial { n, trial: t, mse });
        }
        mean_mse.push(sum / trials as f64);
        let mags: Vec<f64> = truth.iter().map(|v| v.norm()).collect();
        let pred = mse_prediction(&mags, n, w)?;
        predicted.push(pred.per_pixel.iter().sum::<f64>() / p as f64);
    }
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = mean_mse.iter().map(|m| m.ln()).collect();
    Ok(MseSweep {
        ns: ns.to_vec(),
        mean_mse,
        predicted,
        slope: fit_slope(&lx, &ly),
        trials: all,
    })
}

impl MseSweep {
    /// Columns `N, mean_mse, predicted_mse`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["N", "mean_mse", "predicted_mse"])?;
        for ((n, m), p) in self.ns.iter().zip(&self.mean_mse).zip(&self.predicted) {
            w.write_record(&[n.to_string(), m.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format `N, trial, mse`.
    pub fn write_trials_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["N", "trial", "mse"])?;
        for t in &self.trials {
            w.write_record(&[t.n.to_string(), t.trial.to_string(), t.mse.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidelobeStats {
    pub n: usize,
    pub trials: usize,
    pub x: Vec<f64>,
    /// Empirical mean of `s(x)/N`.
    pub mean: Vec<Complex64>,
    /// Empirical `Var[s(x)]/N`.
    pub variance_ratio: Vec<f64>,
    /// Empirical `E[s(xᵢ)s*(xᵢ₊₁)]/N` for consecutive grid points.
    pub autocorrelation: Vec<Complex64>,
    /// Standard error of each autocorrelation entry.
    pub autocorrelation_se: Vec<f64>,
    /// `s(0) = N` held exactly in every trial (true when 0 is not on the grid).
    pub zero_exact: bool,
}

/// Monte Carlo statistics of `s(x) = Σₙ e^{-jxXₙ}` with `Xₙ` i.i.d. uniform
/// on `[lo, hi)`.
pub fn sidelobe_statistics(
    (lo, hi): (f64, f64),
    n: usize,
    x_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<SidelobeStats> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidDistribution(format!("empty interval [{lo}, {hi})")));
    }
    if n == 0 || trials < 2 {
        return Err(Error::param("sidelobe_statistics", "needs N ≥ 1 and at least two trials"));
    }
    let draws: Vec<Vec<Complex64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t as u64);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
            x_grid
                .iter()
                .map(|&x| xs.iter().map(|&xn| Complex64::from_polar(1.0, -x * xn)).sum())
                .collect()
        })
        .collect();
    let nf = n as f64;
    let tf = trials as f64;
    let g = x_grid.len();
    let mut mean = vec![Complex64::default(); g];
    let mut second = vec![0.0; g];
    for d in &draws {
        for i in 0..g {
            mean[i] += d[i];
            second[i] += d[i].norm_sqr();
        }
    }
    let variance_ratio = (0..g)
        .map(|i| {
            let m = mean[i] / tf;
            (second[i] / tf - m.norm_sqr()) * tf / (tf - 1.0) / nf
        })
        .collect();
    let mean: Vec<Complex64> = mean.iter().map(|m| m / (tf * nf)).collect();
    let mut autocorrelation = Vec::new();
    let mut autocorrelation_se = Vec::new();
    for i in 0..g.saturating_sub(1) {
        let prods: Vec<Complex64> = draws.iter().map(|d| d[i] * d[i + 1].conj() / nf).collect();
        let m: Complex64 = prods.iter().sum::<Complex64>() / tf;
        let var = prods.iter().map(|p| (p - m).norm_sqr()).sum::<f64>() / (tf - 1.0);
        autocorrelation.push(m);
        autocorrelation_se.push((var / tf).sqrt());
    }
    let zero_exact = x_grid
        .iter()
        .enumerate()
        .filter(|(_, x)| **x == 0.0)
        .all(|(i, _)| draws.iter().all(|d| d[i] == Complex64::new(nf, 0.0)));
    Ok(SidelobeStats {
        n,
        trials,
        x: x_grid.to_vec(),
        mean,
        variance_ratio,
        autocorrelation,
        autocorrelation_se,
        zero_exact,
    })
}

impl SidelobeStats {
    /// Columns `x, mean_re, mean_im, variance_ratio`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "mean_re", "mean_im", "variance_ratio"])?;
        for ((x, m), v) in self.x.iter().zip(&self.mean).zip(&self.variance_ratio) {
            w.write_record(&[x.to_string(), m.re.to_string(), m.im.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
