//! Ground-truth reflectivity and surface height.
//!
//! A scene is a square-pixel raster centered on the origin. Pixel `(i, j)`
//! covers `x ∈ [-w/2 + i·res, -w/2 + (i+1)·res)` and likewise in `y`; its
//! center is the point the forward model illuminates.

use std::f64::consts::TAU;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::GroundPoint;
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Region size `(width, height)` in meters.
    pub extent: (f64, f64),
    pub resolution: f64,
    /// Complex reflectivity indexed `[x_index, y_index]`.
    pub reflectivity: Array2<Complex64>,
    /// Surface height in meters, same shape as `reflectivity`.
    pub height: Option<Array2<f64>>,
    pub rng_seed: u64,
}

/// A square reflector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectorSpec {
    pub center: GroundPoint,
    pub side: f64,
    pub magnitude: f64,
    pub height: f64,
}

impl ReflectorSpec {
    pub fn square(center: GroundPoint, side: f64) -> Self {
        Self {
            center,
            side,
            magnitude: 1.0,
            height: 0.0,
        }
    }

    /// Half-open membership: `x - cx ∈ [-side/2, side/2)`, same in `y`.
    pub fn covers(&self, p: [f64; 2]) -> bool {
        let h = self.side / 2.0;
        let dx = p[0] - self.center.x;
        let dy = p[1] - self.center.y;
        (-h..h).contains(&dx) && (-h..h).contains(&dy)
    }
}

impl Scene {
    pub fn zeros(extent: (f64, f64), resolution: f64) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::param("resolution", "must be positive"));
        }
        if !(extent.0 > 0.0 && extent.1 > 0.0 && extent.0.is_finite() && extent.1.is_finite()) {
            return Err(Error::param("extent", "must be positive"));
        }
        let nx = (extent.0 / resolution).ceil() as usize;
        let ny = (extent.1 / resolution).ceil() as usize;
        Ok(Self {
            extent,
            resolution,
            reflectivity: Array2::zeros((nx, ny)),
            height: None,
            rng_seed: 0,
        })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.reflectivity.dim()
    }

    pub fn pixel_center(&self, i: usize, j: usize) -> GroundPoint {
        GroundPoint::ground(
            -self.extent.0 / 2.0 + (i as f64 + 0.5) * self.resolution,
            -self.extent.1 / 2.0 + (j as f64 + 0.5) * self.resolution,
        )
    }

    /// Pixel containing `(x, y)`, if inside the raster.
    pub fn pixel_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x + self.extent.0 / 2.0) / self.resolution).floor();
        let fj = ((y + self.extent.1 / 2.0) / self.resolution).floor();
        let (nx, ny) = self.dim();
        (fi >= 0.0 && fj >= 0.0 && (fi as usize) < nx && (fj as usize) < ny)
            .then(|| (fi as usize, fj as usize))
    }

    /// Surface height of pixel `(i, j)`; zero without a height field.
    pub fn height_at(&self, i: usize, j: usize) -> f64 {
        self.height.as_ref().map_or(0.0, |h| h[(i, j)])
    }

    /// Sets the reflectivity of the pixel containing `(x, y)`.
    pub fn set_point(&mut self, x: f64, y: f64, value: Complex64) -> Result<(usize, usize)> {
        let idx = self
            .pixel_of(x, y)
            .ok_or_else(|| Error::param("point", format!("({x}, {y}) lies outside the scene")))?;
        self.reflectivity[idx] = value;
        Ok(idx)
    }

    /// Nonzero pixels in row-major `(i, j)` order.
    pub fn nonzero_pixels(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.reflectivity
            .indexed_iter()
            .filter(|(_, v)| v.re != 0.0 || v.im != 0.0)
            .map(|((i, j), v)| (i, j, *v))
    }

    pub fn nonzero_count(&self) -> usize {
        self.nonzero_pixels().count()
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.reflectivity.mapv(|v| v.norm())
    }

    /// Rasterizes `reflectors`; covered pixels take the largest covering
    /// magnitude and one independent uniform phase each.
    pub fn with_reflectors(
        extent: (f64, f64),
        resolution: f64,
        reflectors: &[ReflectorSpec],
        seed: u64,
    ) -> Result<Self> {
        let mut scene = Scene::zeros(extent, resolution)?;
        scene.rng_seed = seed;
        let (nx, ny) = scene.dim();
        let mut mag = Array2::<f64>::zeros((nx, ny));
        for r in reflectors {
            if !(r.side > 0.0) {
                return Err(Error::param("reflector.side", "must be positive"));
            }
            if !(r.magnitude >= 0.0) {
                return Err(Error::param("reflector.magnitude", "must be nonnegative"));
            }
            scene.for_each_covered(r, |i, j| mag[(i, j)] = mag[(i, j)].max(r.magnitude));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ((i, j), m) in mag.indexed_iter() {
            if *m > 0.0 {
                let phase = rng.random_range(0.0..TAU);
                scene.reflectivity[(i, j)] = Complex64::from_polar(*m, phase);
            }
        }
        Ok(scene)
    }

    fn for_each_covered(&self, r: &ReflectorSpec, mut f: impl FnMut(usize, usize)) {
        let h = r.side / 2.0;
        let (nx, ny) = self.dim();
        let lo_i = ((r.center.x - h + self.extent.0 / 2.0) / self.resolution - 1.0).floor();
        let lo_j = ((r.center.y - h + self.extent.1 / 2.0) / self.resolution - 1.0).floor();
        let span = (r.side / self.resolution).ceil() as usize + 3;
        let lo_i = lo_i.max(0.0) as usize;
        let lo_j = lo_j.max(0.0) as usize;
        for i in lo_i..(lo_i + span).min(nx) {
            for j in lo_j..(lo_j + span).min(ny) {
                let c = self.pixel_center(i, j);
                if r.covers([c.x, c.y]) {
                    f(i, j);
                }
            }
        }
    }

    /// Pixel count covered by the union of `reflectors`.
    pub fn covered_count(&self, reflectors: &[ReflectorSpec]) -> usize {
        let mut mask = Array2::from_elem(self.dim(), false);
        for r in reflectors {
            self.for_each_covered(r, |i, j| mask[(i, j)] = true);
        }
        mask.iter().filter(|m| **m).count()
    }

    pub fn scaled(&self, c: Complex64) -> Scene {
        let mut s = self.clone();
        s.reflectivity.mapv_inplace(|v| v * c);
        s
    }

    /// Pixelwise sum of two scenes on the same raster.
    pub fn sum(&self, other: &Scene) -> Result<Scene> {
        if self.dim() != other.dim() || self.resolution != other.resolution {
            return Err(Error::DimensionMismatch("scenes use different rasters".into()));
        }
        let mut s = self.clone();
        s.reflectivity = &self.reflectivity + &other.reflectivity;
        Ok(s)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x_index", "y_index", "re", "im", "height"])?;
        for ((i, j), v) in self.reflectivity.indexed_iter() {
            w.write_record(&[
                i.to_string(),
                j.to_string(),
                v.re.to_string(),
                v.im.to_string(),
                self.height_at(i, j).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a scene CSV; the raster geometry is not stored in the file and
    /// is supplied by the caller.
    pub fn read_csv(path: &Path, extent: (f64, f64), resolution: f64) -> Result<Scene> {
        let mut scene = Scene::zeros(extent, resolution)?;
        let mut height = Array2::<f64>::zeros(scene.dim());
        let mut rdr = csv::Reader::from_path(path)?;
        let malformed = |reason: String| Error::Malformed {
            path: path.to_path_buf(),
            reason,
        };
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(malformed(format!("expected 5 fields, found {}", rec.len())));
            }
            let idx = |k: usize| -> Result<usize> {
                rec[k].parse().map_err(|_| malformed(format!("bad index {:?}", &rec[k])))
            };
            let num = |k: usize| -> Result<f64> {
                rec[k].parse().map_err(|_| malformed(format!("bad number {:?}", &rec[k])))
            };
            let (i, j) = (idx(0)?, idx(1)?);
            if i >= scene.dim().0 || j >= scene.dim().1 {
                return Err(malformed(format!("pixel ({i}, {j}) outside raster")));
            }
            scene.reflectivity[(i, j)] = Complex64::new(num(2)?, num(3)?);
            height[(i, j)] = num(4)?;
        }
        if height.iter().any(|h| *h != 0.0) {
            scene.height = Some(height);
        }
        Ok(scene)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        crate::io::write_pgm(path, &self.magnitude())
    }
}

/// `count` unit-magnitude squares of side `side` placed uniformly so each
/// fits inside the region. Returns the scene and the placed reflectors.
pub fn random_reflector_scene(
    extent: (f64, f64),
    resolution: f64,
    count: usize,
    side: f64,
    seed: u64,
) -> Result<(Scene, Vec<ReflectorSpec>)> {
    if !(side > 0.0) || side > extent.0 || side > extent.1 {
        return Err(Error::param("side", "must be positive and fit inside the extent"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hx = (extent.0 - side) / 2.0;
    let hy = (extent.1 - side) / 2.0;
    let reflectors: Vec<ReflectorSpec> = (0..count)
        .map(|_| {
            let x = if hx > 0.0 { rng.random_range(-hx..hx) } else { 0.0 };
            let y = if hy > 0.0 { rng.random_range(-hy..hy) } else { 0.0 };
            ReflectorSpec::square(GroundPoint::ground(x, y), side)
        })
        .collect();
    // Phases come from a stream separate from placement.
    let mut scene = Scene::with_reflectors(extent, resolution, &reflectors, seed ^ 0x5eed_f0a5e)?;
    scene.rng_seed = seed;
    Ok((scene, reflectors))
}

/// Rasterizes reflector heights into the scene; heights outside every
/// reflector are zero and overlaps take the maximum.
pub fn set_height_profile(scene: &Scene, reflectors: &[ReflectorSpec]) -> Scene {
    let mut out = scene.clone();
    let mut h = Array2::<f64>::zeros(scene.dim());
    for r in reflectors {
        scene.for_each_covered(r, |i, j| h[(i, j)] = h[(i, j)].max(r.height));
    }
    out.height = Some(h);
    out
}
