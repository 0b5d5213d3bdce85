//! Information terms of a discrete channel `p(y | x, s)` shared by a
//! communication input `X` and an independent sensing state `S`.
//!
//! All quantities are in bits, with `0·log 0 = 0`. The four terms of
//! `I(X;Y) + I(Y;S|X) = H(Y) − H(Y|X,S)` are computed from separate sums so
//! the identity is a genuine check.

use std::path::Path;

use ndarray::Array2;
use rand_distr::{Distribution, Exp1};

use crate::rng::stream_rng;
use crate::{Error, Result};

const SUM_TOL: f64 = 1e-12;
const ZERO: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct JointChannel {
    pub px: Vec<f64>,
    pub ps: Vec<f64>,
    /// Row `x·|S| + s` holds `p(y | x, s)`.
    pub kernel: Array2<f64>,
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution(format!("{name} is empty")));
    }
    if let Some(v) = p.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidDistribution(format!("{name} has entry {v}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidDistribution(format!("{name} sums to {sum}")));
    }
    Ok(())
}

impl JointChannel {
    pub fn new(px: Vec<f64>, ps: Vec<f64>, kernel: Array2<f64>) -> Result<Self> {
        check_distribution("p(X)", &px)?;
        check_distribution("p(S)", &ps)?;
        if kernel.nrows() != px.len() * ps.len() || kernel.ncols() == 0 {
            return Err(Error::InvalidDistribution(format!(
                "kernel is {}x{}, expected {} rows",
                kernel.nrows(),
                kernel.ncols(),
                px.len() * ps.len()
            )));
        }
        for (r, row) in kernel.rows().into_iter().enumerate() {
            let (x, s) = (r / ps.len(), r % ps.len());
            check_distribution(&format!("p(Y | x={x}, s={s})"), row.as_slice().unwrap_or(&row.to_vec()))?;
        }
        Ok(Self { px, ps, kernel })
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.px.len(), self.ps.len(), self.kernel.ncols())
    }

    fn cond(&self, x: usize, s: usize, y: usize) -> f64 {
        self.kernel[(x * self.ps.len() + s, y)]
    }

    /// `p(x, s, y)`.
    pub fn joint(&self, x: usize, s: usize, y: usize) -> f64 {
        self.px[x] * self.ps[s] * self.cond(x, s, y)
    }

    /// Loads the sectioned CSV layout: a `px` row, a `ps` row, then one
    /// `kernel,x,s,p(y=0),…` row per `(x, s)`. Lines starting with `#` are
    /// comments.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let malformed = |reason: String| Error::Malformed {
            path: path.to_path_buf(),
            reason,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let (mut px, mut ps) = (None, None);
        let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let nums = |skip: usize| -> Result<Vec<f64>> {
                rec.iter()
                    .skip(skip)
                    .map(|f| f.parse::<f64>().map_err(|e| malformed(format!("`{f}`: {e}"))))
                    .collect()
            };
            match rec.get(0) {
                Some("px") => px = Some(nums(1)?),
                Some("ps") => ps = Some(nums(1)?),
                Some("kernel") => {
                    let idx = |i: usize| -> Result<usize> {
                        rec.get(i)
                            .and_then(|f| f.parse().ok())
                            .ok_or_else(|| malformed("kernel row needs integer x and s".into()))
                    };
                    rows.push((idx(1)?, idx(2)?, nums(3)?));
                }
                Some("") | None => {}
                Some(other) => return Err(malformed(format!("unknown section `{other}`"))),
            }
        }
        let px = px.ok_or_else(|| malformed("missing px row".into()))?;
        let ps = ps.ok_or_else(|| malformed("missing ps row".into()))?;
        let ny = rows.first().map(|r| r.2.len()).unwrap_or(0);
        let mut kernel = Array2::from_elem((px.len() * ps.len(), ny), f64::NAN);
        for (x, s, p) in rows {
            if x >= px.len() || s >= ps.len() || p.len() != ny {
                return Err(malformed(format!("kernel row ({x}, {s}) does not fit the alphabets")));
            }
            for (y, v) in p.into_iter().enumerate() {
                kernel[(x * ps.len() + s, y)] = v;
            }
        }
        if kernel.iter().any(|v| v.is_nan()) {
            return Err(malformed("kernel rows missing".into()));
        }
        Self::new(px, ps, kernel)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
        let row = |label: &str, v: &[f64]| {
            std::iter::once(label.to_string())
                .chain(v.iter().map(|p| format!("{p:?}")))
                .collect::<Vec<_>>()
        };
        w.write_record(row("px", &self.px))?;
        w.write_record(row("ps", &self.ps))?;
        for x in 0..self.px.len() {
            for s in 0..self.ps.len() {
                let mut r = vec!["kernel".to_string(), x.to_string(), s.to_string()];
                r.extend(self.kernel.row(x * self.ps.len() + s).iter().map(|p| format!("{p:?}")));
                w.write_record(r)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// A channel with priors and kernel rows drawn uniformly from their simplices.
pub fn random_channel(nx: usize, ns: usize, ny: usize, seed: u64) -> Result<JointChannel> {
    let mut rng = stream_rng(seed, 0);
    let mut simplex = |n: usize| -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    };
    let px = simplex(nx);
    let ps = simplex(ns);
    let mut kernel = Array2::zeros((nx * ns, ny));
    for r in 0..nx * ns {
        for (y, v) in simplex(ny).into_iter().enumerate() {
            kernel[(r, y)] = v;
        }
    }
    JointChannel::new(px, ps, kernel)
}

fn plog(p: f64) -> f64 {
    // Certain outcomes contribute nothing; rounding must not make them negative.
    if p < ZERO || p > 1.0 - ZERO {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Shannon entropy in bits.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().map(|&v| plog(v)).sum()
}

/// `p·log₂(p/q)`, zero when `p` vanishes.
fn kl_term(p: f64, q: f64) -> f64 {
    if p < ZERO {
        0.0
    } else {
        p * (p / q).log2()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationTerms {
    pub i_xy: f64,
    pub i_ys_given_x: f64,
    pub h_y: f64,
    pub h_y_given_xs: f64,
    /// Reported alongside `I(Y;S|X)`.
    pub i_ys: f64,
    pub h_x: f64,
    pub h_s: f64,
}

impl InformationTerms {
    /// `I(X;Y) + I(Y;S|X) − (H(Y) − H(Y|X,S))`.
    pub fn identity_residual(&self) -> f64 {
        self.i_xy + self.i_ys_given_x - (self.h_y - self.h_y_given_xs)
    }

    pub fn table(&self) -> String {
        let rows = [
            ("I(X;Y)", self.i_xy),
            ("I(Y;S|X)", self.i_ys_given_x),
            ("I(Y;S)", self.i_ys),
            ("H(Y)", self.h_y),
            ("H(Y|X,S)", self.h_y_given_xs),
            ("H(X)", self.h_x),
            ("H(S)", self.h_s),
            ("identity residual", self.identity_residual()),
        ];
        rows.iter()
            .map(|(k, v)| format!("{k:<18} {v:.12} bits\n"))
            .collect()
    }

    /// Columns `term, bits`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["term", "bits"])?;
        for (k, v) in [
            ("I(X;Y)", self.i_xy),
            ("I(Y;S|X)", self.i_ys_given_x),
            ("I(Y;S)", self.i_ys),
            ("H(Y)", self.h_y),
            ("H(Y|X,S)", self.h_y_given_xs),
            ("H(X)", self.h_x),
            ("H(S)", self.h_s),
            ("identity_residual", self.identity_residual()),
        ] {
            w.write_record([k.to_string(), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn information_terms(ch: &JointChannel) -> InformationTerms {
    let (nx, ns, ny) = ch.sizes();
    let mut p_y = vec![0.0; ny];
    let mut p_xy = vec![vec![0.0; ny]; nx];
    let mut p_sy = vec![vec![0.0; ny]; ns];
    for x in 0..nx {
        for s in 0..ns {
            for y in 0..ny {
                let j = ch.joint(x, s, y);
                p_y[y] += j;
                p_xy[x][y] += j;
                p_sy[s][y] += j;
            }
        }
    }
    let mut i_xy = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            i_xy += kl_term(p_xy[x][y], ch.px[x] * p_y[y]);
        }
    }
    let mut i_ys = 0.0;
    for s in 0..ns {
        for y in 0..ny {
            i_ys += kl_term(p_sy[s][y], ch.ps[s] * p_y[y]);
        }
    }
    // I(Y;S|X) = Σ p(x,s,y)·log p(y|x,s)/p(y|x).
    let mut i_ys_given_x = 0.0;
    let mut h_y_given_xs = 0.0;
    for x in 0..nx {
        for s in 0..ns {
            let w = ch.px[x] * ch.ps[s];
            for y in 0..ny {
                let c = ch.cond(x, s, y);
                h_y_given_xs += w * plog(c);
                if ch.px[x] >= ZERO {
                    i_ys_given_x += w * kl_term(c, p_xy[x][y] / ch.px[x]);
                }
            }
        }
    }
    InformationTerms {
        i_xy,
        i_ys_given_x,
        h_y: entropy(&p_y),
        h_y_given_xs,
        i_ys,
        h_x: entropy(&ch.px),
        h_s: entropy(&ch.ps),
    }
}

/// `½·log₂(1 + snr)`.
pub fn gaussian_sum_bound(snr: f64) -> Result<f64> {
    if !(snr >= 0.0) {
        return Err(Error::param("snr", format!("must be nonnegative, got {snr}")));
    }
    Ok(0.5 * (1.0 + snr).log2())
}
