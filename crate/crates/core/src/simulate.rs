//! Marked-set realizations on regular grids.
//!
//! Stationary Gaussian fields are drawn by circulant embedding, with a dense
//! eigendecomposition fallback for small grids. Three marked-set models are
//! built on top: excursion sets of a Gaussian field, the periodic triangle
//! model and the segment-and-singleton model.
//!
//! All randomness comes from ChaCha20 streams keyed by `(seed, stream)`, so a
//! replicate is reproducible independently of which thread produced it.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::gauss::CovarianceModel;
use crate::{Error, Result};

/// Largest grid handled by the dense fallback.
pub const DENSE_FALLBACK_MAX_NODES: usize = 4096;

/// Upper bound on grid size.
pub const MAX_NODES: usize = 1 << 24;

/// Eigenvalues above `-CLIP_TOLERANCE * max eigenvalue` are clipped to zero.
pub const CLIP_TOLERANCE: f64 = 1e-10;

/// A regular grid `{0, h, 2h, ...}` per axis, row-major with the last axis
/// fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub extent: Vec<f64>,
    pub spacing: f64,
    pub periodic: bool,
}

impl GridSpec {
    pub fn new(extent: Vec<f64>, spacing: f64, periodic: bool) -> Result<Self> {
        let g = Self { extent, spacing, periodic };
        g.validate()?;
        Ok(g)
    }

    /// A 1-D grid of `nodes` points at `spacing`.
    pub fn line(nodes: usize, spacing: f64, periodic: bool) -> Result<Self> {
        Self::new(vec![nodes as f64 * spacing], spacing, periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.extent.len()) {
            return Err(Error::Grid(format!("dimension must be 1 or 2, got {}", self.extent.len())));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::Grid(format!("spacing must be positive, got {}", self.spacing)));
        }
        let mut total = 1usize;
        for &e in &self.extent {
            let n = e / self.spacing;
            if !(n.is_finite() && n >= 1.0 - 1e-9) || (n - n.round()).abs() > 1e-6 * n.max(1.0) {
                return Err(Error::Grid(format!("extent {e} is not a multiple of spacing {}", self.spacing)));
            }
            total = total.saturating_mul(n.round() as usize);
        }
        if total > MAX_NODES {
            return Err(Error::Grid(format!("{total} nodes exceed the limit {MAX_NODES}")));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.extent.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.extent.iter().map(|e| (e / self.spacing).round() as usize).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of node `index`.
    pub fn coordinates(&self, index: usize) -> Vec<f64> {
        let shape = self.shape();
        let mut rest = index;
        let mut out = vec![0.0; shape.len()];
        for axis in (0..shape.len()).rev() {
            out[axis] = (rest % shape[axis]) as f64 * self.spacing;
            rest /= shape[axis];
        }
        out
    }
}

/// Seed of a ChaCha20 stream. Replicate `i` of a run uses stream `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub const GENERATOR: &'static str = "chacha20";

    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn replicate(self, index: u64) -> Self {
        Self { seed: self.seed, stream: index }
    }

    pub fn rng(self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// How a node relates to the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Outside,
    /// Part of a full-dimensional piece of the set.
    Solid,
    /// A snapped lower-dimensional piece (such as a singleton) that has zero
    /// volume in the continuum; it only becomes visible after dilation.
    Isolated,
}

impl Membership {
    pub fn is_member(self) -> bool {
        self != Membership::Outside
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelDescriptor {
    Excursion { t: f64, covariance: CovarianceModel },
    PeriodicTriangle { p: f64, xi: f64 },
    SegmentSingleton { p: f64, xi: f64, marks: MarkRule },
    Custom { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkedSetSample {
    pub grid: GridSpec,
    pub membership: Vec<Membership>,
    /// `Some` exactly on member nodes.
    pub marks: Vec<Option<f64>>,
    pub model: ModelDescriptor,
    pub seed: Option<RngSeed>,
}

impl MarkedSetSample {
    pub fn new(
        grid: GridSpec,
        membership: Vec<Membership>,
        marks: Vec<Option<f64>>,
        model: ModelDescriptor,
        seed: Option<RngSeed>,
    ) -> Result<Self> {
        let s = Self { grid, membership, marks, model, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let n = self.grid.len();
        if self.membership.len() != n || self.marks.len() != n {
            return Err(Error::Grid(format!(
                "{} membership flags and {} marks for {n} nodes",
                self.membership.len(),
                self.marks.len()
            )));
        }
        for (i, (m, z)) in self.membership.iter().zip(&self.marks).enumerate() {
            if m.is_member() != z.is_some() {
                return Err(Error::Precondition(format!("node {i}: mark presence does not match membership")));
            }
        }
        Ok(())
    }

    pub fn member_fraction(&self) -> f64 {
        self.membership.iter().filter(|m| m.is_member()).count() as f64 / self.membership.len() as f64
    }

    /// CSV with columns `x[,y],member,mark`; the mark is empty off the set.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = ["x", "y"][..self.grid.dimension()].to_vec();
        header.extend(["member", "mark"]);
        w.write_record(&header).map_err(csv_err)?;
        for (i, (m, z)) in self.membership.iter().zip(&self.marks).enumerate() {
            let mut row: Vec<String> = self.grid.coordinates(i).iter().map(|c| c.to_string()).collect();
            row.push(
                match m {
                    Membership::Outside => "0",
                    Membership::Solid => "1",
                    Membership::Isolated => "isolated",
                }
                .to_string(),
            );
            row.push(z.map(|v| v.to_string()).unwrap_or_default());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Distance between grid offsets `k` along an axis of `n` nodes.
fn axis_offset(k: usize, n: usize, periodic: bool) -> usize {
    if periodic {
        k.min(n - k)
    } else {
        k
    }
}

fn fft_2d(data: &mut [Complex64], rows: usize, cols: usize, planner: &mut FftPlanner<f64>) {
    let row_fft = planner.plan_fft_forward(cols);
    for row in data.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    if rows > 1 {
        let col_fft = planner.plan_fft_forward(rows);
        let mut column = vec![Complex64::new(0.0, 0.0); rows];
        for c in 0..cols {
            for r in 0..rows {
                column[r] = data[r * cols + c];
            }
            col_fft.process(&mut column);
            for r in 0..rows {
                data[r * cols + c] = column[r];
            }
        }
    }
}

/// Circulant embedding of a grid: `dims` of the torus and the eigenvalues.
struct Embedding {
    dims: Vec<usize>,
    eigenvalues: Vec<f64>,
}

impl Embedding {
    fn build(grid: &GridSpec, cov: &CovarianceModel, pad: usize) -> Self {
        let shape = grid.shape();
        let dims: Vec<usize> = shape
            .iter()
            .map(|&n| if grid.periodic || n == 1 { n } else { (2 * (n - 1)).next_power_of_two() * pad })
            .collect();
        let (rows, cols) = if dims.len() == 2 { (dims[0], dims[1]) } else { (1, dims[0]) };
        let h = grid.spacing;
        let mut c = vec![Complex64::new(0.0, 0.0); rows * cols];
        for r in 0..rows {
            let dr = if dims.len() == 2 { r.min(rows - r) as f64 } else { 0.0 };
            for col in 0..cols {
                let dc = col.min(cols - col) as f64;
                c[r * cols + col] = Complex64::new(cov.correlation(h * dr.hypot(dc)), 0.0);
            }
        }
        fft_2d(&mut c, rows, cols, &mut FftPlanner::new());
        Self { dims, eigenvalues: c.iter().map(|z| z.re).collect() }
    }

    fn min_relative(&self) -> (f64, f64) {
        let max = self.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        let min = self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        (min, max)
    }
}

fn dense_covariance(grid: &GridSpec, cov: &CovarianceModel) -> DMatrix<f64> {
    let n = grid.len();
    let shape = grid.shape();
    let coords: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut rest = i;
            let mut c = vec![0; shape.len()];
            for axis in (0..shape.len()).rev() {
                c[axis] = rest % shape[axis];
                rest /= shape[axis];
            }
            c
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = (0..shape.len())
            .map(|a| {
                let k = coords[i][a].abs_diff(coords[j][a]);
                let d = axis_offset(k, shape[a], grid.periodic) as f64;
                d * d
            })
            .sum();
        cov.correlation(grid.spacing * d2.sqrt())
    })
}

/// A sampler that factorizes the covariance once and then draws any number
/// of independent realizations.
pub enum GrfSampler {
    Circulant { grid: GridSpec, dims: Vec<usize>, sqrt_eigenvalues: Vec<f64> },
    Dense { grid: GridSpec, factor: DMatrix<f64> },
}

impl GrfSampler {
    pub fn new(grid: &GridSpec, cov: &CovarianceModel) -> Result<Self> {
        grid.validate()?;
        let pads: &[usize] = if grid.periodic { &[1] } else { &[1, 2, 4] };
        let mut worst = 0.0f64;
        for &pad in pads {
            let emb = Embedding::build(grid, cov, pad);
            let (min, max) = emb.min_relative();
            if min >= -CLIP_TOLERANCE * max {
                let m = emb.eigenvalues.len() as f64;
                let sqrt_eigenvalues = emb.eigenvalues.iter().map(|&l| (l.max(0.0) / m).sqrt()).collect();
                return Ok(Self::Circulant { grid: grid.clone(), dims: emb.dims, sqrt_eigenvalues });
            }
            worst = worst.min(min / max);
        }
        let n = grid.len();
        if n > DENSE_FALLBACK_MAX_NODES {
            return Err(Error::EmbeddingNotNonnegative { min_eigenvalue: worst, nodes: n });
        }
        let eig = SymmetricEigen::new(dense_covariance(grid, cov));
        let max = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -CLIP_TOLERANCE * max {
            return Err(Error::InvalidCovariance(format!(
                "covariance matrix on the grid has eigenvalue {min:e} (largest {max:e})"
            )));
        }
        let sqrt_l = DVector::from_iterator(n, eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
        let factor = eig.eigenvectors * DMatrix::from_diagonal(&sqrt_l);
        Ok(Self::Dense { grid: grid.clone(), factor })
    }

    pub fn grid(&self) -> &GridSpec {
        match self {
            Self::Circulant { grid, .. } | Self::Dense { grid, .. } => grid,
        }
    }

    pub fn is_circulant(&self) -> bool {
        matches!(self, Self::Circulant { .. })
    }

    pub fn sample(&self, seed: RngSeed) -> Vec<f64> {
        let mut rng = seed.rng();
        match self {
            Self::Dense { factor, .. } => {
                let eps = DVector::from_iterator(factor.ncols(), (0..factor.ncols()).map(|_| rng.sample(StandardNormal)));
                (factor * eps).iter().copied().collect()
            }
            Self::Circulant { grid, dims, sqrt_eigenvalues } => {
                let mut w: Vec<Complex64> = sqrt_eigenvalues
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(re, im) * s
                    })
                    .collect();
                let (rows, cols) = if dims.len() == 2 { (dims[0], dims[1]) } else { (1, dims[0]) };
                fft_2d(&mut w, rows, cols, &mut FftPlanner::new());
                let shape = grid.shape();
                let (out_rows, out_cols) = if shape.len() == 2 { (shape[0], shape[1]) } else { (1, shape[0]) };
                let mut out = Vec::with_capacity(out_rows * out_cols);
                for r in 0..out_rows {
                    out.extend(w[r * cols..r * cols + out_cols].iter().map(|z| z.re));
                }
                out
            }
        }
    }
}

/// One realization of a centered unit-variance Gaussian field with
/// correlation `cov` on `grid`.
pub fn sample_grf(grid: &GridSpec, cov: &CovarianceModel, seed: RngSeed) -> Result<Vec<f64>> {
    Ok(GrfSampler::new(grid, cov)?.sample(seed))
}

/// `Xi_t = {x : Z(x) >= t}` marked by the field itself.
pub fn excursion_sample(grid: &GridSpec, field: &[f64], t: f64, model: ModelDescriptor, seed: Option<RngSeed>) -> Result<MarkedSetSample> {
    if field.len() != grid.len() {
        return Err(Error::Grid(format!("field has {} values for {} nodes", field.len(), grid.len())));
    }
    let membership = field.iter().map(|&z| if z >= t { Membership::Solid } else { Membership::Outside }).collect();
    let marks = field.iter().map(|&z| (z >= t).then_some(z)).collect();
    MarkedSetSample::new(grid.clone(), membership, marks, model, seed)
}

fn require_line(grid: &GridSpec, period: f64) -> Result<()> {
    if grid.dimension() != 1 || !grid.periodic {
        return Err(Error::Grid("the model needs a periodic 1-D grid".into()));
    }
    let periods = grid.extent[0] / period;
    if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) || periods.round() < 1.0 {
        return Err(Error::Grid(format!("extent {} is not a multiple of the period {period}", grid.extent[0])));
    }
    Ok(())
}

/// The triangle mark at phase `y = frac(x - xi)` of the 1-periodic model with
/// `Xi = Z + [xi, xi + p]`, or `None` off the set.
pub fn triangle_mark(p: f64, y: f64) -> Option<f64> {
    if y < p / 2.0 {
        Some(y)
    } else if y <= p {
        Some(p - y)
    } else {
        None
    }
}

/// The 1-periodic triangle model for `p` in `(2/3, 1]`, with phase
/// `xi ~ U[0, 1)`. The grid must cover whole periods at spacing `<= p/200`.
pub fn periodic_triangle_sample(p: f64, grid: &GridSpec, seed: RngSeed) -> Result<MarkedSetSample> {
    if !(p > 2.0 / 3.0 && p <= 1.0) {
        return Err(Error::Domain(format!("p must lie in (2/3, 1], got {p}")));
    }
    require_line(grid, 1.0)?;
    if grid.spacing > p / 200.0 + 1e-15 {
        return Err(Error::Grid(format!("spacing {} exceeds p/200", grid.spacing)));
    }
    let xi: f64 = seed.rng().random();
    Ok(periodic_triangle_at(p, xi, grid))
}

/// The periodic triangle model for a given phase.
pub fn periodic_triangle_at(p: f64, xi: f64, grid: &GridSpec) -> MarkedSetSample {
    let n = grid.len();
    let mut membership = Vec::with_capacity(n);
    let mut marks = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 * grid.spacing;
        let y = (x - xi).rem_euclid(1.0);
        let z = triangle_mark(p, y);
        membership.push(if z.is_some() { Membership::Solid } else { Membership::Outside });
        marks.push(z);
    }
    MarkedSetSample { grid: grid.clone(), membership, marks, model: ModelDescriptor::PeriodicTriangle { p, xi }, seed: None }
}

/// Marks for the segment-and-singleton model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum MarkRule {
    /// Distance to the boundary of the set: `p - |x - c|` on a segment with
    /// centre `c`, and 0 on a singleton.
    #[default]
    Distance,
    Constant { segment: f64, singleton: f64 },
}

/// Period of the segment-and-singleton model.
pub const SEGMENT_PERIOD: f64 = 2.0;

/// `Xi = xi + U_z [2z - p, 2z + p] u {2z + 1}` for `p` in `(0, 1/3)`, with
/// `xi ~ U[0, 2)`. Singletons snap to their nearest node and are stored as
/// [`Membership::Isolated`].
pub fn segment_singleton_sample(p: f64, grid: &GridSpec, seed: RngSeed, rule: MarkRule) -> Result<MarkedSetSample> {
    let xi = SEGMENT_PERIOD * seed.rng().random::<f64>();
    let mut s = segment_singleton_at(p, xi, grid, rule)?;
    s.seed = Some(seed);
    Ok(s)
}

/// The segment-and-singleton model for a given phase.
pub fn segment_singleton_at(p: f64, xi: f64, grid: &GridSpec, rule: MarkRule) -> Result<MarkedSetSample> {
    if !(p > 0.0 && p < 1.0 / 3.0) {
        return Err(Error::Domain(format!("p must lie in (0, 1/3), got {p}")));
    }
    require_line(grid, SEGMENT_PERIOD)?;
    let n = grid.len();
    let h = grid.spacing;
    let length = grid.extent[0];
    let mut membership = vec![Membership::Outside; n];
    let mut marks = vec![None; n];
    for i in 0..n {
        let y = (i as f64 * h - xi).rem_euclid(SEGMENT_PERIOD);
        let dist = y.min(SEGMENT_PERIOD - y);
        if dist <= p {
            membership[i] = Membership::Solid;
            marks[i] = Some(match rule {
                MarkRule::Distance => p - dist,
                MarkRule::Constant { segment, .. } => segment,
            });
        }
    }
    let periods = (length / SEGMENT_PERIOD).round() as usize;
    for z in 0..periods {
        let at = (xi + 1.0 + SEGMENT_PERIOD * z as f64).rem_euclid(length);
        let i = ((at / h).round() as usize) % n;
        membership[i] = Membership::Isolated;
        marks[i] = Some(match rule {
            MarkRule::Distance => 0.0,
            MarkRule::Constant { singleton, .. } => singleton,
        });
    }
    MarkedSetSample::new(
        grid.clone(),
        membership,
        marks,
        ModelDescriptor::SegmentSingleton { p, xi, marks: rule },
        None,
    )
}

/// Closed-form mark covariance of the periodic triangle model on `[0, 1)`.
pub fn periodic_triangle_cov(p: f64, r: f64) -> f64 {
    let r = r.rem_euclid(1.0);
    let r = if r > 0.5 { 1.0 - r } else { r };
    let q = 2.0 * p - 1.0;
    if r < 1.0 - p {
        (p.powi(4) - 4.0 * p.powi(3) * r - 12.0 * p * p * r * r + 48.0 * p * r.powi(3) - 36.0 * r.powi(4))
            / (48.0 * (p - r).powi(2))
    } else if r < p / 2.0 {
        let a = -3.0 * p.powi(4) - 24.0 * p.powi(3) * r + 12.0 * p.powi(3) - 48.0 * p * p * r * r + 48.0 * p * p * r
            - 12.0 * p * p;
        let b = 64.0 * p * r.powi(3) + 48.0 * p * r * r - 48.0 * p * r + 8.0 * p - 32.0 * r.powi(3) - 24.0 * r * r
            + 24.0 * r
            - 4.0;
        (a + b) / (48.0 * q * q)
    } else {
        -(4.0 * p.powi(4) - 8.0 * p.powi(3) + 6.0 * p * p - 2.0 * p + 12.0 * r.powi(4) - 24.0 * r.powi(3)
            + 18.0 * r * r
            - 6.0 * r
            + 1.0)
            / (12.0 * q * q)
    }
}

/// `int_0^1 cov(r) dr` for the periodic triangle model, in closed form.
pub fn periodic_triangle_cov_integral(p: f64) -> f64 {
    let q = 2.0 * p - 1.0;
    7.0 / 6.0 * p.powi(3) * (p / q).ln()
        + (409.0 * p.powi(5) - 790.0 * p.powi(4) + 565.0 * p.powi(3) - 280.0 * p * p + 120.0 * p - 24.0)
            / (120.0 * q * q)
}

/// Breakpoints of [`periodic_triangle_cov`] inside `(0, 1)`.
pub fn periodic_triangle_breaks(p: f64) -> Vec<f64> {
    vec![1.0 - p, p / 2.0, 0.5, 1.0 - p / 2.0, p]
}
