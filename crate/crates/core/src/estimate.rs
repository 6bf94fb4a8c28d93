//! Empirical second-order characteristics of marked-set samples.
//!
//! For each lag `r` and dilation radius `eps` the estimator forms ratios of
//! sums over all node pairs `(x, x + r)` that both lie in the (dilated) set,
//! pooled over replicates. Standard errors come from a grouped jackknife over
//! replicates. Per-replicate sums are computed in parallel and merged in
//! replicate order, so results do not depend on the number of workers.
//!
//! A dilation radius of zero selects the undilated estimator, which only uses
//! nodes of full-dimensional parts of the set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gauss::CurveKind;
use crate::simulate::{GridSpec, MarkedSetSample, Membership};
use crate::{Error, Result};

/// The functions `e(m1, m2) = m1`, `c(m1, m2) = m1 m2` and `v(m1, m2) = m1^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaTag {
    E,
    C,
    V,
}

impl KappaTag {
    pub fn apply(self, m1: f64, m2: f64) -> f64 {
        match self {
            KappaTag::E => m1,
            KappaTag::C => m1 * m2,
            KappaTag::V => m1 * m1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KappaTag::E => "e",
            KappaTag::C => "c",
            KappaTag::V => "v",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeCorrection {
    /// Pairs wrap around a periodic grid.
    Periodic,
    /// Only pairs with both nodes inside the window are used.
    MinusSampling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub lags: Vec<f64>,
    /// Dilation radii; 0 selects the undilated estimator, positive radii
    /// must be at least one grid spacing.
    pub eps: Vec<f64>,
    /// `None` picks wraparound on periodic grids and minus-sampling otherwise.
    #[serde(default)]
    pub edge: Option<EdgeCorrection>,
    #[serde(default = "default_groups")]
    pub jackknife_groups: usize,
    /// Size of the worker pool; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn default_groups() -> usize {
    50
}

impl EstimatorConfig {
    pub fn new(lags: Vec<f64>, eps: Vec<f64>) -> Self {
        Self { lags, eps, edge: None, jackknife_groups: default_groups(), workers: None }
    }

    pub fn undilated(lags: Vec<f64>) -> Self {
        Self::new(lags, vec![0.0])
    }

    fn edge_for(&self, grid: &GridSpec) -> Result<EdgeCorrection> {
        match self.edge {
            None if grid.periodic => Ok(EdgeCorrection::Periodic),
            None => Ok(EdgeCorrection::MinusSampling),
            Some(EdgeCorrection::Periodic) if !grid.periodic => {
                Err(Error::Precondition("wraparound edge correction needs a periodic grid".into()))
            }
            Some(e) => Ok(e),
        }
    }

    /// Grid offsets of the lags.
    fn offsets(&self, grid: &GridSpec) -> Result<Vec<usize>> {
        let h = grid.spacing;
        let half = grid.shape().into_iter().min().unwrap_or(0) / 2;
        self.lags
            .iter()
            .map(|&r| {
                let k = (r / h).round();
                if !(r >= 0.0) || (k * h - r).abs() > 1e-9 * r.max(1.0) {
                    return Err(Error::Grid(format!("lag {r} is not a multiple of the spacing {h}")));
                }
                let k = k as usize;
                if k > half {
                    return Err(Error::Grid(format!("lag {r} exceeds half the observation window")));
                }
                Ok(k)
            })
            .collect()
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        if self.lags.is_empty() || self.eps.is_empty() {
            return Err(Error::Precondition("lag grid and dilation radii must be nonempty".into()));
        }
        for &e in &self.eps {
            check_eps(e, grid)?;
        }
        if self.jackknife_groups == 0 {
            return Err(Error::Precondition("at least one jackknife group is needed".into()));
        }
        Ok(())
    }
}

fn check_eps(eps: f64, grid: &GridSpec) -> Result<()> {
    if eps == 0.0 || (eps.is_finite() && eps >= grid.spacing * (1.0 - 1e-12)) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("dilation radius {eps} is below the grid spacing {}", grid.spacing)))
    }
}

/// Marks of the undilated set, restricted to full-dimensional parts.
pub fn undilated_mark_field(sample: &MarkedSetSample) -> Vec<Option<f64>> {
    sample
        .membership
        .iter()
        .zip(&sample.marks)
        .map(|(m, z)| if *m == Membership::Solid { *z } else { None })
        .collect()
}

/// `max` of the marks within distance `eps` of each node, defined on the
/// dilated set and `None` elsewhere.
pub fn dilated_mark_field(sample: &MarkedSetSample, eps: f64) -> Result<Vec<Option<f64>>> {
    let grid = &sample.grid;
    if eps <= 0.0 {
        return Err(Error::Precondition("dilation radius must be positive".into()));
    }
    check_eps(eps, grid)?;
    let shape = grid.shape();
    let reach = (eps / grid.spacing * (1.0 + 1e-12)).floor() as isize;
    let r2 = (eps / grid.spacing) * (eps / grid.spacing) * (1.0 + 1e-12);
    let (rows, cols) = if shape.len() == 2 { (shape[0], shape[1]) } else { (1, shape[0]) };
    let row_reach = if shape.len() == 2 { reach } else { 0 };
    let mut offsets = Vec::new();
    for a in -row_reach..=row_reach {
        for b in -reach..=reach {
            if ((a * a + b * b) as f64) <= r2 {
                offsets.push((a, b));
            }
        }
    }
    let wrap = |i: isize, n: usize| -> Option<usize> {
        if grid.periodic {
            Some(i.rem_euclid(n as isize) as usize)
        } else if i >= 0 && (i as usize) < n {
            Some(i as usize)
        } else {
            None
        }
    };
    let mut out = vec![None; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            let mut best: Option<f64> = None;
            for &(a, b) in &offsets {
                let (Some(rr), Some(cc)) = (wrap(r as isize + a, rows), wrap(c as isize + b, cols)) else {
                    continue;
                };
                if let Some(z) = sample.marks[rr * cols + cc] {
                    best = Some(best.map_or(z, |m: f64| m.max(z)));
                }
            }
            out[r * cols + c] = best;
        }
    }
    Ok(out)
}

/// Sums over pairs `(x, x + r)` in the set of `1, m1, m2, m1^2, m2^2, m1 m2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PairSums {
    pub n: f64,
    pub s1: f64,
    pub s2: f64,
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
}

impl PairSums {
    fn add_pair(&mut self, a: f64, b: f64) {
        self.n += 1.0;
        self.s1 += a;
        self.s2 += b;
        self.s11 += a * a;
        self.s22 += b * b;
        self.s12 += a * b;
    }

    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.s1 += o.s1;
        self.s2 += o.s2;
        self.s11 += o.s11;
        self.s22 += o.s22;
        self.s12 += o.s12;
    }

    fn minus(&self, o: &Self) -> Self {
        Self {
            n: self.n - o.n,
            s1: self.s1 - o.s1,
            s2: self.s2 - o.s2,
            s11: self.s11 - o.s11,
            s22: self.s22 - o.s22,
            s12: self.s12 - o.s12,
        }
    }

    pub fn kappas(&self) -> Option<KappaInputs> {
        (self.n > 0.0).then(|| KappaInputs {
            e_pos: self.s1 / self.n,
            e_neg: self.s2 / self.n,
            c: self.s12 / self.n,
            v_pos: self.s11 / self.n,
            v_neg: self.s22 / self.n,
        })
    }
}

/// Sums of member count and marks, for the mean mark.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MarkSums {
    pub n: f64,
    pub s: f64,
}

impl MarkSums {
    fn merge(&mut self, o: &Self) {
        self.n += o.n;
        self.s += o.s;
    }

    fn minus(&self, o: &Self) -> Self {
        Self { n: self.n - o.n, s: self.s - o.s }
    }

    pub fn mean(&self) -> Option<f64> {
        (self.n > 0.0).then(|| self.s / self.n)
    }
}

/// Pair sums per `(eps, lag)` and mark sums per `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Block {
    pairs: Vec<PairSums>,
    marks: Vec<MarkSums>,
}

impl Block {
    fn zero(n_eps: usize, n_lags: usize) -> Self {
        Self { pairs: vec![PairSums::default(); n_eps * n_lags], marks: vec![MarkSums::default(); n_eps] }
    }

    fn merge(&mut self, o: &Self) {
        self.pairs.iter_mut().zip(&o.pairs).for_each(|(a, b)| a.merge(b));
        self.marks.iter_mut().zip(&o.marks).for_each(|(a, b)| a.merge(b));
    }
}

fn sample_block(sample: &MarkedSetSample, cfg: &EstimatorConfig, offsets: &[usize], edge: EdgeCorrection) -> Result<Block> {
    let shape = sample.grid.shape();
    let (rows, cols) = if shape.len() == 2 { (shape[0], shape[1]) } else { (1, shape[0]) };
    let mut block = Block::zero(cfg.eps.len(), offsets.len());
    for (ei, &eps) in cfg.eps.iter().enumerate() {
        let field = if eps == 0.0 { undilated_mark_field(sample) } else { dilated_mark_field(sample, eps)? };
        let ms = &mut block.marks[ei];
        for z in field.iter().flatten() {
            ms.n += 1.0;
            ms.s += z;
        }
        for (li, &k) in offsets.iter().enumerate() {
            let ps = &mut block.pairs[ei * offsets.len() + li];
            let periodic = edge == EdgeCorrection::Periodic;
            // Along the last axis.
            for r in 0..rows {
                let row = &field[r * cols..(r + 1) * cols];
                let limit = if periodic { cols } else { cols.saturating_sub(k) };
                for c in 0..limit {
                    if let (Some(a), Some(b)) = (row[c], row[(c + k) % cols]) {
                        ps.add_pair(a, b);
                    }
                }
            }
            // Along the first axis of a 2-D grid.
            if shape.len() == 2 {
                let limit = if periodic { rows } else { rows.saturating_sub(k) };
                for r in 0..limit {
                    let r2 = (r + k) % rows;
                    for c in 0..cols {
                        if let (Some(a), Some(b)) = (field[r * cols + c], field[r2 * cols + c]) {
                            ps.add_pair(a, b);
                        }
                    }
                }
            }
        }
    }
    Ok(block)
}

/// Pooled pair statistics of a set of replicates, grouped for the jackknife.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStatistics {
    pub lags: Vec<f64>,
    pub eps: Vec<f64>,
    pub replicates: usize,
    total: Block,
    groups: Vec<Block>,
}

fn run_in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Precondition(format!("worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Accumulates pair sums over `samples`, which must share one grid.
pub fn collect_statistics(samples: &[MarkedSetSample], cfg: &EstimatorConfig) -> Result<PairStatistics> {
    let first = samples.first().ok_or_else(|| Error::Precondition("no samples".into()))?;
    let grid = &first.grid;
    if samples.iter().any(|s| s.grid != *grid) {
        return Err(Error::Precondition("all samples must share one grid".into()));
    }
    cfg.validate(grid)?;
    let edge = cfg.edge_for(grid)?;
    let offsets = cfg.offsets(grid)?;
    let blocks: Vec<Block> = run_in_pool(cfg.workers, || {
        samples.par_iter().map(|s| sample_block(s, cfg, &offsets, edge)).collect::<Result<Vec<_>>>()
    })??;
    Ok(PairStatistics::from_blocks(cfg, blocks))
}

/// Like [`collect_statistics`] for replicates generated on the fly by
/// `make(i)`, without holding all samples in memory.
pub fn collect_statistics_with<F>(replicates: usize, cfg: &EstimatorConfig, make: F) -> Result<PairStatistics>
where
    F: Fn(usize) -> Result<MarkedSetSample> + Sync,
{
    if replicates == 0 {
        return Err(Error::Precondition("no samples".into()));
    }
    let grid = make(0)?.grid;
    cfg.validate(&grid)?;
    let edge = cfg.edge_for(&grid)?;
    let offsets = cfg.offsets(&grid)?;
    let blocks: Vec<Block> = run_in_pool(cfg.workers, || {
        (0..replicates)
            .into_par_iter()
            .map(|i| {
                let s = make(i)?;
                if s.grid != grid {
                    return Err(Error::Precondition("all samples must share one grid".into()));
                }
                sample_block(&s, cfg, &offsets, edge)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(PairStatistics::from_blocks(cfg, blocks))
}

impl PairStatistics {
    fn from_blocks(cfg: &EstimatorConfig, blocks: Vec<Block>) -> Self {
        let n_lags = cfg.lags.len();
        let n_eps = cfg.eps.len();
        let replicates = blocks.len();
        let g = cfg.jackknife_groups.min(replicates);
        let mut groups = vec![Block::zero(n_eps, n_lags); g];
        for (i, b) in blocks.iter().enumerate() {
            groups[i * g / replicates].merge(b);
        }
        let mut total = Block::zero(n_eps, n_lags);
        for grp in &groups {
            total.merge(grp);
        }
        Self { lags: cfg.lags.clone(), eps: cfg.eps.clone(), replicates, total, groups }
    }

    fn idx(&self, ei: usize, li: usize) -> usize {
        ei * self.lags.len() + li
    }

    pub fn pair_sums(&self, ei: usize, li: usize) -> PairSums {
        self.total.pairs[self.idx(ei, li)]
    }

    pub fn mark_sums(&self, ei: usize) -> MarkSums {
        self.total.marks[ei]
    }

    /// Point estimate and grouped-jackknife standard error of a statistic of
    /// one `(eps, lag)` cell.
    fn jackknife<F>(&self, ei: usize, li: usize, stat: F) -> (Option<f64>, Option<f64>)
    where
        F: Fn(&PairSums, &MarkSums) -> Option<f64>,
    {
        let i = self.idx(ei, li);
        let est = stat(&self.total.pairs[i], &self.total.marks[ei]);
        let g = self.groups.len();
        if est.is_none() || g < 2 {
            return (est, None);
        }
        let mut loo = Vec::with_capacity(g);
        for grp in &self.groups {
            let p = self.total.pairs[i].minus(&grp.pairs[i]);
            let m = self.total.marks[ei].minus(&grp.marks[ei]);
            match stat(&p, &m) {
                Some(v) => loo.push(v),
                None => return (est, None),
            }
        }
        let mean = loo.iter().sum::<f64>() / g as f64;
        let var = loo.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() * (g - 1) as f64 / g as f64;
        (est, Some(var.sqrt()))
    }

    /// `kappa_f(r)` per `(eps, lag)`, in eps-major order. Cells without pairs
    /// are reported with `estimate = None`; a lag without pairs for every
    /// radius is an error.
    pub fn kappa(&self, tag: KappaTag) -> Result<Vec<KappaEstimate>> {
        self.check_pairs()?;
        let mut out = Vec::with_capacity(self.eps.len() * self.lags.len());
        for (ei, &eps) in self.eps.iter().enumerate() {
            for (li, &r) in self.lags.iter().enumerate() {
                let (estimate, stderr) = self.jackknife(ei, li, |p, _| {
                    p.kappas().map(|k| match tag {
                        KappaTag::E => k.e_pos,
                        KappaTag::C => k.c,
                        KappaTag::V => k.v_pos,
                    })
                });
                out.push(KappaEstimate { tag, r, eps, estimate, stderr, pairs: self.pair_sums(ei, li).n as u64 });
            }
        }
        Ok(out)
    }

    /// Plug-in characteristics per `(eps, lag)`; values that are undefined
    /// for the data (no pairs, vanishing variance, zero mean mark) are `None`.
    pub fn characteristics(&self) -> Result<Vec<CharacteristicEstimate>> {
        self.check_pairs()?;
        let kinds = [CurveKind::E, CurveKind::Cov, CurveKind::Gamma, CurveKind::Cor, CurveKind::Kmm];
        let mut out = Vec::new();
        for (ei, &eps) in self.eps.iter().enumerate() {
            for (li, &r) in self.lags.iter().enumerate() {
                for kind in kinds {
                    let (estimate, stderr) = self.jackknife(ei, li, |p, m| {
                        let k = p.kappas()?;
                        match kind {
                            CurveKind::E => Some(k.e_pos),
                            CurveKind::Cov => Some(k.cov()),
                            CurveKind::Gamma => Some(k.gamma()),
                            CurveKind::Cor => k.cor().ok(),
                            CurveKind::Kmm => k.kmm(m.mean()?).ok(),
                            CurveKind::SetCovariance => None,
                        }
                    });
                    out.push(CharacteristicEstimate {
                        kind,
                        r,
                        eps,
                        estimate,
                        stderr,
                        pairs: self.pair_sums(ei, li).n as u64,
                    });
                }
            }
        }
        Ok(out)
    }

    fn check_pairs(&self) -> Result<()> {
        for (li, &r) in self.lags.iter().enumerate() {
            if (0..self.eps.len()).all(|ei| self.pair_sums(ei, li).n == 0.0) {
                return Err(Error::NoPairs { lag: r });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub tag: KappaTag,
    pub r: f64,
    pub eps: f64,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub pairs: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicEstimate {
    pub kind: CurveKind,
    pub r: f64,
    pub eps: f64,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    pub pairs: u64,
}

/// Estimates `kappa_f` for one function over all lags and radii of `cfg`.
pub fn estimate_kappa(samples: &[MarkedSetSample], tag: KappaTag, cfg: &EstimatorConfig) -> Result<Vec<KappaEstimate>> {
    collect_statistics(samples, cfg)?.kappa(tag)
}

/// `kappa_e(+-h)`, `kappa_c(h)` and `kappa_v(+-h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaInputs {
    pub e_pos: f64,
    pub e_neg: f64,
    pub c: f64,
    pub v_pos: f64,
    pub v_neg: f64,
}

impl KappaInputs {
    pub fn cov(&self) -> f64 {
        self.c - self.e_pos * self.e_neg
    }

    pub fn gamma(&self) -> f64 {
        0.5 * (self.v_pos + self.v_neg) - self.c
    }

    pub fn cor(&self) -> Result<f64> {
        let a = self.v_pos - self.e_pos * self.e_pos;
        let b = self.v_neg - self.e_neg * self.e_neg;
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::DegenerateVariance(format!("conditional variances {a:e} and {b:e}")));
        }
        Ok(self.cov() / (a.sqrt() * b.sqrt()))
    }

    pub fn kmm(&self, mean_mark: f64) -> Result<f64> {
        if mean_mark == 0.0 || !mean_mark.is_finite() {
            return Err(Error::ZeroMeanMark);
        }
        Ok(self.c / (mean_mark * mean_mark))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characteristics {
    pub e: f64,
    pub gamma: f64,
    pub cov: f64,
    pub cor: f64,
    pub kmm: f64,
}

pub fn derive_characteristics(k: &KappaInputs, mean_mark: f64) -> Result<Characteristics> {
    Ok(Characteristics { e: k.e_pos, gamma: k.gamma(), cov: k.cov(), cor: k.cor()?, kmm: k.kmm(mean_mark)? })
}

/// Direction in which the estimates move as `eps` decreases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    DecreasingTowardZero,
    IncreasingTowardZero,
    Flat,
    NonMonotone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonDiagnostic {
    pub eps: Vec<f64>,
    pub values: Vec<f64>,
    /// Intercept at `eps = 0` of the least-squares line through the ladder.
    pub extrapolated: f64,
    pub slope: f64,
    pub trend: Trend,
}

/// Linear extrapolation of an eps-ladder to `eps = 0` with a trend flag.
pub fn epsilon_limit_diagnostic(eps: &[f64], values: &[f64]) -> Result<EpsilonDiagnostic> {
    if eps.len() != values.len() || eps.len() < 3 {
        return Err(Error::Precondition("at least three (eps, value) pairs are needed".into()));
    }
    if eps.iter().chain(values).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eps ladder".into()));
    }
    let mut pts: Vec<(f64, f64)> = eps.iter().copied().zip(values.iter().copied()).collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::Precondition("dilation radii must be distinct".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let extrapolated = my - slope * mx;
    let scale = pts.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let steps: Vec<f64> = pts.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let trend = if steps.iter().all(|d| d.abs() <= tol) {
        Trend::Flat
    } else if steps.iter().all(|&d| d <= tol) {
        Trend::DecreasingTowardZero
    } else if steps.iter().all(|&d| d >= -tol) {
        Trend::IncreasingTowardZero
    } else {
        Trend::NonMonotone
    };
    Ok(EpsilonDiagnostic {
        eps: pts.iter().map(|p| p.0).collect(),
        values: pts.iter().map(|p| p.1).collect(),
        extrapolated,
        slope,
        trend,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{segment_singleton_at, MarkRule, ModelDescriptor};

    fn full(marks: Vec<f64>, spacing: f64) -> MarkedSetSample {
        let grid = GridSpec::line(marks.len(), spacing, true).unwrap();
        MarkedSetSample::new(
            grid,
            vec![Membership::Solid; marks.len()],
            marks.into_iter().map(Some).collect(),
            ModelDescriptor::Custom { name: "test".into() },
            None,
        )
        .unwrap()
    }

    #[test]
    fn dilation_is_a_moving_maximum_on_full_sets() {
        let marks = vec![0.0, 3.0, 1.0, 2.0, -1.0, 5.0, 0.5, 0.25];
        let s = full(marks.clone(), 1.0);
        let d = dilated_mark_field(&s, 1.0).unwrap();
        let n = marks.len();
        for i in 0..n {
            let m = marks[(i + n - 1) % n].max(marks[i]).max(marks[(i + 1) % n]);
            assert_eq!(d[i], Some(m));
            assert!(d[i].unwrap() >= marks[i]);
        }
        assert!(dilated_mark_field(&s, 0.5).is_err());
    }

    #[test]
    fn dilation_reaches_isolated_singletons() {
        let grid = GridSpec::line(400, 0.01, true).unwrap();
        let s = segment_singleton_at(0.3, 0.5, &grid, MarkRule::Constant { segment: 1.0, singleton: 7.0 }).unwrap();
        let single = s.membership.iter().position(|m| *m == Membership::Isolated).unwrap();
        let d = dilated_mark_field(&s, 0.03).unwrap();
        for off in [0usize, 1, 2, 3] {
            assert_eq!(d[single + off], Some(7.0));
            assert_eq!(d[single - off], Some(7.0));
        }
        assert_eq!(d[single + 4], None);
        assert_eq!(undilated_mark_field(&s)[single], None);
    }

    #[test]
    fn random_field_e_is_the_mark_mean() {
        let marks: Vec<f64> = (0..64).map(|i| (f64::from(i) * 0.7).sin()).collect();
        let mean = marks.iter().sum::<f64>() / 64.0;
        let s = full(marks, 0.5);
        let est = estimate_kappa(&[s], KappaTag::E, &EstimatorConfig::undilated(vec![0.5, 2.0, 8.0])).unwrap();
        for k in est {
            assert!((k.estimate.unwrap() - mean).abs() < 1e-14);
            assert_eq!(k.pairs, 64);
        }
    }

    #[test]
    fn plug_in_identities() {
        let k = KappaInputs { e_pos: 0.7, e_neg: 0.7, c: 1.3, v_pos: 1.3, v_neg: 1.3 };
        assert_eq!(k.gamma(), 0.0);
        let k = KappaInputs { e_pos: 0.5, e_neg: 0.8, c: 0.4, v_pos: 1.0, v_neg: 2.0 };
        assert!(k.cov().abs() < 1e-16);
        assert!(matches!(k.kmm(0.0), Err(Error::ZeroMeanMark)));
        let flat = KappaInputs { e_pos: 1.0, e_neg: 1.0, c: 1.0, v_pos: 1.0, v_neg: 1.0 };
        assert!(matches!(flat.cor(), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn lag_validation() {
        let s = full(vec![1.0; 16], 0.5);
        assert!(estimate_kappa(&[s.clone()], KappaTag::C, &EstimatorConfig::undilated(vec![0.3])).is_err());
        assert!(estimate_kappa(&[s.clone()], KappaTag::C, &EstimatorConfig::undilated(vec![5.0])).is_err());
        assert!(estimate_kappa(&[s], KappaTag::C, &EstimatorConfig::new(vec![1.0], vec![0.25])).is_err());
    }

    #[test]
    fn no_pairs_is_reported() {
        let grid = GridSpec::line(8, 1.0, true).unwrap();
        let mut membership = vec![Membership::Outside; 8];
        let mut marks = vec![None; 8];
        membership[0] = Membership::Solid;
        marks[0] = Some(1.0);
        let s = MarkedSetSample::new(grid, membership, marks, ModelDescriptor::Custom { name: "one".into() }, None)
            .unwrap();
        let err = estimate_kappa(&[s], KappaTag::C, &EstimatorConfig::undilated(vec![2.0])).unwrap_err();
        assert_eq!(err, Error::NoPairs { lag: 2.0 });
    }

    #[test]
    fn epsilon_diagnostic_trends() {
        let d = epsilon_limit_diagnostic(&[0.3, 0.2, 0.1], &[1.3, 1.2, 1.1]).unwrap();
        assert_eq!(d.trend, Trend::DecreasingTowardZero);
        assert!((d.extrapolated - 1.0).abs() < 1e-12);
        let flat = epsilon_limit_diagnostic(&[0.1, 0.3, 0.2], &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(flat.trend, Trend::Flat);
        assert_eq!(flat.extrapolated, 2.0);
        assert!(epsilon_limit_diagnostic(&[0.1, 0.2], &[1.0, 1.0]).is_err());
        let wiggle = epsilon_limit_diagnostic(&[0.3, 0.2, 0.1], &[1.0, 2.0, 1.0]).unwrap();
        assert_eq!(wiggle.trend, Trend::NonMonotone);
    }
}
