//! Coordinate charts, metric fields, metric derivatives and chart quadrature.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperdual::{HyperDual, Real};

/// Smallest eigenvalue a metric may have before it is rejected as non-SPD.
pub const SPD_FLOOR: f64 = 1e-12;

/// One coordinate axis of a chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    /// The range is one full period of the coordinate.
    pub periodic: bool,
    /// The metric does not depend on this coordinate.
    pub symmetric: bool,
}

impl Axis {
    pub fn interval(min: f64, max: f64) -> Self {
        Self { min, max, periodic: false, symmetric: false }
    }

    pub fn periodic(min: f64, max: f64) -> Self {
        Self { min, max, periodic: true, symmetric: false }
    }

    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    axes: Vec<Axis>,
}

impl Chart {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.len() < 2 {
            return Err(Error::InvalidChart(format!(
                "dimension must be at least 2, got {}",
                axes.len()
            )));
        }
        for (i, a) in axes.iter().enumerate() {
            if !(a.min.is_finite() && a.max.is_finite() && a.max > a.min) {
                return Err(Error::InvalidChart(format!(
                    "axis {i} has empty or non-finite range [{}, {}]",
                    a.min, a.max
                )));
            }
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(x)
                .all(|(a, &v)| v.is_finite() && (a.periodic || (v >= a.min && v <= a.max)))
    }

    /// Strictly inside every non-periodic range.
    pub fn is_interior(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(x)
                .all(|(a, &v)| v.is_finite() && (a.periodic || (v > a.min && v < a.max)))
    }
}

/// A smooth field of symmetric matrices on a coordinate domain, evaluable in
/// plain floats and in hyper-dual numbers. Implementations write the full
/// row-major `dim × dim` matrix into `out`.
pub trait SymmetricModel: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn eval_f64(&self, x: &[f64], out: &mut [f64]);
    fn eval_hyper(&self, x: &[HyperDual], out: &mut [HyperDual]);
}

/// Models written once over any [`Real`]; hook them up with
/// [`impl_symmetric_model!`](crate::impl_symmetric_model).
pub trait GenericSymmetric: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn eval<S: Real>(&self, x: &[S], out: &mut [S]);
}

#[macro_export]
macro_rules! impl_symmetric_model {
    ($t:ty) => {
        impl $crate::chart::SymmetricModel for $t {
            fn dim(&self) -> usize {
                <$t as $crate::chart::GenericSymmetric>::dim(self)
            }
            fn eval_f64(&self, x: &[f64], out: &mut [f64]) {
                <$t as $crate::chart::GenericSymmetric>::eval(self, x, out)
            }
            fn eval_hyper(
                &self,
                x: &[$crate::hyperdual::HyperDual],
                out: &mut [$crate::hyperdual::HyperDual],
            ) {
                <$t as $crate::chart::GenericSymmetric>::eval(self, x, out)
            }
        }
    };
}

/// Writes `v` at `(i, j)` and `(j, i)`.
#[inline]
pub fn set_sym<S: Copy>(out: &mut [S], n: usize, i: usize, j: usize, v: S) {
    out[i * n + j] = v;
    out[j * n + i] = v;
}

/// A metric: a chart together with a model producing `g_ij` on it.
#[derive(Clone, Debug)]
pub struct MetricField {
    chart: Chart,
    model: Arc<dyn SymmetricModel>,
    label: String,
}

/// Metric values and partial derivatives at one point.
///
/// `d1[(k·n + i)·n + j] = ∂_k g_ij`, `d2[((k·n + l)·n + i)·n + j] = ∂_k ∂_l g_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricJet {
    pub dim: usize,
    pub g: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Option<Vec<f64>>,
}

impl MetricJet {
    #[inline]
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.dim + j]
    }

    #[inline]
    pub fn dg(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.d1[(k * n + i) * n + j]
    }

    /// Second partial; panics when the jet was built with order 1.
    #[inline]
    pub fn ddg(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let n = self.dim;
        self.d2.as_ref().expect("second derivatives not computed")[((k * n + l) * n + i) * n + j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DiffEngine {
    /// Exact to rounding.
    #[default]
    HyperDual,
    /// Central differences with one Richardson step.
    CentralDifference,
}

impl MetricField {
    pub fn new(chart: Chart, model: Arc<dyn SymmetricModel>, label: impl Into<String>) -> Result<Self> {
        if chart.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.dim(),
                found: model.dim(),
            });
        }
        Ok(Self {
            chart,
            model,
            label: label.into(),
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn model(&self) -> &Arc<dyn SymmetricModel> {
        &self.model
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    /// Raw model evaluation without domain or SPD checks.
    pub fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        self.model.eval_f64(x, &mut out);
        out
    }

    pub fn evaluate_metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if !self.chart.contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let n = self.dim();
        let raw = self.eval_raw(x);
        let g = DMatrix::from_row_slice(n, n, &raw);
        for i in 0..n {
            for j in 0..i {
                if g[(i, j)] != g[(j, i)] {
                    return Err(Error::InvalidChart(format!(
                        "model returned a non-symmetric matrix at {x:?}"
                    )));
                }
            }
        }
        let min_eig = SymmetricEigen::new(g.clone()).eigenvalues.min();
        if !(min_eig > SPD_FLOOR) {
            return Err(Error::NotPositiveDefinite { min_eig });
        }
        Ok(g)
    }

    pub fn metric_derivatives(&self, x: &[f64], order: usize) -> Result<MetricJet> {
        self.metric_derivatives_with(x, order, DiffEngine::HyperDual)
    }

    pub fn metric_derivatives_with(&self, x: &[f64], order: usize, engine: DiffEngine) -> Result<MetricJet> {
        if !(order == 1 || order == 2) {
            return Err(Error::UnsupportedOrder(order));
        }
        if !self.chart.is_interior(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        match engine {
            DiffEngine::HyperDual => Ok(self.jet_hyperdual(x, order)),
            DiffEngine::CentralDifference => Ok(self.jet_central(x, order)),
        }
    }

    fn jet_hyperdual(&self, x: &[f64], order: usize) -> MetricJet {
        let n = self.dim();
        let nn = n * n;
        let mut g = vec![0.0; nn];
        let mut d1 = vec![0.0; n * nn];
        let mut d2 = if order == 2 { Some(vec![0.0; nn * nn]) } else { None };
        let mut xs: Vec<HyperDual> = x.iter().map(|&v| HyperDual::constant(v)).collect();
        let mut out = vec![HyperDual::default(); nn];
        for a in 0..n {
            let last = if order == 2 { n } else { a + 1 };
            for b in a..last {
                xs[a].e1 = 1.0;
                xs[b].e2 = 1.0;
                self.model.eval_hyper(&xs, &mut out);
                xs[a].e1 = 0.0;
                xs[b].e2 = 0.0;
                for (ij, v) in out.iter().enumerate() {
                    if a == 0 && b == 0 {
                        g[ij] = v.re;
                    }
                    if b == a {
                        d1[a * nn + ij] = v.e1;
                    }
                    if let Some(d2) = d2.as_mut() {
                        d2[(a * n + b) * nn + ij] = v.e12;
                        d2[(b * n + a) * nn + ij] = v.e12;
                    }
                }
            }
        }
        MetricJet { dim: n, g, d1, d2 }
    }

    fn jet_central(&self, x: &[f64], order: usize) -> MetricJet {
        let n = self.dim();
        let nn = n * n;
        let g = self.eval_raw(x);
        let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let h1 = f64::EPSILON.cbrt() * scale;
        let h2 = f64::EPSILON.powf(0.25) * scale;
        let eval_at = |shift: &[(usize, f64)]| {
            let mut y = x.to_vec();
            for &(k, s) in shift {
                y[k] += s;
            }
            self.eval_raw(&y)
        };
        // D(h) = [f(x+h) - f(x-h)] / 2h, combined as (4 D(h/2) - D(h)) / 3.
        let first = |k: usize, h: f64| -> Vec<f64> {
            let p = eval_at(&[(k, h)]);
            let m = eval_at(&[(k, -h)]);
            p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        };
        let mut d1 = vec![0.0; n * nn];
        for k in 0..n {
            let dh = first(k, h1);
            let dh2 = first(k, h1 / 2.0);
            for ij in 0..nn {
                d1[k * nn + ij] = (4.0 * dh2[ij] - dh[ij]) / 3.0;
            }
        }
        let d2 = (order == 2).then(|| {
            let second = |k: usize, l: usize, h: f64| -> Vec<f64> {
                if k == l {
                    let p = eval_at(&[(k, h)]);
                    let m = eval_at(&[(k, -h)]);
                    (0..nn).map(|ij| (p[ij] - 2.0 * g[ij] + m[ij]) / (h * h)).collect()
                } else {
                    let pp = eval_at(&[(k, h), (l, h)]);
                    let pm = eval_at(&[(k, h), (l, -h)]);
                    let mp = eval_at(&[(k, -h), (l, h)]);
                    let mm = eval_at(&[(k, -h), (l, -h)]);
                    (0..nn)
                        .map(|ij| (pp[ij] - pm[ij] - mp[ij] + mm[ij]) / (4.0 * h * h))
                        .collect()
                }
            };
            let mut d2 = vec![0.0; nn * nn];
            for k in 0..n {
                for l in k..n {
                    let a = second(k, l, h2);
                    let b = second(k, l, h2 / 2.0);
                    for ij in 0..nn {
                        let v = (4.0 * b[ij] - a[ij]) / 3.0;
                        d2[(k * n + l) * nn + ij] = v;
                        d2[(l * n + k) * nn + ij] = v;
                    }
                }
            }
            d2
        });
        MetricJet { dim: n, g, d1, d2 }
    }

    /// `√det g` at `x`. Near coordinate singularities the metric can fall
    /// below [`SPD_FLOOR`] while its density is still meaningful, so only
    /// positive definiteness itself is required here.
    pub fn volume_density(&self, x: &[f64]) -> Result<f64> {
        if !self.chart.contains(x) {
            return Err(Error::OutOfDomain { point: x.to_vec() });
        }
        let n = self.dim();
        let g = DMatrix::from_row_slice(n, n, &self.eval_raw(x));
        match g.clone().cholesky() {
            Some(l) => Ok(l.l().diagonal().product()),
            None => Err(Error::NotPositiveDefinite {
                min_eig: SymmetricEigen::new(g).eigenvalues.min(),
            }),
        }
    }

    /// `∫ density · √det g` over the grid.
    pub fn integrate<F>(&self, grid: &GridSample, density: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        grid.integrate(|x| Ok(density(x)? * self.volume_density(x)?))
    }
}

/// Nodes and weights along one axis.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    /// Trapezoid on periodic axes, Gauss–Legendre elsewhere.
    Quadrature,
    /// Uniform interior lattice; nested under doubling.
    Lattice,
}

/// Tensor-product sample of a chart. Points are generated on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSample {
    chart: Chart,
    per_axis: usize,
    kind: GridKind,
    reduce_symmetric: bool,
    rules: Vec<AxisRule>,
}

/// Default points per axis.
pub const DEFAULT_GRID: usize = 48;

impl GridSample {
    pub fn new(chart: &Chart, per_axis: usize, kind: GridKind, reduce_symmetric: bool) -> Result<Self> {
        if per_axis < 2 {
            return Err(Error::param("grid", "need at least 2 points per axis"));
        }
        let rules = chart
            .axes()
            .iter()
            .map(|a| axis_rule(a, per_axis, kind, reduce_symmetric))
            .collect();
        Ok(Self {
            chart: chart.clone(),
            per_axis,
            kind,
            reduce_symmetric,
            rules,
        })
    }

    /// Full quadrature grid, for arbitrary densities.
    pub fn quadrature(chart: &Chart, per_axis: usize) -> Result<Self> {
        Self::new(chart, per_axis, GridKind::Quadrature, false)
    }

    /// Quadrature collapsing axes the metric does not depend on. Exact only
    /// for densities built from the metric alone.
    pub fn quadrature_reduced(chart: &Chart, per_axis: usize) -> Result<Self> {
        Self::new(chart, per_axis, GridKind::Quadrature, true)
    }

    /// Nested sampling lattice for pointwise extrema of metric invariants.
    pub fn lattice(chart: &Chart, per_axis: usize) -> Result<Self> {
        Self::new(chart, per_axis, GridKind::Lattice, true)
    }

    /// Same kind of grid with twice the points per axis.
    pub fn refined(&self) -> Self {
        Self::new(&self.chart, self.per_axis * 2, self.kind, self.reduce_symmetric)
            .expect("refinement of a valid grid")
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.rules.len()
    }

    pub fn rules(&self) -> &[AxisRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.iter().map(|r| r.nodes.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes point `idx` into `x` and returns its weight.
    pub fn point(&self, mut idx: usize, x: &mut [f64]) -> f64 {
        let mut w = 1.0;
        for (d, r) in self.rules.iter().enumerate().rev() {
            let m = r.nodes.len();
            let i = idx % m;
            idx /= m;
            x[d] = r.nodes[i];
            w *= r.weights[i];
        }
        w
    }

    pub fn points(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        (0..self.len()).map(move |i| {
            let mut x = vec![0.0; self.dim()];
            let w = self.point(i, &mut x);
            (x, w)
        })
    }

    /// `Σ w_p f(p)` with a reduction order fixed by the grid alone.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        deterministic_sum(self.len(), |i| {
            let mut x = vec![0.0; self.dim()];
            let w = self.point(i, &mut x);
            Ok(w * f(&x)?)
        })
    }
}

fn axis_rule(a: &Axis, m: usize, kind: GridKind, reduce: bool) -> AxisRule {
    let len = a.length();
    if reduce && a.symmetric {
        let node = if a.periodic { a.min } else { 0.5 * (a.min + a.max) };
        return AxisRule {
            nodes: vec![node],
            weights: vec![len],
        };
    }
    match (kind, a.periodic) {
        (GridKind::Quadrature, true) | (GridKind::Lattice, true) => AxisRule {
            nodes: (0..m).map(|i| a.min + len * i as f64 / m as f64).collect(),
            weights: vec![len / m as f64; m],
        },
        (GridKind::Quadrature, false) => {
            let (x, w) = gauss_legendre(m);
            AxisRule {
                nodes: x.iter().map(|t| a.min + 0.5 * len * (t + 1.0)).collect(),
                weights: w.iter().map(|wi| 0.5 * len * wi).collect(),
            }
        }
        (GridKind::Lattice, false) => AxisRule {
            nodes: (1..m).map(|i| a.min + len * i as f64 / m as f64).collect(),
            weights: vec![len / m as f64; m - 1],
        },
    }
}

/// Gauss–Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = mf * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// Pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

const REDUCTION_CHUNK: usize = 1024;

/// Sums `f(0) + … + f(len-1)` in parallel. Chunk boundaries and the
/// combination tree depend only on `len`, so the result is bit-identical for
/// any worker count.
pub fn deterministic_sum<F>(len: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let chunks = len.div_ceil(REDUCTION_CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCTION_CHUNK;
            let hi = (lo + REDUCTION_CHUNK).min(len);
            let terms = (lo..hi).map(&f).collect::<Result<Vec<f64>>>()?;
            Ok(pairwise_sum(&terms))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&partial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        // degree 15 is the limit for 8 nodes
        let q: f64 = x.iter().zip(&w).map(|(t, wi)| wi * t.powi(14)).sum();
        assert!((q - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn trapezoid_exact_for_trig_polynomials() {
        let chart = Chart::new(vec![Axis::periodic(0.0, 2.0 * PI), Axis::periodic(0.0, 2.0 * PI)]).unwrap();
        let grid = GridSample::quadrature(&chart, 12).unwrap();
        let v = grid
            .integrate(|x| Ok((3.0 * x[0]).cos().powi(2) * (2.0 * x[1]).sin().powi(2) + 1.0))
            .unwrap();
        assert!((v - (PI * PI + 4.0 * PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn lattice_is_nested() {
        let chart = Chart::new(vec![Axis::interval(0.0, PI), Axis::periodic(0.0, 2.0 * PI)]).unwrap();
        let coarse = GridSample::lattice(&chart, 6).unwrap();
        let fine = coarse.refined();
        let fine_pts: Vec<Vec<f64>> = fine.points().map(|p| p.0).collect();
        for (p, _) in coarse.points() {
            assert!(fine_pts
                .iter()
                .any(|q| q.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-14)));
        }
    }

    #[test]
    fn sum_is_independent_of_thread_count() {
        let f = |i: usize| Ok(((i as f64) * 0.37).sin() / (1.0 + i as f64));
        let a = deterministic_sum(50_000, f).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| deterministic_sum(50_000, f).unwrap());
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn chart_rejects_bad_ranges() {
        assert!(Chart::new(vec![Axis::interval(0.0, 1.0)]).is_err());
        assert!(Chart::new(vec![Axis::interval(1.0, 1.0), Axis::interval(0.0, 1.0)]).is_err());
    }
}
