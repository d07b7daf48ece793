//! Built-in metric families and their closed-form reference curvature.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::{set_sym, Axis, Chart, GenericSymmetric, MetricField, SymmetricModel};
use crate::error::{Error, Result};
use crate::hyperdual::{HyperDual, Real};
use crate::impl_symmetric_model;
use crate::tensors::PointData;

/// Largest dimension numerical charts are offered for.
pub const MAX_CHART_DIM: usize = 6;

// ---------------------------------------------------------------------------
// Metric models

/// Hyperspherical coordinates `(χ₁, …, χ_{m−1}, φ)` on the round `S^m`:
/// `g = R²(dχ₁² + sin²χ₁ dχ₂² + … + sin²χ₁⋯sin²χ_{m−1} dφ²)`.
#[derive(Clone, Debug)]
pub struct RoundSphere {
    pub dim: usize,
    pub radius: f64,
}

fn sphere_diag<S: Real>(angles: &[S], r2: S, diag: &mut [S]) {
    let mut acc = r2;
    for (i, d) in diag.iter_mut().enumerate() {
        if i > 0 {
            acc = acc * angles[i - 1].sin().sq();
        }
        *d = acc;
    }
}

fn sphere_axes(m: usize) -> Vec<Axis> {
    let mut axes: Vec<Axis> = (0..m.saturating_sub(1)).map(|_| Axis::interval(0.0, PI)).collect();
    axes.push(Axis::periodic(0.0, 2.0 * PI).symmetric());
    axes
}

impl GenericSymmetric for RoundSphere {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<S: Real>(&self, x: &[S], out: &mut [S]) {
        let n = self.dim;
        out.iter_mut().for_each(|v| *v = S::cst(0.0));
        let mut diag = vec![S::cst(0.0); n];
        sphere_diag(x, S::cst(self.radius * self.radius), &mut diag);
        for (i, d) in diag.into_iter().enumerate() {
            out[i * n + i] = d;
        }
    }
}
impl_symmetric_model!(RoundSphere);

/// Flat torus `δ`, optionally deformed by `bump·sin(x₁)cos(x₂)·S` with `S`
/// tridiagonal `(½, 1, ½)`.
#[derive(Clone, Debug)]
pub struct FlatTorus {
    pub dim: usize,
    pub bump: f64,
}

impl GenericSymmetric for FlatTorus {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<S: Real>(&self, x: &[S], out: &mut [S]) {
        let n = self.dim;
        out.iter_mut().for_each(|v| *v = S::cst(0.0));
        let profile = if n >= 2 { x[0].sin() * x[1].cos() } else { x[0].sin() };
        let b = profile * self.bump;
        for i in 0..n {
            out[i * n + i] = b + 1.0;
            if i + 1 < n {
                set_sym(out, n, i, i + 1, b * 0.5);
            }
        }
    }
}
impl_symmetric_model!(FlatTorus);

/// Poincaré ball `4/(1 − |x|²)²·δ`, curvature −1.
#[derive(Clone, Debug)]
pub struct PoincareBall {
    pub dim: usize,
}

impl GenericSymmetric for PoincareBall {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<S: Real>(&self, x: &[S], out: &mut [S]) {
        let n = self.dim;
        out.iter_mut().for_each(|v| *v = S::cst(0.0));
        let r2 = x.iter().fold(S::cst(0.0), |a, &v| a + v * v);
        let f = S::cst(4.0) / (-r2 + 1.0).sq();
        for i in 0..n {
            out[i * n + i] = f;
        }
    }
}
impl_symmetric_model!(PoincareBall);

/// Berger sphere in Euler angles `(θ, φ, ψ)`:
/// `g_t = ¼(dθ² + sin²θ dφ² + t(dψ + cosθ dφ)²)`; `t = 1` is the unit round `S³`
/// and `∂_ψ` spans the Hopf fibres.
#[derive(Clone, Debug)]
pub struct BergerS3 {
    pub t: f64,
}

impl GenericSymmetric for BergerS3 {
    fn dim(&self) -> usize {
        3
    }
    fn eval<S: Real>(&self, x: &[S], out: &mut [S]) {
        let (s, c) = (x[0].sin(), x[0].cos());
        let t = self.t;
        out.iter_mut().for_each(|v| *v = S::cst(0.0));
        out[0] = S::cst(0.25);
        out[4] = (s.sq() + c.sq() * t) * 0.25;
        set_sym(out, 3, 1, 2, c * (0.25 * t));
        out[8] = S::cst(0.25 * t);
    }
}
impl_symmetric_model!(BergerS3);

/// Block-diagonal product of factor models.
#[derive(Clone, Debug)]
pub struct ProductModel {
    factors: Vec<Arc<dyn SymmetricModel>>,
    dim: usize,
}

impl ProductModel {
    pub fn new(factors: Vec<Arc<dyn SymmetricModel>>) -> Self {
        let dim = factors.iter().map(|f| f.dim()).sum();
        Self { factors, dim }
    }

    fn eval_with<S: Copy + Default>(&self, x: &[S], out: &mut [S], f: impl Fn(&dyn SymmetricModel, &[S], &mut [S])) {
        let n = self.dim;
        out.iter_mut().for_each(|v| *v = S::default());
        let mut off = 0;
        for factor in &self.factors {
            let m = factor.dim();
            let mut block = vec![S::default(); m * m];
            f(factor.as_ref(), &x[off..off + m], &mut block);
            for i in 0..m {
                for j in 0..m {
                    out[(off + i) * n + off + j] = block[i * m + j];
                }
            }
            off += m;
        }
    }
}

impl SymmetricModel for ProductModel {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_f64(&self, x: &[f64], out: &mut [f64]) {
        self.eval_with(x, out, |m, x, o| m.eval_f64(x, o))
    }
    fn eval_hyper(&self, x: &[HyperDual], out: &mut [HyperDual]) {
        self.eval_with(x, out, |m, x, o| m.eval_hyper(x, o))
    }
}

/// Ambient geometry a tube lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TubeAmbient {
    /// Unit round sphere; the core curve is a great circle of length 2π.
    RoundSphere,
    /// Euclidean space around a straight segment of length 2π with periodic ends.
    Flat,
}

impl TubeAmbient {
    fn warps<S: Real>(self, rho: S) -> (S, S) {
        match self {
            TubeAmbient::RoundSphere => (rho.cos(), rho.sin()),
            TubeAmbient::Flat => (S::cst(1.0), rho),
        }
    }
}

/// Fermi coordinates `(s, ρ, angles on S^{n−2})` around the core geodesic:
/// `g = c(ρ)² ds² + dρ² + sn(ρ)² g_{S^{n−2}}`.
#[derive(Clone, Debug)]
pub struct FermiTube {
    pub dim: usize,
    pub ambient: TubeAmbient,
}

impl GenericSymmetric for FermiTube {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<S: Real>(&self, x: &[S], out: &mut [S]) {
        let n = self.dim;
        out.iter_mut().for_each(|v| *v = S::cst(0.0));
        let (c, sn) = self.ambient.warps(x[1]);
        out[0] = c.sq();
        out[n + 1] = S::cst(1.0);
        let mut diag = vec![S::cst(0.0); n - 2];
        sphere_diag(&x[2..], sn.sq(), &mut diag);
        for (i, d) in diag.into_iter().enumerate() {
            out[(i + 2) * n + i + 2] = d;
        }
    }
}
impl_symmetric_model!(FermiTube);

/// The distance-`r` hypersurface of a [`FermiTube`], coordinates `(s, angles)`:
/// `c(r)² ds² + sn(r)² g_{S^{n−2}}`.
#[derive(Clone, Debug)]
pub struct TubeBoundary {
    pub ambient_dim: usize,
    pub ambient: TubeAmbient,
    pub r: f64,
}

impl GenericSymmetric for TubeBoundary {
    fn dim(&self) -> usize {
        self.ambient_dim - 1
    }
    fn eval<S: Real>(&self, x: &[S], out: &mut [S]) {
        let m = self.ambient_dim - 1;
        out.iter_mut().for_each(|v| *v = S::cst(0.0));
        let (c, sn) = self.ambient.warps(self.r);
        out[0] = S::cst(c * c);
        let mut diag = vec![S::cst(0.0); m - 1];
        sphere_diag(&x[1..], S::cst(sn * sn), &mut diag);
        for (i, d) in diag.into_iter().enumerate() {
            out[(i + 1) * m + i + 1] = d;
        }
    }
}
impl_symmetric_model!(TubeBoundary);

// ---------------------------------------------------------------------------
// Field constructors

/// Axes and model of a product factor (charts themselves need dimension ≥ 2).
#[derive(Clone, Debug)]
pub struct Factor {
    pub axes: Vec<Axis>,
    pub model: Arc<dyn SymmetricModel>,
}

impl Factor {
    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        check_dim("dim", dim, 1, MAX_CHART_DIM)?;
        check_positive("radius", radius)?;
        Ok(Self {
            axes: sphere_axes(dim),
            model: Arc::new(RoundSphere { dim, radius }),
        })
    }

    pub fn torus(dim: usize, period: f64, bump: f64) -> Result<Self> {
        check_dim("dim", dim, 1, MAX_CHART_DIM)?;
        check_positive("period", period)?;
        if !(bump.is_finite() && bump.abs() < 0.45) {
            return Err(Error::param("bump", "must satisfy |bump| < 0.45 to stay positive definite"));
        }
        let axes = (0..dim)
            .map(|i| {
                let a = Axis::periodic(0.0, period);
                if bump == 0.0 || i >= 2 {
                    a.symmetric()
                } else {
                    a
                }
            })
            .collect();
        if bump != 0.0 && (period - 2.0 * PI).abs() > 1e-15 {
            return Err(Error::param("period", "bumped tori use period 2π"));
        }
        let model: Arc<dyn SymmetricModel> = Arc::new(FlatTorus { dim, bump });
        Ok(Self { axes, model })
    }

    pub fn hyperbolic(dim: usize, coord_radius: f64) -> Result<Self> {
        check_dim("dim", dim, 1, MAX_CHART_DIM)?;
        if !(coord_radius > 0.0 && coord_radius < 1.0) {
            return Err(Error::param("radius", "coordinate radius must lie in (0, 1)"));
        }
        let half = coord_radius / (dim as f64).sqrt();
        Ok(Self {
            axes: (0..dim).map(|_| Axis::interval(-half, half)).collect(),
            model: Arc::new(PoincareBall { dim }),
        })
    }

    pub fn into_field(self, label: &str) -> Result<MetricField> {
        MetricField::new(Chart::new(self.axes)?, self.model, label)
    }
}

pub fn product_field(factors: Vec<Factor>, label: &str) -> Result<MetricField> {
    let axes: Vec<Axis> = factors.iter().flat_map(|f| f.axes.iter().copied()).collect();
    let models = factors.into_iter().map(|f| f.model).collect();
    MetricField::new(Chart::new(axes)?, Arc::new(ProductModel::new(models)), label)
}

pub fn sphere_field(dim: usize, radius: f64) -> Result<MetricField> {
    check_dim("dim", dim, 2, MAX_CHART_DIM)?;
    Factor::sphere(dim, radius)?.into_field("sphere")
}

pub fn torus_field(dim: usize, bump: f64) -> Result<MetricField> {
    check_dim("dim", dim, 2, MAX_CHART_DIM)?;
    Factor::torus(dim, 2.0 * PI, bump)?.into_field("torus")
}

/// Torus with arbitrary period and no deformation.
pub fn flat_torus_field(dim: usize, period: f64) -> Result<MetricField> {
    check_dim("dim", dim, 2, MAX_CHART_DIM)?;
    Factor::torus(dim, period, 0.0)?.into_field("torus")
}

pub fn hyperbolic_field(dim: usize, coord_radius: f64) -> Result<MetricField> {
    check_dim("dim", dim, 2, MAX_CHART_DIM)?;
    Factor::hyperbolic(dim, coord_radius)?.into_field("hyperbolic")
}

/// Canonical variation of the Hopf fibration `S³ → S²`: fibre directions of
/// the unit round metric multiplied by `t`.
pub fn canonical_variation(t: f64) -> Result<MetricField> {
    check_positive("t", t)?;
    let chart = Chart::new(vec![
        Axis::interval(0.0, PI),
        Axis::periodic(0.0, 2.0 * PI).symmetric(),
        Axis::periodic(0.0, 4.0 * PI).symmetric(),
    ])?;
    MetricField::new(chart, Arc::new(BergerS3 { t }), "berger")
}

/// Solid tube of radius `r` in Fermi coordinates.
pub fn fermi_tube_field(dim: usize, ambient: TubeAmbient, r: f64) -> Result<MetricField> {
    check_dim("dim", dim, 3, MAX_CHART_DIM)?;
    check_positive("r", r)?;
    let mut axes = vec![Axis::periodic(0.0, 2.0 * PI).symmetric(), Axis::interval(0.0, r)];
    axes.extend(sphere_axes(dim - 2));
    MetricField::new(Chart::new(axes)?, Arc::new(FermiTube { dim, ambient }), "fermi_tube")
}

/// The distance-`r` hypersurface around the core curve.
pub fn tube_boundary_field(ambient_dim: usize, ambient: TubeAmbient, r: f64) -> Result<MetricField> {
    check_dim("dim", ambient_dim, 3, MAX_CHART_DIM + 1)?;
    check_positive("r", r)?;
    let mut axes = vec![Axis::periodic(0.0, 2.0 * PI).symmetric()];
    axes.extend(sphere_axes(ambient_dim - 2));
    MetricField::new(
        Chart::new(axes)?,
        Arc::new(TubeBoundary { ambient_dim, ambient, r }),
        "tube_boundary",
    )
}

fn check_dim(name: &str, v: usize, lo: usize, hi: usize) -> Result<()> {
    if v < lo || v > hi {
        return Err(Error::param(name, format!("must lie in {lo}..={hi}, got {v}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::param(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Reference data and descriptors

/// Closed-form Ricci spectrum (relative to g) with multiplicities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    pub dim: usize,
    /// `(eigenvalue, multiplicity)`.
    pub ricci: Vec<(f64, usize)>,
    pub scal: f64,
}

impl ReferenceData {
    pub fn new(ricci: Vec<(f64, usize)>) -> Self {
        let dim = ricci.iter().map(|r| r.1).sum();
        let scal = ricci.iter().map(|&(v, m)| v * m as f64).sum();
        Self { dim, ricci, scal }
    }

    /// Einstein data with scalar curvature `rho`: Ric = (ρ/n)·g, so
    /// `Ein_k = ρ(n−k)/n · g`.
    pub fn einstein(dim: usize, rho: f64) -> Self {
        Self::new(vec![(rho / dim as f64, dim)])
    }

    /// Ricci eigenvalues with multiplicity, ascending.
    pub fn ricci_spectrum(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .ricci
            .iter()
            .flat_map(|&(e, m)| std::iter::repeat_n(e, m))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `Ein_k` eigenvalues `Scal − k·ρ` with the multiplicities of `ρ`.
    pub fn ein_k_eigs(&self, k: f64) -> Vec<(f64, usize)> {
        self.ricci.iter().map(|&(r, m)| (self.scal - k * r, m)).collect()
    }

    /// Orthonormal-frame point data: `g = I`, `Ric = diag(ρ)`.
    pub fn point_data(&self) -> PointData {
        let n = self.dim;
        let diag = DVector::from_vec(self.ricci_spectrum());
        PointData {
            g: DMatrix::identity(n, n),
            ric: DMatrix::from_diagonal(&diag),
            scal: self.scal,
        }
    }
}

/// Berger sphere `S^{2n+1}` with fibre factor `t`: `ρ₁ = 2nt` once and
/// `ρ₂ = 2n + 2 − 2t` with multiplicity `2n`.
pub fn berger_reference(n: usize, t: f64) -> ReferenceData {
    let nf = n as f64;
    ReferenceData::new(vec![(2.0 * nf * t, 1), (2.0 * nf + 2.0 - 2.0 * t, 2 * n)])
}

/// `S^{q−1} × ℝ^{n−q+1}` with the unit sphere factor.
pub fn cylinder_reference(q: usize, n: usize) -> ReferenceData {
    let mut r = vec![];
    if q > 1 {
        r.push(((q as f64) - 2.0, q - 1));
    }
    r.push((0.0, n - q + 1));
    ReferenceData::new(r)
}

/// `S^p × H^q` with sectional curvatures `+1` and `−1`.
pub fn spaceform_product_reference(p: usize, q: usize) -> ReferenceData {
    ReferenceData::new(vec![(p as f64 - 1.0, p), (-(q as f64 - 1.0), q)])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Sphere,
    Torus,
    Hyperbolic,
    Berger,
    Product,
    CylinderModel,
    SpaceformProduct,
}

impl FamilyName {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyName::Sphere => "sphere",
            FamilyName::Torus => "torus",
            FamilyName::Hyperbolic => "hyperbolic",
            FamilyName::Berger => "berger",
            FamilyName::Product => "product",
            FamilyName::CylinderModel => "cylinder_model",
            FamilyName::SpaceformProduct => "spaceform_product",
        }
    }
}

impl std::str::FromStr for FamilyName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sphere" => FamilyName::Sphere,
            "torus" => FamilyName::Torus,
            "hyperbolic" => FamilyName::Hyperbolic,
            "berger" => FamilyName::Berger,
            "product" => FamilyName::Product,
            "cylinder_model" | "cylinder" => FamilyName::CylinderModel,
            "spaceform_product" => FamilyName::SpaceformProduct,
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }
}

/// `{"family": "...", "params": {...}, "grid": N}`.
///
/// Parameters by family (defaults in brackets):
/// - `sphere`: `dim` [2], `radius` [1]
/// - `torus`: `dim` [3], `bump` [0]
/// - `hyperbolic`: `dim` [2], `radius` [0.9] (coordinate radius of the ball chart)
/// - `berger`: `n` [1] (sphere `S^{2n+1}`), `t` (required)
/// - `product`: `S^p(λ) × X^q` with `p` [2], `lambda` [1], `q` [2], `kappa` [0]
///   selecting `X` flat torus (0), unit sphere (1) or hyperbolic ball (−1), `bump` [0]
/// - `cylinder_model`: `q`, `dim` (closed form only)
/// - `spaceform_product`: `p`, `q` (closed form only)
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    pub family: FamilyName,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

impl FamilyDescriptor {
    pub fn new(family: FamilyName) -> Self {
        Self { family, params: BTreeMap::new(), grid: None }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    fn real(&self, name: &str, default: Option<f64>) -> Result<f64> {
        match self.params.get(name).copied().or(default) {
            Some(v) if v.is_finite() => Ok(v),
            Some(v) => Err(Error::param(name, format!("must be finite, got {v}"))),
            None => Err(Error::param(name, "required")),
        }
    }

    fn int(&self, name: &str, default: Option<usize>) -> Result<usize> {
        let v = self.real(name, default.map(|d| d as f64))?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::param(name, format!("must be a non-negative integer, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let known: &[&str] = match self.family {
            FamilyName::Sphere => &["dim", "radius"],
            FamilyName::Torus => &["dim", "bump"],
            FamilyName::Hyperbolic => &["dim", "radius"],
            FamilyName::Berger => &["n", "t"],
            FamilyName::Product => &["p", "lambda", "q", "kappa", "bump"],
            FamilyName::CylinderModel => &["q", "dim"],
            FamilyName::SpaceformProduct => &["p", "q"],
        };
        if let Some(bad) = self.params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::param(bad, format!("not a parameter of `{}`", self.family.as_str())));
        }
        if let Some(g) = self.grid {
            if g < 2 {
                return Err(Error::param("grid", "need at least 2 points per axis"));
            }
        }
        Ok(())
    }
}

/// A built family: numerical field where available, closed-form data where known.
#[derive(Clone, Debug)]
pub struct Family {
    pub descriptor: FamilyDescriptor,
    pub field: Option<MetricField>,
    pub reference: Option<ReferenceData>,
}

pub fn make_family(d: &FamilyDescriptor) -> Result<Family> {
    d.validate()?;
    let (field, reference) = match d.family {
        FamilyName::Sphere => {
            let dim = d.int("dim", Some(2))?;
            let r = d.real("radius", Some(1.0))?;
            let field = sphere_field(dim, r)?;
            let rho = (dim as f64 - 1.0) / (r * r);
            (Some(field), Some(ReferenceData::new(vec![(rho, dim)])))
        }
        FamilyName::Torus => {
            let dim = d.int("dim", Some(3))?;
            let bump = d.real("bump", Some(0.0))?;
            let field = torus_field(dim, bump)?;
            let reference = (bump == 0.0).then(|| ReferenceData::new(vec![(0.0, dim)]));
            (Some(field), reference)
        }
        FamilyName::Hyperbolic => {
            let dim = d.int("dim", Some(2))?;
            let r = d.real("radius", Some(0.9))?;
            let field = hyperbolic_field(dim, r)?;
            (Some(field), Some(ReferenceData::new(vec![(-(dim as f64 - 1.0), dim)])))
        }
        FamilyName::Berger => {
            let n = d.int("n", Some(1))?;
            let t = d.real("t", None)?;
            check_positive("t", t)?;
            if n == 0 {
                return Err(Error::param("n", "must be at least 1"));
            }
            let field = if n == 1 { Some(canonical_variation(t)?) } else { None };
            (field, Some(berger_reference(n, t)))
        }
        FamilyName::Product => {
            let p = d.int("p", Some(2))?;
            let lambda = d.real("lambda", Some(1.0))?;
            let q = d.int("q", Some(2))?;
            let kappa = d.real("kappa", Some(0.0))?;
            let bump = d.real("bump", Some(0.0))?;
            if p + q > MAX_CHART_DIM {
                return Err(Error::param("q", format!("p + q must not exceed {MAX_CHART_DIM}")));
            }
            let second = match kappa {
                0.0 => Factor::torus(q, 2.0 * PI, bump)?,
                1.0 => Factor::sphere(q, 1.0)?,
                -1.0 => Factor::hyperbolic(q, 0.9)?,
                _ => return Err(Error::param("kappa", "must be 0, 1 or -1")),
            };
            if bump != 0.0 && kappa != 0.0 {
                return Err(Error::param("bump", "only applies to the torus factor"));
            }
            let field = product_field(vec![Factor::sphere(p, lambda)?, second], "product")?;
            let reference = (bump == 0.0).then(|| {
                ReferenceData::new(vec![
                    ((p as f64 - 1.0) / (lambda * lambda), p),
                    (kappa * (q as f64 - 1.0), q),
                ])
            });
            (Some(field), reference)
        }
        FamilyName::CylinderModel => {
            let q = d.int("q", None)?;
            let n = d.int("dim", None)?;
            if q < 2 || q > n {
                return Err(Error::param("q", format!("must satisfy 2 <= q <= dim, got q={q}, dim={n}")));
            }
            (None, Some(cylinder_reference(q, n)))
        }
        FamilyName::SpaceformProduct => {
            let p = d.int("p", None)?;
            let q = d.int("q", None)?;
            if p == 0 || q == 0 || p + q < 2 {
                return Err(Error::param("p", "p and q must be positive"));
            }
            (None, Some(spaceform_product_reference(p, q)))
        }
    };
    Ok(Family {
        descriptor: d.clone(),
        field,
        reference,
    })
}
