//! Global integral checks: total scalar curvature and its gradient, the
//! dimension-four Gauss–Bonnet integrand, and tubes around great circles.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{GenericSymmetric, GridSample, MetricField, SymmetricModel};
use crate::curvature::{curvature_at, riemann_norm_sq, weyl_norm_sq};
use crate::error::{Error, Result};
use crate::families::{fermi_tube_field, sphere_field, torus_field, tube_boundary_field, TubeAmbient};
use crate::hyperdual::{HyperDual, Real};
use crate::impl_symmetric_model;
use crate::tensors::{ein_k, pairing, sigma_i, spectrum_rel_unchecked, PointData};

fn inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone().try_inverse().ok_or(Error::SingularMetric)
}

fn g_trace(h: &DMatrix<f64>, ginv: &DMatrix<f64>) -> f64 {
    ginv.component_mul(h).sum()
}

/// `∫ Scal μ_g`.
pub fn total_scalar(field: &MetricField, grid: &GridSample) -> Result<f64> {
    field.integrate(grid, |x| Ok(curvature_at(field, x)?.scal))
}

/// `∫ μ_g`.
pub fn volume(field: &MetricField, grid: &GridSample) -> Result<f64> {
    field.integrate(grid, |_| Ok(1.0))
}

/// `⟨h₁, h₂⟩_α = ∫ (g(h₁, h₂) − α tr_g h₁ tr_g h₂) μ_g`.
pub fn modified_inner<A, B>(field: &MetricField, grid: &GridSample, alpha: f64, h1: A, h2: B) -> Result<f64>
where
    A: Fn(&[f64]) -> Result<DMatrix<f64>> + Sync,
    B: Fn(&[f64]) -> Result<DMatrix<f64>> + Sync,
{
    let n = field.dim();
    field.integrate(grid, |x| {
        let ginv = inverse(&DMatrix::from_row_slice(n, n, &field.eval_raw(x)))?;
        let (a, b) = (h1(x)?, h2(x)?);
        Ok(pairing(&a, &b, &ginv) - alpha * g_trace(&a, &ginv) * g_trace(&b, &ginv))
    })
}

/// A model's values as matrices, for [`modified_inner`].
pub fn model_tensor(model: &Arc<dyn SymmetricModel>) -> impl Fn(&[f64]) -> Result<DMatrix<f64>> + Sync + '_ {
    move |x| {
        let n = model.dim();
        let mut out = vec![0.0; n * n];
        model.eval_f64(x, &mut out);
        Ok(DMatrix::from_row_slice(n, n, &out))
    }
}

/// `α = (k − 2)/(2(k − n))`, the weight that turns `(1/k) Ein_k` into the
/// gradient of the total scalar curvature.
pub fn gradient_alpha(k: f64, n: usize) -> f64 {
    (k - 2.0) / (2.0 * (k - n as f64))
}

// ---------------------------------------------------------------------------
// Perturbations

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TrigMode {
    wave: Vec<i32>,
    phase: f64,
    /// Row-major symmetric coefficient matrix.
    coeff: Vec<f64>,
}

/// `h(x) = Σ_m C_m cos(⟨w_m, x⟩ + φ_m)` with integer wave vectors, so `h` is
/// smooth and 2π-periodic in every coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTensorField {
    dim: usize,
    modes: Vec<TrigMode>,
}

impl TrigTensorField {
    /// Random field with `modes` terms, wave numbers in `−max_wave..=max_wave`
    /// and coefficients uniform in `[−amplitude, amplitude]`.
    pub fn random(dim: usize, modes: usize, max_wave: i32, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..modes)
            .map(|_| {
                let wave = (0..dim).map(|_| rng.gen_range(-max_wave..=max_wave)).collect();
                let phase = rng.gen_range(0.0..2.0 * PI);
                let mut coeff = vec![0.0; dim * dim];
                for i in 0..dim {
                    for j in i..dim {
                        let v = rng.gen_range(-amplitude..=amplitude);
                        coeff[i * dim + j] = v;
                        coeff[j * dim + i] = v;
                    }
                }
                TrigMode { wave, phase, coeff }
            })
            .collect();
        Self { dim, modes }
    }
}

impl GenericSymmetric for TrigTensorField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<S: Real>(&self, x: &[S], out: &mut [S]) {
        out.iter_mut().for_each(|v| *v = S::cst(0.0));
        for m in &self.modes {
            let mut arg = S::cst(m.phase);
            for (xi, &w) in x.iter().zip(&m.wave) {
                arg = arg + *xi * f64::from(w);
            }
            let c = arg.cos();
            for (o, &a) in out.iter_mut().zip(&m.coeff) {
                *o = *o + c * a;
            }
        }
    }
}
impl_symmetric_model!(TrigTensorField);

#[derive(Debug)]
struct PerturbedModel {
    base: Arc<dyn SymmetricModel>,
    h: Arc<dyn SymmetricModel>,
    eps: f64,
}

impl SymmetricModel for PerturbedModel {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval_f64(&self, x: &[f64], out: &mut [f64]) {
        let mut hv = vec![0.0; out.len()];
        self.base.eval_f64(x, out);
        self.h.eval_f64(x, &mut hv);
        for (o, v) in out.iter_mut().zip(hv) {
            *o += self.eps * v;
        }
    }
    fn eval_hyper(&self, x: &[HyperDual], out: &mut [HyperDual]) {
        let mut hv = vec![HyperDual::default(); out.len()];
        self.base.eval_hyper(x, out);
        self.h.eval_hyper(x, &mut hv);
        for (o, v) in out.iter_mut().zip(hv) {
            *o = *o + v * self.eps;
        }
    }
}

/// The line of metrics `g + εh` through a base field.
#[derive(Clone, Debug)]
pub struct PerturbedFamily {
    base: MetricField,
    h: Arc<dyn SymmetricModel>,
}

impl PerturbedFamily {
    pub fn new(base: MetricField, h: Arc<dyn SymmetricModel>) -> Result<Self> {
        if h.dim() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), found: h.dim() });
        }
        Ok(Self { base, h })
    }

    pub fn base(&self) -> &MetricField {
        &self.base
    }

    pub fn direction(&self) -> &Arc<dyn SymmetricModel> {
        &self.h
    }

    pub fn at(&self, eps: f64) -> Result<MetricField> {
        let model = PerturbedModel {
            base: self.base.model().clone(),
            h: self.h.clone(),
            eps,
        };
        MetricField::new(self.base.chart().clone(), Arc::new(model), format!("{}+eps*h", self.base.label()))
    }

    /// Largest `ε` with `g + εh` positive definite at every grid point for all
    /// `|ε'| < ε`: the reciprocal of the largest `|eigenvalue|` of h relative to g.
    pub fn eps_max(&self, grid: &GridSample) -> Result<f64> {
        let n = self.base.dim();
        let h = model_tensor(&self.h);
        let worst = (0..grid.len())
            .map(|i| {
                let mut x = vec![0.0; n];
                grid.point(i, &mut x);
                let g = self.base.evaluate_metric(&x)?;
                let s = spectrum_rel_unchecked(&h(&x)?, &g);
                Ok(s[0].abs().max(s[n - 1].abs()))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(if worst == 0.0 { f64::INFINITY } else { 1.0 / worst })
    }
}

/// Step used for the derivative of the total scalar curvature along `h`.
pub const GRADIENT_EPS: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub k: f64,
    pub alpha: f64,
    /// `F'_g h` by central differences with one Richardson step.
    pub derivative: f64,
    /// `(1/k) ⟨Ein_k, h⟩_α`.
    pub pairing: f64,
    pub residual: f64,
    pub eps: f64,
    pub eps_max: f64,
}

/// `d/dε ∫ Scal(g + εh) μ` at `ε = 0`.
pub fn scalar_derivative(pf: &PerturbedFamily, grid: &GridSample, eps: f64) -> Result<f64> {
    let f = |e: f64| total_scalar(&pf.at(e)?, grid);
    let d = |e: f64| -> Result<f64> { Ok((f(e)? - f(-e)?) / (2.0 * e)) };
    let (coarse, fine) = (d(eps)?, d(0.5 * eps)?);
    Ok((4.0 * fine - coarse) / 3.0)
}

pub fn gradient_check(pf: &PerturbedFamily, k: f64, grid: &GridSample) -> Result<GradientCheck> {
    Ok(gradient_checks(pf, &[k], grid)?.remove(0))
}

/// [`gradient_check`] for several `k`; the derivative of F does not depend on
/// `k` and is computed once.
pub fn gradient_checks(pf: &PerturbedFamily, ks: &[f64], grid: &GridSample) -> Result<Vec<GradientCheck>> {
    let n = pf.base.dim();
    for &k in ks {
        if !(k > 0.0 && k < n as f64) {
            return Err(Error::param("k", format!("must lie in (0, {n}), got {k}")));
        }
    }
    let eps_max = pf.eps_max(grid)?;
    if GRADIENT_EPS >= 0.5 * eps_max {
        return Err(Error::param(
            "h",
            format!("g + eps*h loses positivity for eps = {GRADIENT_EPS} (eps_max = {eps_max})"),
        ));
    }
    let derivative = scalar_derivative(pf, grid, GRADIENT_EPS)?;
    let field = &pf.base;
    let h = model_tensor(&pf.h);
    ks.iter()
        .map(|&k| {
            let alpha = gradient_alpha(k, n);
            let ein = |x: &[f64]| -> Result<DMatrix<f64>> {
                let p = PointData::from_curvature(&curvature_at(field, x)?);
                Ok(ein_k(&p, k).0)
            };
            let pairing = modified_inner(field, grid, alpha, ein, &h)? / k;
            Ok(GradientCheck {
                k,
                alpha,
                derivative,
                pairing,
                residual: (derivative - pairing).abs() / derivative.abs().max(1.0),
                eps: GRADIENT_EPS,
                eps_max,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Dimension four

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnet {
    /// `(1/8π²) ∫ (‖W‖² + σ₂(Ein₃)/9) μ`.
    pub chi: f64,
    pub weyl_integral: f64,
    pub sigma2_integral: f64,
    pub volume: f64,
    /// `∫ |R|² μ`.
    pub riemann_integral: f64,
    /// `8π²χ + ∫ (|Ric|² − Scal²/4) μ`, equal to `riemann_integral`.
    pub riemann_rhs: f64,
}

fn require_dim4(field: &MetricField) -> Result<()> {
    if field.dim() != 4 {
        return Err(Error::DimensionRequired { required: 4, found: field.dim() });
    }
    Ok(())
}

pub fn gauss_bonnet(field: &MetricField, grid: &GridSample) -> Result<GaussBonnet> {
    require_dim4(field)?;
    let part = |which: u8| {
        field.integrate(grid, |x| {
            let c = curvature_at(field, x)?;
            let p = PointData::from_curvature(&c);
            match which {
                0 => weyl_norm_sq(&c),
                1 => sigma_i(&ein_k(&p, 3.0), &p.g, 2),
                2 => Ok(riemann_norm_sq(&c)),
                _ => Ok(p.ricci_norm_sq() - 0.25 * p.scal * p.scal),
            }
        })
    };
    let weyl_integral = part(0)?;
    let sigma2_integral = part(1)?;
    let riemann_integral = part(2)?;
    let defect = part(3)?;
    let chi = (weyl_integral + sigma2_integral / 9.0) / (8.0 * PI * PI);
    Ok(GaussBonnet {
        chi,
        weyl_integral,
        sigma2_integral,
        volume: volume(field, grid)?,
        riemann_integral,
        riemann_rhs: 8.0 * PI * PI * chi + defect,
    })
}

pub fn gauss_bonnet_chi(field: &MetricField, grid: &GridSample) -> Result<f64> {
    Ok(gauss_bonnet(field, grid)?.chi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignatureBound {
    pub weyl_integral: f64,
    /// `(1/4π²) ∫ ‖W‖²`, an upper bound for `|p₁|`.
    pub p1_bound: f64,
    pub chi: f64,
    /// `2χ − p1_bound`.
    pub two_chi_minus_bound: f64,
    /// `(1/36π²) ∫ σ₂(Ein₃)`, equal to `two_chi_minus_bound` by Gauss–Bonnet.
    pub sigma2_term: f64,
}

pub fn signature_bound_report(field: &MetricField, grid: &GridSample) -> Result<SignatureBound> {
    let gb = gauss_bonnet(field, grid)?;
    let p1_bound = gb.weyl_integral / (4.0 * PI * PI);
    Ok(SignatureBound {
        weyl_integral: gb.weyl_integral,
        p1_bound,
        chi: gb.chi,
        two_chi_minus_bound: 2.0 * gb.chi - p1_bound,
        sigma2_term: gb.sigma2_integral / (36.0 * PI * PI),
    })
}

// ---------------------------------------------------------------------------
// Tubes

/// Volume of the unit round `S^k`.
pub fn unit_sphere_volume(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => unit_sphere_volume(k - 2) * 2.0 * PI / (k as f64 - 1.0),
    }
}

/// Volume of the round `S^k` of radius `r`.
pub fn sphere_volume(k: usize, r: f64) -> f64 {
    unit_sphere_volume(k) * r.powi(k as i32)
}

/// Volume of the Euclidean `m`-ball of radius `r`.
pub fn ball_volume(m: usize, r: f64) -> f64 {
    unit_sphere_volume(m - 1) * r.powi(m as i32) / m as f64
}

/// Tube of radius `r` around a closed geodesic of length 2π in an
/// `dim`-dimensional ambient space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec {
    pub ambient: TubeAmbient,
    pub dim: usize,
    pub r: f64,
    pub grid: usize,
}

impl TubeSpec {
    pub fn new(ambient: TubeAmbient, dim: usize, r: f64) -> Self {
        Self { ambient, dim, r, grid: crate::chart::DEFAULT_GRID }
    }

    pub fn focal_radius(&self) -> f64 {
        match self.ambient {
            TubeAmbient::RoundSphere => 0.5 * PI,
            TubeAmbient::Flat => f64::INFINITY,
        }
    }

    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < self.focal_radius()) {
            return Err(Error::param(
                "r",
                format!("tube radius must lie in (0, {}), got {}", self.focal_radius(), self.r),
            ));
        }
        if self.grid < 2 {
            return Err(Error::param("grid", "need at least 2 nodes per axis"));
        }
        Ok(())
    }

    /// `∫_σ Ein_k(σ', σ') dt`, from the curvature of the ambient chart along
    /// the core geodesic.
    pub fn curve_integral(&self, k: f64) -> Result<f64> {
        let n = self.dim;
        let (field, base) = match self.ambient {
            TubeAmbient::RoundSphere => (sphere_field(n, 1.0)?, vec![0.5 * PI; n]),
            TubeAmbient::Flat => (torus_field(n, 0.0)?, vec![0.0; n]),
        };
        // The curve runs along the last axis of the sphere chart and the first of the torus.
        let axis = match self.ambient {
            TubeAmbient::RoundSphere => n - 1,
            TubeAmbient::Flat => 0,
        };
        let m = self.grid;
        let mut total = 0.0;
        for i in 0..m {
            let mut x = base.clone();
            x[axis] = self.length() * i as f64 / m as f64;
            let c = curvature_at(&field, &x)?;
            let p = PointData::from_curvature(&c);
            let speed2 = c.metric[(axis, axis)];
            total += ein_k(&p, k).0[(axis, axis)] / speed2 * speed2.sqrt();
        }
        Ok(total * self.length() / m as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeVolume {
    pub dim: usize,
    pub r: f64,
    pub length: f64,
    /// `∫_σ Ein₋₁(σ', σ') dt`.
    pub ein_minus1_integral: f64,
    /// Measure of the distance-`r` hypersurface, by quadrature.
    pub numeric: f64,
    /// `ω_{n−2}(r) L`.
    pub flat_reference: f64,
    /// `ω_{n−2}(r) (L − r²/(6(n+1)) ∫ Ein₋₁)`.
    pub hotelling_prediction: f64,
    /// `ω_{n−2}(r) (L − r²/(6(n−1)) ∫ Ein₋₁)`, the expansion of the hypersurface measure.
    pub hypersurface_expansion: f64,
    /// `(flat_reference − numeric)/r³`.
    pub deficit_over_r3: f64,
    /// Volume of the solid tube, by quadrature.
    pub solid_numeric: f64,
    /// `V_{n−1}(r) L`, the Euclidean ball cross-section times the length.
    pub solid_flat_reference: f64,
    /// `V_{n−1}(r) (L − r²/(6(n+1)) ∫ Ein₋₁)`.
    pub solid_hotelling_prediction: f64,
}

pub fn tube_volume(spec: &TubeSpec) -> Result<TubeVolume> {
    spec.validate()?;
    let (n, r, l) = (spec.dim, spec.r, spec.length());
    let boundary = tube_boundary_field(n, spec.ambient, r)?;
    let numeric = volume(&boundary, &GridSample::quadrature_reduced(boundary.chart(), spec.grid)?)?;
    let solid = fermi_tube_field(n, spec.ambient, r)?;
    let solid_numeric = volume(&solid, &GridSample::quadrature_reduced(solid.chart(), spec.grid)?)?;
    let ein = spec.curve_integral(-1.0)?;
    let nf = n as f64;
    let shell = sphere_volume(n - 2, r);
    let ball = ball_volume(n - 1, r);
    let flat_reference = shell * l;
    Ok(TubeVolume {
        dim: n,
        r,
        length: l,
        ein_minus1_integral: ein,
        numeric,
        flat_reference,
        hotelling_prediction: shell * (l - r * r / (6.0 * (nf + 1.0)) * ein),
        hypersurface_expansion: shell * (l - r * r / (6.0 * (nf - 1.0)) * ein),
        deficit_over_r3: (flat_reference - numeric) / r.powi(3),
        solid_numeric,
        solid_flat_reference: ball * l,
        solid_hotelling_prediction: ball * (l - r * r / (6.0 * (nf + 1.0)) * ein),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TubeTotalScalar {
    pub dim: usize,
    pub r: f64,
    /// `k = −(n+2)/(n−4)`.
    pub k: f64,
    /// `∫_σ Ein_k(σ', σ') dt`.
    pub ein_integral: f64,
    /// Total scalar curvature of the distance-`r` hypersurface, by quadrature.
    pub numeric: f64,
    /// `(n−2)(n−3) r^{n−4} ω_{n−2}(1) L`.
    pub flat_reference: f64,
    /// `ω_{n−2}(1) r^{n−4} ((n−3)(n−2) L − r²(n−3)/(6(n−1)(n−4)) ∫ Ein_k)`.
    pub hotelling_prediction: f64,
    /// `(flat_reference − numeric)/r^{n−2}`.
    pub deficit_scaled: f64,
}

pub fn tube_total_scalar(spec: &TubeSpec) -> Result<TubeTotalScalar> {
    spec.validate()?;
    let n = spec.dim;
    if n < 5 {
        return Err(Error::DimensionTooSmall { required: 5, found: n });
    }
    let (r, l, nf) = (spec.r, spec.length(), n as f64);
    let boundary = tube_boundary_field(n, spec.ambient, r)?;
    let numeric = total_scalar(&boundary, &GridSample::quadrature_reduced(boundary.chart(), spec.grid)?)?;
    let k = -(nf + 2.0) / (nf - 4.0);
    let ein = spec.curve_integral(k)?;
    let unit = unit_sphere_volume(n - 2);
    let rn4 = r.powi(n as i32 - 4);
    let flat_reference = (nf - 2.0) * (nf - 3.0) * rn4 * unit * l;
    Ok(TubeTotalScalar {
        dim: n,
        r,
        k,
        ein_integral: ein,
        numeric,
        flat_reference,
        hotelling_prediction: unit
            * rn4
            * ((nf - 3.0) * (nf - 2.0) * l - r * r * (nf - 3.0) / (6.0 * (nf - 1.0) * (nf - 4.0)) * ein),
        deficit_scaled: (flat_reference - numeric) / r.powi(n as i32 - 2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{product_field, Factor};

    #[test]
    fn sphere_volumes() {
        assert!((unit_sphere_volume(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((unit_sphere_volume(4) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
        assert!((ball_volume(2, 0.5) - PI * 0.25).abs() < 1e-15);
        assert!((ball_volume(3, 1.0) - 4.0 * PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn total_scalar_of_spheres() {
        let s2 = sphere_field(2, 1.0).unwrap();
        let v = total_scalar(&s2, &GridSample::quadrature_reduced(s2.chart(), 24).unwrap()).unwrap();
        assert!((v - 8.0 * PI).abs() < 1e-10, "{v}");
        let s4 = sphere_field(4, 1.0).unwrap();
        let v = total_scalar(&s4, &GridSample::quadrature_reduced(s4.chart(), 24).unwrap()).unwrap();
        assert!((v - 32.0 * PI * PI).abs() < 1e-8, "{v}");
    }

    #[test]
    fn inner_product_of_metric_with_itself() {
        let t = torus_field(3, 0.2).unwrap();
        let grid = GridSample::quadrature(t.chart(), 16).unwrap();
        let g = model_tensor(t.model());
        let alpha = 0.1;
        let lhs = modified_inner(&t, &grid, alpha, &g, &g).unwrap();
        let vol = volume(&t, &grid).unwrap();
        assert!((lhs - (3.0 - alpha * 9.0) * vol).abs() < 1e-9 * vol);
    }

    #[test]
    fn flat_torus_gradient_is_zero() {
        let base = torus_field(3, 0.0).unwrap();
        let h: Arc<dyn SymmetricModel> = Arc::new(TrigTensorField::random(3, 3, 1, 0.1, 7));
        let pf = PerturbedFamily::new(base, h).unwrap();
        let grid = GridSample::quadrature(pf.base().chart(), 8).unwrap();
        let c = gradient_check(&pf, 2.0, &grid).unwrap();
        assert!(c.derivative.abs() < 1e-8 && c.pairing.abs() < 1e-12, "{c:?}");
    }

    #[test]
    fn gradient_rejects_k_out_of_range() {
        let base = torus_field(3, 0.1).unwrap();
        let h: Arc<dyn SymmetricModel> = Arc::new(TrigTensorField::random(3, 2, 1, 0.1, 1));
        let pf = PerturbedFamily::new(base, h).unwrap();
        let grid = GridSample::quadrature(pf.base().chart(), 4).unwrap();
        assert!(gradient_check(&pf, 3.0, &grid).is_err());
        assert!(gradient_check(&pf, 0.0, &grid).is_err());
    }

    #[test]
    fn gauss_bonnet_product_of_spheres() {
        let f = product_field(vec![Factor::sphere(2, 1.0).unwrap(), Factor::sphere(2, 1.0).unwrap()], "s2s2")
            .unwrap();
        let gb = gauss_bonnet(&f, &GridSample::quadrature_reduced(f.chart(), 24).unwrap()).unwrap();
        assert!((gb.chi - 4.0).abs() < 1e-8, "{gb:?}");
        assert!((gb.weyl_integral - 64.0 * PI * PI / 3.0).abs() < 1e-7);
        assert!((gb.riemann_integral - gb.riemann_rhs).abs() < 1e-7);
        assert!(gauss_bonnet(&sphere_field(3, 1.0).unwrap(), &GridSample::quadrature(
            sphere_field(3, 1.0).unwrap().chart(),
            4
        )
        .unwrap())
        .is_err());
    }

    #[test]
    fn tube_curve_integrals() {
        let s = TubeSpec::new(TubeAmbient::RoundSphere, 3, 0.1);
        assert!((s.curve_integral(-1.0).unwrap() - 16.0 * PI).abs() < 1e-10);
        let s5 = TubeSpec::new(TubeAmbient::RoundSphere, 5, 0.1);
        assert!((s5.curve_integral(-7.0).unwrap() - 96.0 * PI).abs() < 1e-9);
        let flat = TubeSpec::new(TubeAmbient::Flat, 3, 0.7);
        assert!(flat.curve_integral(-1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn flat_tube_matches_reference() {
        let t = tube_volume(&TubeSpec::new(TubeAmbient::Flat, 4, 0.7)).unwrap();
        assert!((t.numeric - t.flat_reference).abs() < 1e-10 * t.flat_reference);
        assert!((t.solid_numeric - t.solid_flat_reference).abs() < 1e-10 * t.solid_flat_reference);
    }

    #[test]
    fn tube_radius_must_stay_below_focal() {
        assert!(tube_volume(&TubeSpec::new(TubeAmbient::RoundSphere, 3, 1.6)).is_err());
        assert!(tube_total_scalar(&TubeSpec::new(TubeAmbient::RoundSphere, 5, 0.5 * PI)).is_err());
        assert!(tube_total_scalar(&TubeSpec::new(TubeAmbient::RoundSphere, 4, 0.1)).is_err());
    }
}
