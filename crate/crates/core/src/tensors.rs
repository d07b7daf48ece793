//! Pointwise algebra of the modified Einstein and Schouten tensors.
//!
//! Everything here acts on a [`PointData`] triple `(g, Ric, Scal)` and returns
//! symmetric bilinear forms in the same basis as `g`. Spectra, traces and
//! elementary symmetric functions are always taken relative to `g`, i.e. of
//! the endomorphism `g⁻¹h`.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureData;
use crate::error::{Error, Result};

/// Sign tolerance: `h > 0` means the smallest g-relative eigenvalue exceeds `TAU`.
pub const TAU: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    pub g: DMatrix<f64>,
    pub ric: DMatrix<f64>,
    pub scal: f64,
}

impl PointData {
    pub fn new(g: DMatrix<f64>, ric: DMatrix<f64>, scal: f64) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.ncols() });
        }
        if ric.nrows() != n || ric.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: ric.nrows() });
        }
        cholesky(&g)?;
        Ok(Self {
            g: symmetrize(&g),
            ric: symmetrize(&ric),
            scal,
        })
    }

    /// Scalar curvature taken as `tr(g⁻¹ Ric)`.
    pub fn consistent(g: DMatrix<f64>, ric: DMatrix<f64>) -> Result<Self> {
        let scal = trace_rel(&ric, &g)?;
        Self::new(g, ric, scal)
    }

    pub fn from_curvature(c: &CurvatureData) -> Self {
        Self {
            g: symmetrize(&c.metric),
            ric: symmetrize(&c.ricci),
            scal: c.scal,
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// g-relative Ricci eigenvalues, ascending.
    pub fn ricci_spectrum(&self) -> Vec<f64> {
        spectrum_rel_unchecked(&self.ric, &self.g)
    }

    /// `|Ric|² = tr((g⁻¹Ric)²)`.
    pub fn ricci_norm_sq(&self) -> f64 {
        norm_sq_rel_unchecked(&self.ric, &self.g)
    }

    /// `Scal − tr(g⁻¹Ric)`; zero for geometric data.
    pub fn consistency_defect(&self) -> f64 {
        self.scal - trace_rel_unchecked(&self.ric, &self.g)
    }
}

/// A symmetric bilinear form at a point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymBilinear(pub DMatrix<f64>);

impl SymBilinear {
    pub fn new(h: DMatrix<f64>) -> Self {
        SymBilinear(symmetrize(&h))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn scaled(&self, c: f64) -> SymBilinear {
        SymBilinear(&self.0 * c)
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &SymBilinear) -> f64 {
        (&self.0 - &other.0).amax()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }
}

fn symmetrize(h: &DMatrix<f64>) -> DMatrix<f64> {
    (h + h.transpose()) * 0.5
}

fn cholesky(g: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(g.clone()).ok_or_else(|| Error::NotPositiveDefinite {
        min_eig: SymmetricEigen::new(symmetrize(g)).eigenvalues.min(),
    })
}

/// `L⁻¹ h L⁻ᵀ` for `g = L Lᵀ`; its spectrum is the g-relative spectrum of `h`.
fn reduced(h: &DMatrix<f64>, chol: &Cholesky<f64, Dyn>) -> DMatrix<f64> {
    let l = chol.l();
    let a = l.solve_lower_triangular(h).expect("cholesky factor is invertible");
    let c = l
        .solve_lower_triangular(&a.transpose())
        .expect("cholesky factor is invertible");
    symmetrize(&c)
}

/// Solves `h v = ν g v`; eigenvalues ascending.
pub fn spectrum_rel(h: &SymBilinear, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    if h.dim() != g.nrows() {
        return Err(Error::DimensionMismatch { expected: g.nrows(), found: h.dim() });
    }
    let chol = cholesky(g)?;
    Ok(sorted_eigs(reduced(&h.0, &chol)))
}

pub(crate) fn spectrum_rel_unchecked(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Vec<f64> {
    let chol = cholesky(g).expect("metric is positive definite");
    sorted_eigs(reduced(h, &chol))
}

fn sorted_eigs(c: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn g_inv(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(cholesky(g)?.inverse())
}

fn trace_rel(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    Ok((g_inv(g)? * h).trace())
}

fn trace_rel_unchecked(h: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    trace_rel(h, g).expect("metric is positive definite")
}

fn norm_sq_rel_unchecked(h: &DMatrix<f64>, g: &DMatrix<f64>) -> f64 {
    let m = g_inv(g).expect("metric is positive definite") * h;
    (&m * &m).trace()
}

/// `g(h₁, h₂) = tr(g⁻¹h₁g⁻¹h₂)`.
pub fn pairing(h1: &DMatrix<f64>, h2: &DMatrix<f64>, g_inverse: &DMatrix<f64>) -> f64 {
    (g_inverse * h1 * g_inverse * h2).trace()
}

/// `Ein_k = Scal·g − k·Ric`.
pub fn ein_k(p: &PointData, k: f64) -> SymBilinear {
    SymBilinear::new(&p.g * p.scal - &p.ric * k)
}

/// `Sch_k = Ric − k·Scal·g`.
pub fn sch_k(p: &PointData, k: f64) -> SymBilinear {
    SymBilinear::new(&p.ric - &p.g * (k * p.scal))
}

/// Schouten tensor `A = (Ric − Scal/(2(n−1))·g)/(n−2)`.
pub fn schouten(p: &PointData) -> Result<SymBilinear> {
    let n = p.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall { required: 3, found: n });
    }
    let nf = n as f64;
    Ok(SymBilinear::new(
        (&p.ric - &p.g * (p.scal / (2.0 * (nf - 1.0)))) / (nf - 2.0),
    ))
}

/// `B = Ein_{n−1}`.
pub fn top_ein(p: &PointData) -> SymBilinear {
    ein_k(p, p.dim() as f64 - 1.0)
}

/// `B̄ = ((2−n)/n)·Scal·g + (n−1)·Ric`, sharing σ₁ and σ₂ with `B`.
pub fn aux_bbar(p: &PointData) -> Result<SymBilinear> {
    let n = p.dim();
    if n < 3 {
        return Err(Error::DimensionTooSmall { required: 3, found: n });
    }
    let nf = n as f64;
    Ok(SymBilinear::new(
        &p.g * ((2.0 - nf) / nf * p.scal) + &p.ric * (nf - 1.0),
    ))
}

/// `Ā = (3n−4)/(2n(n−1)(n−2)) · Ein_k` with `k = 2n(n−1)/(3n−4)`, sharing σ₁
/// and σ₂ with the Schouten tensor.
pub fn aux_abar(p: &PointData) -> Result<SymBilinear> {
    let n = p.dim();
    if n < 4 {
        return Err(Error::DimensionTooSmall { required: 4, found: n });
    }
    let nf = n as f64;
    let c = (3.0 * nf - 4.0) / (2.0 * nf * (nf - 1.0) * (nf - 2.0));
    Ok(ein_k(p, gamma2_schouten_k(n)).scaled(c))
}

/// `k = 2n(n−1)/(3n−4)`: Γ₂(Ein_k) > 0 exactly when Γ₂(A) > 0.
pub fn gamma2_schouten_k(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * nf * (nf - 1.0) / (3.0 * nf - 4.0)
}

/// `k = 2(n−1)²/(2n−3)`: here `t₁(Ein_k) = k(n−2)·A`.
pub fn schouten_positive_k(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * (nf - 1.0).powi(2) / (2.0 * nf - 3.0)
}

/// First Newton transformation `t₁(h) = σ₁(h)·g − h`.
pub fn newton_t1(h: &SymBilinear, g: &DMatrix<f64>) -> Result<SymBilinear> {
    let s1 = trace_rel(&h.0, g)?;
    Ok(SymBilinear::new(g * s1 - &h.0))
}

/// Elementary symmetric function σ₁ or σ₂ of the g-relative spectrum,
/// computed from traces of `g⁻¹h`.
pub fn sigma_i(h: &SymBilinear, g: &DMatrix<f64>, i: usize) -> Result<f64> {
    let m = g_inv(g)? * &h.0;
    match i {
        1 => Ok(m.trace()),
        2 => {
            let t = m.trace();
            Ok(0.5 * (t * t - (&m * &m).trace()))
        }
        _ => Err(Error::param("i", "only σ₁ and σ₂ are provided")),
    }
}

/// Sum of the `k` smallest g-relative eigenvalues.
pub fn lowest_sum(h: &SymBilinear, g: &DMatrix<f64>, k: usize) -> Result<f64> {
    let n = g.nrows();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must lie in 1..={n}, got {k}")));
    }
    Ok(spectrum_rel(h, g)?.iter().take(k).sum())
}

/// `h` is k-positive: its `k` smallest g-relative eigenvalues have positive sum.
pub fn k_positive(h: &SymBilinear, g: &DMatrix<f64>, k: usize) -> Result<bool> {
    Ok(lowest_sum(h, g, k)? > 0.0)
}

/// Smallest g-relative eigenvalue.
pub fn min_eig(h: &SymBilinear, g: &DMatrix<f64>) -> Result<f64> {
    Ok(spectrum_rel(h, g)?[0])
}

/// Positive definite in the tolerance sense.
pub fn is_positive(h: &SymBilinear, g: &DMatrix<f64>) -> Result<bool> {
    Ok(min_eig(h, g)? > TAU)
}

/// σ₁(h) > 0 and σ₂(h) > 0.
pub fn gamma2_positive(h: &SymBilinear, g: &DMatrix<f64>) -> Result<bool> {
    Ok(sigma_i(h, g, 1)? > 0.0 && sigma_i(h, g, 2)? > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    #[test]
    fn relative_spectrum_examples() {
        let g = DMatrix::identity(3, 3);
        assert_eq!(
            spectrum_rel(&SymBilinear::new(g.clone()), &g).unwrap(),
            vec![1.0, 1.0, 1.0]
        );
        let s = spectrum_rel(&SymBilinear::new(diag(&[1.0, 2.0])), &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(s, vec![1.0, 2.0]);
        // diag(2,2) against diag(1,2): ν = 2/1 and 2/2
        let s = spectrum_rel(&SymBilinear::new(diag(&[2.0, 2.0])), &diag(&[1.0, 2.0])).unwrap();
        assert!((s[0] - 1.0).abs() < 1e-15 && (s[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spectrum_rejects_non_spd() {
        let g = diag(&[1.0, -1.0]);
        assert!(matches!(
            spectrum_rel(&SymBilinear::new(g.clone()), &g),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn k_positivity_examples() {
        let g = DMatrix::identity(3, 3);
        assert!(k_positive(&SymBilinear::new(g.clone()), &g, 2).unwrap());
        assert!(!k_positive(&SymBilinear::new(diag(&[-3.0, 1.0, 1.0])), &g, 2).unwrap());
        assert!(k_positive(&SymBilinear::new(diag(&[-1.0, 2.0, 2.0])), &g, 2).unwrap());
        assert!(k_positive(&SymBilinear::new(g.clone()), &g, 4).is_err());
        assert!(k_positive(&SymBilinear::new(g.clone()), &g, 0).is_err());
    }

    #[test]
    fn newton_and_sigma_on_identity() {
        let g = DMatrix::identity(3, 3);
        let t = newton_t1(&SymBilinear::new(g.clone()), &g).unwrap();
        assert_eq!(t.0, &g * 2.0);
        let g4 = DMatrix::identity(4, 4);
        let h = SymBilinear::new(g4.clone());
        assert_eq!(sigma_i(&h, &g4, 1).unwrap(), 4.0);
        assert_eq!(sigma_i(&h, &g4, 2).unwrap(), 6.0);
        assert!(sigma_i(&h, &g4, 3).is_err());
    }

    #[test]
    fn gamma2_examples() {
        let g = DMatrix::identity(2, 2);
        assert!(gamma2_positive(&SymBilinear::new(g.clone()), &g).unwrap());
        let h = SymBilinear::new(diag(&[3.0, -1.0]));
        assert_eq!(sigma_i(&h, &g, 2).unwrap(), -3.0);
        assert!(!gamma2_positive(&h, &g).unwrap());
    }

    #[test]
    fn constant_curvature_ein_k() {
        // λ = 0.5, n = 4: Ric = 3λ g, Scal = 12λ
        let g = diag(&[1.0, 2.0, 0.5, 3.0]);
        let lambda = 0.5;
        let p = PointData::new(g.clone(), &g * (3.0 * lambda), 12.0 * lambda).unwrap();
        for k in [-2.0, 0.0, 1.5, 3.0] {
            let e = ein_k(&p, k);
            let expect = &g * (3.0 * (4.0 - k) * lambda);
            assert!((e.0 - expect).amax() < 1e-14);
        }
        assert_eq!(ein_k(&p, 0.0).0, &g * p.scal);
    }

    #[test]
    fn schouten_examples() {
        let g = DMatrix::identity(4, 4);
        let p = PointData::new(g.clone(), &g * 3.0, 12.0).unwrap();
        assert!((schouten(&p).unwrap().0 - &g * 0.5).amax() < 1e-15);
        let flat = PointData::new(g.clone(), DMatrix::zeros(4, 4), 0.0).unwrap();
        assert_eq!(schouten(&flat).unwrap().max_abs(), 0.0);
        let p2 = PointData::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2), 2.0).unwrap();
        assert!(schouten(&p2).is_err());
        assert!(aux_abar(&PointData::new(DMatrix::identity(3, 3), DMatrix::zeros(3, 3), 0.0).unwrap()).is_err());
        assert_eq!(sch_k(&p, 0.0).0, p.ric);
    }

    #[test]
    fn einstein_data_bbar_trace() {
        let g = diag(&[2.0, 1.0, 1.5, 0.7, 1.1]);
        let c = 0.8;
        let p = PointData::consistent(g.clone(), &g * c).unwrap();
        let b = aux_bbar(&p).unwrap();
        assert!((sigma_i(&b, &g, 1).unwrap() - p.scal).abs() < 1e-12);
    }
}
