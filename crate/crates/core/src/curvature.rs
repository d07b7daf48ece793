//! Christoffel symbols, Riemann, Ricci, scalar and Weyl curvature at a point.
//!
//! Conventions: `R^i_jkl = ∂_k Γ^i_lj − ∂_l Γ^i_kj + Γ^i_km Γ^m_lj − Γ^i_lm Γ^m_kj`,
//! `Ric_jl = R^i_jil`, and the lowered tensor `R_ijkl = g_im R^m_jkl`. With
//! these the unit round sphere has `R_ijkl = g_ik g_jl − g_il g_jk` and
//! positive scalar curvature.

use nalgebra::DMatrix;

use crate::chart::{MetricField, MetricJet};
use crate::error::{Error, Result};

/// Dense rank-4 array with `n⁴` entries, row-major in `(i, j, k, l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let p = self.idx(i, j, k, l);
        self.data[p] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `T_ijkl T^ijkl` with every index raised by `ginv`.
    pub fn full_contraction(&self, ginv: &DMatrix<f64>) -> f64 {
        let n = self.n;
        let raised = raise_all(self, ginv);
        (0..n * n * n * n).map(|p| self.data[p] * raised.data[p]).sum()
    }
}

fn raise_all(t: &Tensor4, ginv: &DMatrix<f64>) -> Tensor4 {
    let n = t.n;
    let mut cur = t.clone();
    for slot in 0..4 {
        let mut next = Tensor4::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut s = 0.0;
                        for m in 0..n {
                            let (a, b, c, d) = match slot {
                                0 => (m, j, k, l),
                                1 => (i, m, k, l),
                                2 => (i, j, m, l),
                                _ => (i, j, k, m),
                            };
                            let row = [i, j, k, l][slot];
                            s += ginv[(row, m)] * cur.get(a, b, c, d);
                        }
                        next.set(i, j, k, l, s);
                    }
                }
            }
        }
        cur = next;
    }
    cur
}

/// Kulkarni–Nomizu product `(h ⊙ k)_ijkl = h_ik k_jl + h_jl k_ik − h_il k_jk − h_jk k_il`.
pub fn kulkarni_nomizu(h: &DMatrix<f64>, k: &DMatrix<f64>) -> Tensor4 {
    let n = h.nrows();
    let mut t = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let v = h[(i, a)] * k[(j, b)] + h[(j, b)] * k[(i, a)]
                        - h[(i, b)] * k[(j, a)]
                        - h[(j, a)] * k[(i, b)];
                    t.set(i, j, a, b, v);
                }
            }
        }
    }
    t
}

#[derive(Clone, Debug)]
pub struct CurvatureData {
    pub dim: usize,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// `Γ^i_jk` at `[(i·n + j)·n + k]`.
    pub christoffel: Vec<f64>,
    pub riemann: Tensor4,
    pub ricci: DMatrix<f64>,
    pub scal: f64,
    /// Zero for `n < 4`.
    pub weyl: Tensor4,
}

impl CurvatureData {
    #[inline]
    pub fn gamma(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.christoffel[(i * n + j) * n + k]
    }

    /// Eigenvalues of Ric relative to g, ascending.
    pub fn ricci_spectrum(&self) -> Vec<f64> {
        crate::tensors::spectrum_rel_unchecked(&self.ricci, &self.metric)
    }
}

pub fn curvature_at(field: &MetricField, x: &[f64]) -> Result<CurvatureData> {
    let jet = field.metric_derivatives(x, 2)?;
    curvature_from_jet(&jet)
}

pub fn curvature_from_jet(jet: &MetricJet) -> Result<CurvatureData> {
    let n = jet.dim;
    let g = DMatrix::from_row_slice(n, n, &jet.g);
    let ginv = g.clone().try_inverse().ok_or(Error::SingularMetric)?;
    if !ginv.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularMetric);
    }

    // Γ_{m,jk} = ½(∂_j g_km + ∂_k g_jm − ∂_m g_jk)
    let mut gamma_low = vec![0.0; n * n * n];
    for m in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma_low[(m * n + j) * n + k] =
                    0.5 * (jet.dg(j, k, m) + jet.dg(k, j, m) - jet.dg(m, j, k));
            }
        }
    }
    let mut gamma = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                gamma[(i * n + j) * n + k] = (0..n)
                    .map(|m| ginv[(i, m)] * gamma_low[(m * n + j) * n + k])
                    .sum();
            }
        }
    }
    // ∂_l Γ_{m,jk} = ½(∂_l∂_j g_km + ∂_l∂_k g_jm − ∂_l∂_m g_jk)
    let d_gamma_low = |l: usize, m: usize, j: usize, k: usize| {
        0.5 * (jet.ddg(l, j, k, m) + jet.ddg(l, k, j, m) - jet.ddg(l, m, j, k))
    };
    let gl = |m: usize, j: usize, k: usize| gamma_low[(m * n + j) * n + k];
    let gu = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];

    // R_ijkl = ∂_k Γ_{i,lj} − ∂_l Γ_{i,kj} − Γ_{m,ki} Γ^m_lj + Γ_{m,li} Γ^m_kj
    let mut riemann = Tensor4::zeros(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut v = d_gamma_low(k, i, l, j) - d_gamma_low(l, i, k, j);
                    for m in 0..n {
                        v += gl(m, l, i) * gu(m, k, j) - gl(m, k, i) * gu(m, l, j);
                    }
                    riemann.set(i, j, k, l, v);
                }
            }
        }
    }

    let mut ricci = DMatrix::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for m in 0..n {
                    s += ginv[(i, m)] * riemann.get(m, j, i, l);
                }
            }
            ricci[(j, l)] = s;
        }
    }
    let scal = (0..n)
        .flat_map(|j| (0..n).map(move |l| (j, l)))
        .map(|(j, l)| ginv[(j, l)] * ricci[(j, l)])
        .sum();

    let weyl = if n >= 4 {
        let schouten = (&ricci - &g * (scal / (2.0 * (n as f64 - 1.0)))) / (n as f64 - 2.0);
        let kn = kulkarni_nomizu(&schouten, &g);
        let mut w = riemann.clone();
        for (p, v) in w.data.iter_mut().enumerate() {
            *v -= kn.data[p];
        }
        w
    } else {
        Tensor4::zeros(n)
    };

    Ok(CurvatureData {
        dim: n,
        metric: g,
        metric_inv: ginv,
        christoffel: gamma,
        riemann,
        ricci,
        scal,
        weyl,
    })
}

/// `‖W‖²` as the norm of the Weyl curvature operator on 2-forms,
/// `Σ_{i<j, k<l} W_ijkl W^ijkl = ¼ W_ijkl W^ijkl`. This normalisation makes
/// `χ = (1/8π²) ∫ (‖W‖² + σ₂(Ein₃)/9)` hold in dimension four.
pub fn weyl_norm_sq(c: &CurvatureData) -> Result<f64> {
    if c.dim < 4 {
        return Err(Error::DimensionTooSmall { required: 4, found: c.dim });
    }
    Ok(0.25 * c.weyl.full_contraction(&c.metric_inv))
}

/// `|R|²` in the same 2-form normalisation as [`weyl_norm_sq`].
pub fn riemann_norm_sq(c: &CurvatureData) -> f64 {
    0.25 * c.riemann.full_contraction(&c.metric_inv)
}
