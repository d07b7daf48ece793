//! The metric invariants Ein(g) and ein(g), surgery-model eigenvalues and the
//! dimension-four admissibility test for `k·ℂP² # l·(−ℂP²)`.
//!
//! `Ein(g) = sup{k ∈ (0, n) : Ein_k > 0}` and `ein(g) = inf{k < 0 : Ein_k > 0}`,
//! both set to 0 when Scal is not positive and `ein(g) = −∞` when the set is
//! unbounded below. Pointwise, `Ein_k > 0` for `k ∈ (0, n)` exactly when
//! `k < Scal/ρ_max`, and for `k < 0` exactly when `k > Scal/ρ_min`; on a grid
//! the invariants become an infimum and a supremum of those ratios.

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chart::{GridSample, MetricField};
use crate::curvature::curvature_at;
use crate::error::{Error, Result};
use crate::families::ReferenceData;
use crate::tensors::{ein_k, min_eig, PointData, TAU};

/// A real number or −∞.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
}

impl ExtendedReal {
    pub fn is_neg_infinity(self) -> bool {
        matches!(self, ExtendedReal::NegInfinity)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::NegInfinity => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedReal::*;
        match (self, other) {
            (NegInfinity, NegInfinity) => Some(Ordering::Equal),
            (NegInfinity, Finite(_)) => Some(Ordering::Less),
            (Finite(_), NegInfinity) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInfinity => f.write_str("-inf"),
            ExtendedReal::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::NegInfinity => s.serialize_str("-inf"),
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtendedReal::Finite(v)),
            Repr::Str(s) if s == "-inf" => Ok(ExtendedReal::NegInfinity),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"-inf\", got {s:?}"))),
        }
    }
}

/// `sup{k ∈ (0, n) : Ein_k > 0}` at one point: `Scal/ρ_max` clamped to
/// `[0, n]`, `n` when `ρ_max ≤ 0`, and 0 when `Scal ≤ τ`.
pub fn ein_pointwise(p: &PointData) -> f64 {
    let n = p.dim() as f64;
    if p.scal <= TAU {
        return 0.0;
    }
    let rho_max = *p.ricci_spectrum().last().expect("non-empty spectrum");
    if rho_max <= 0.0 {
        n
    } else {
        (p.scal / rho_max).clamp(0.0, n)
    }
}

/// `inf{k < 0 : Ein_k > 0}` at one point: `Scal/ρ_min` when `ρ_min < −τ`,
/// −∞ when Ricci is nonnegative, and 0 when `Scal ≤ τ`.
pub fn ein_lower_pointwise(p: &PointData) -> ExtendedReal {
    if p.scal <= TAU {
        return ExtendedReal::Finite(0.0);
    }
    let rho_min = p.ricci_spectrum()[0];
    if rho_min < -TAU {
        ExtendedReal::Finite(p.scal / rho_min)
    } else {
        ExtendedReal::NegInfinity
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMinEig {
    pub k: f64,
    /// Smallest g-relative eigenvalue of `Ein_k` over the sample.
    pub min_eig: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub grid: usize,
    pub ein_upper: f64,
    pub ein_lower: ExtendedReal,
    /// `|Ein(2N) − Ein(N)|`.
    pub delta_upper: f64,
    /// `|ein(2N) − ein(N)|`; absent when exactly one side is −∞.
    pub delta_lower: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub dim: usize,
    /// Points per axis; 0 for closed-form data.
    pub grid: usize,
    pub points: usize,
    /// Estimate of Ein(g).
    pub ein_upper: f64,
    /// Estimate of ein(g).
    pub ein_lower: ExtendedReal,
    pub scal_min: f64,
    pub scal_max: f64,
    pub rho_min_min: f64,
    pub rho_min_max: f64,
    pub rho_max_min: f64,
    pub rho_max_max: f64,
    pub ein_k_min: Vec<KMinEig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement: Option<Refinement>,
}

#[derive(Clone, Debug)]
struct PointStats {
    scal: f64,
    rho_min: f64,
    rho_max: f64,
    ein: f64,
    ein_lower: ExtendedReal,
    ein_k_min: Vec<f64>,
}

fn point_stats(p: &PointData, ks: &[f64]) -> Result<PointStats> {
    let spec = p.ricci_spectrum();
    Ok(PointStats {
        scal: p.scal,
        rho_min: spec[0],
        rho_max: spec[spec.len() - 1],
        ein: ein_pointwise(p),
        ein_lower: ein_lower_pointwise(p),
        ein_k_min: ks
            .iter()
            .map(|&k| min_eig(&ein_k(p, k), &p.g))
            .collect::<Result<Vec<_>>>()?,
    })
}

fn merge(a: PointStats, b: PointStats) -> PointStats {
    PointStats {
        scal: a.scal.min(b.scal),
        rho_min: a.rho_min.min(b.rho_min),
        rho_max: a.rho_max.max(b.rho_max),
        ein: a.ein.min(b.ein),
        ein_lower: a.ein_lower.max(b.ein_lower),
        ein_k_min: a.ein_k_min.iter().zip(&b.ein_k_min).map(|(x, y)| x.min(*y)).collect(),
    }
}

fn assemble(dim: usize, grid: usize, points: usize, lo: PointStats, hi: PointStats, ks: &[f64]) -> InvariantReport {
    // Scal not positive somewhere: both invariants vanish.
    let (ein_upper, ein_lower) = if lo.scal <= TAU {
        (0.0, ExtendedReal::Finite(0.0))
    } else {
        (lo.ein, lo.ein_lower)
    };
    InvariantReport {
        dim,
        grid,
        points,
        ein_upper,
        ein_lower,
        scal_min: lo.scal,
        scal_max: hi.scal,
        rho_min_min: lo.rho_min,
        rho_min_max: hi.rho_min,
        rho_max_min: lo.rho_max,
        rho_max_max: hi.rho_max,
        ein_k_min: ks
            .iter()
            .zip(&lo.ein_k_min)
            .map(|(&k, &m)| KMinEig { k, min_eig: m })
            .collect(),
        refinement: None,
    }
}

/// Invariants over a grid without refinement.
pub fn grid_invariants(field: &MetricField, grid: &GridSample, ks: &[f64]) -> Result<InvariantReport> {
    let stats: Vec<PointStats> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; grid.dim()];
            grid.point(i, &mut x);
            let c = curvature_at(field, &x)?;
            point_stats(&PointData::from_curvature(&c), ks)
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = stats.iter().cloned().reduce(merge).ok_or(Error::param("grid", "empty sample"))?;
    let hi = stats
        .into_iter()
        .reduce(|a, b| PointStats {
            scal: a.scal.max(b.scal),
            rho_min: a.rho_min.max(b.rho_min),
            rho_max: a.rho_max.min(b.rho_max),
            ..a
        })
        .expect("non-empty");
    Ok(assemble(field.dim(), grid.per_axis(), grid.len(), lo, hi, ks))
}

/// Invariants over `grid` with the change under one 2× refinement attached.
pub fn invariant_report(field: &MetricField, grid: &GridSample, ks: &[f64]) -> Result<InvariantReport> {
    let mut base = grid_invariants(field, grid, ks)?;
    let fine_grid = grid.refined();
    let fine = grid_invariants(field, &fine_grid, &[])?;
    let delta_lower = match (base.ein_lower, fine.ein_lower) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => Some((b - a).abs()),
        (ExtendedReal::NegInfinity, ExtendedReal::NegInfinity) => Some(0.0),
        _ => None,
    };
    base.refinement = Some(Refinement {
        grid: fine_grid.per_axis(),
        ein_upper: fine.ein_upper,
        ein_lower: fine.ein_lower,
        delta_upper: (fine.ein_upper - base.ein_upper).abs(),
        delta_lower,
    });
    Ok(base)
}

/// Invariants of closed-form data (constant along the manifold).
pub fn reference_invariants(r: &ReferenceData, ks: &[f64]) -> Result<InvariantReport> {
    let p = r.point_data();
    let s = point_stats(&p, ks)?;
    Ok(assemble(r.dim, 0, 1, s.clone(), s, ks))
}

/// `Ein_k` eigenvalues of the unit model `S^{q−1} × ℝ^{n−q+1}` along the sphere
/// and the flat directions: `((q−2)(q−1−k), (q−1)(q−2))`.
pub fn cylinder_model_eigs(q: usize, n: usize, k: f64) -> Result<(f64, f64)> {
    if q < 2 || q > n {
        return Err(Error::param("q", format!("must satisfy 2 <= q <= n, got q={q}, n={n}")));
    }
    let qf = q as f64;
    Ok(((qf - 2.0) * (qf - 1.0 - k), (qf - 1.0) * (qf - 2.0)))
}

/// `2χ − 3|σ| > 0` for `M_kl = k·ℂP² # l·(−ℂP²)`, where `χ = k + l + 2` and
/// `σ = k − l`.
pub fn mkl_admissible(k: u64, l: u64) -> bool {
    let chi = k + l + 2;
    2 * chi > 3 * k.abs_diff(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::berger_reference;
    use nalgebra::DMatrix;

    #[test]
    fn extended_real_order_and_json() {
        use ExtendedReal::*;
        assert!(NegInfinity < Finite(-1e300));
        assert!(Finite(-1.0) < Finite(0.0));
        assert_eq!(NegInfinity.max(Finite(-3.0)), Finite(-3.0));
        assert_eq!(serde_json::to_string(&NegInfinity).unwrap(), "\"-inf\"");
        let back: ExtendedReal = serde_json::from_str("\"-inf\"").unwrap();
        assert_eq!(back, NegInfinity);
        let v: ExtendedReal = serde_json::from_str("-2.5").unwrap();
        assert_eq!(v, Finite(-2.5));
    }

    #[test]
    fn pointwise_examples() {
        let round = ReferenceData::new(vec![(2.0, 3)]).point_data();
        assert_eq!(ein_pointwise(&round), 3.0);
        assert_eq!(ein_lower_pointwise(&round), ExtendedReal::NegInfinity);

        let b2 = berger_reference(1, 2.0).point_data();
        assert!((ein_pointwise(&b2) - 1.0).abs() < 1e-15);
        let b3 = berger_reference(1, 3.0).point_data();
        assert_eq!(b3.scal, 2.0);
        assert!((ein_lower_pointwise(&b3).to_f64() + 1.0).abs() < 1e-15);

        let neg = PointData::new(DMatrix::identity(3, 3), DMatrix::identity(3, 3) * -0.3, -1.0).unwrap();
        assert_eq!(ein_pointwise(&neg), 0.0);
        assert_eq!(ein_lower_pointwise(&neg), ExtendedReal::Finite(0.0));
    }

    #[test]
    fn nonpositive_ricci_gives_full_range() {
        // Scal > 0 with every ρ ≤ 0 is algebraically possible for non-geometric data.
        let p = PointData::new(DMatrix::identity(2, 2), DMatrix::identity(2, 2) * -1.0, 1.0).unwrap();
        assert_eq!(ein_pointwise(&p), 2.0);
    }

    #[test]
    fn cylinder_examples() {
        assert_eq!(cylinder_model_eigs(3, 5, 1.0).unwrap(), (1.0, 2.0));
        assert_eq!(cylinder_model_eigs(3, 5, 2.0).unwrap(), (0.0, 2.0));
        let (a, b) = cylinder_model_eigs(2, 4, 0.5).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
        assert!(cylinder_model_eigs(1, 4, 0.5).is_err());
        assert!(cylinder_model_eigs(6, 5, 0.5).is_err());
    }

    #[test]
    fn mkl_examples() {
        assert!(mkl_admissible(1, 1));
        assert!(!mkl_admissible(9, 1));
        assert!(!mkl_admissible(4, 0));
        assert!(mkl_admissible(3, 0));
    }

    #[test]
    fn nonpositive_scal_zeroes_both() {
        let r = reference_invariants(&berger_reference(1, 4.0), &[]).unwrap();
        assert_eq!(r.ein_upper, 0.0);
        assert_eq!(r.ein_lower, ExtendedReal::Finite(0.0));
    }
}
