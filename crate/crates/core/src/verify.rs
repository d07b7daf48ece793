//! Verification suites. Each suite produces flat check records
//! `{check, params, lhs, rhs, residual, pass}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chart::GridSample;
use crate::error::{Error, Result};
use crate::families::{
    berger_reference, canonical_variation, cylinder_reference, product_field, Factor, ReferenceData,
};
use crate::invariants::{
    cylinder_model_eigs, ein_lower_pointwise, ein_pointwise, grid_invariants, mkl_admissible, reference_invariants,
    ExtendedReal,
};
use crate::sampling::{PointSampler, MAX_ATTEMPTS};
use crate::tensors::{
    aux_abar, aux_bbar, ein_k, gamma2_schouten_k, lowest_sum, min_eig, newton_t1, sch_k, schouten,
    schouten_positive_k, sigma_i, top_ein, PointData, SymBilinear, TAU,
};

/// Relative tolerance for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance for closed-form table values.
pub const TABLE_TOL: f64 = 1e-12;
/// Tolerance for values computed on numerical charts.
pub const CHART_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub params: BTreeMap<String, Value>,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(check: &str, params: Value, lhs: f64, rhs: f64, residual: f64, pass: bool) -> Self {
        let params = match params {
            Value::Object(m) => m.into_iter().collect(),
            Value::Null => BTreeMap::new(),
            other => BTreeMap::from([("value".to_string(), other)]),
        };
        Self {
            check: check.to_string(),
            params,
            lhs,
            rhs,
            residual,
            pass,
        }
    }

    /// `|lhs − rhs| ≤ tol`.
    pub fn close(check: &str, params: Value, lhs: f64, rhs: f64, tol: f64) -> Self {
        let residual = (lhs - rhs).abs();
        Self::new(check, params, lhs, rhs, residual, residual <= tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Implications,
    Cone,
    Mkl,
    Berger,
    Products,
    All,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Identities,
        Suite::Implications,
        Suite::Cone,
        Suite::Mkl,
        Suite::Berger,
        Suite::Products,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Implications => "implications",
            Suite::Cone => "cone",
            Suite::Mkl => "mkl",
            Suite::Berger => "berger",
            Suite::Products => "products",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::param("suite", format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub dims: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub grid: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            dims: vec![3, 4, 5, 6],
            samples: 10_000,
            seed: 42,
            grid: crate::chart::DEFAULT_GRID,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub samples: usize,
    pub records: Vec<CheckRecord>,
    /// Names of failing checks, in record order.
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite, cfg: &VerifyConfig, records: Vec<CheckRecord>) -> Self {
        let failures = records.iter().filter(|r| !r.pass).map(|r| r.check.clone()).collect();
        Self {
            suite,
            seed: cfg.seed,
            samples: cfg.samples,
            records,
            failures,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteReport> {
    if cfg.samples == 0 {
        return Err(Error::param("samples", "must be positive"));
    }
    if let Some(&n) = cfg.dims.iter().find(|&&n| !(2..=12).contains(&n)) {
        return Err(Error::param("dim", format!("must lie in 2..=12, got {n}")));
    }
    let records = match suite {
        Suite::Identities => identity_records(cfg)?,
        Suite::Implications => implication_records(cfg)?,
        Suite::Cone => cone_records(),
        Suite::Mkl => mkl_records(),
        Suite::Berger => berger_records(cfg)?,
        Suite::Products => product_records(cfg)?,
        Suite::All => {
            let mut all = Vec::new();
            for s in Suite::ALL {
                all.extend(run_suite(s, cfg)?.records);
            }
            all
        }
    };
    Ok(SuiteReport::new(suite, cfg, records))
}

fn stream_id(check: usize, n: usize) -> u64 {
    (check as u64) << 16 | n as u64
}

// ---------------------------------------------------------------------------
// Identities

type IdentityFn = fn(&PointData, &mut PointSampler) -> Result<(Vec<f64>, Vec<f64>)>;

struct Identity {
    name: &'static str,
    applies: fn(usize) -> bool,
    independent_scal: bool,
    eval: IdentityFn,
}

fn flat(h: &SymBilinear) -> Vec<f64> {
    h.0.iter().copied().collect()
}

fn sigmas(h: &SymBilinear, p: &PointData) -> Result<Vec<f64>> {
    Ok(vec![sigma_i(h, &p.g, 1)?, sigma_i(h, &p.g, 2)?])
}

fn nf(p: &PointData) -> f64 {
    p.dim() as f64
}

/// `k` uniform in `[lo, hi)` away from the given poles.
fn k_away(s: &mut PointSampler, lo: f64, hi: f64, poles: &[f64]) -> f64 {
    loop {
        let k = s.uniform(lo, hi);
        if poles.iter().all(|p| (k - p).abs() > 0.05) {
            return k;
        }
    }
}

const IDENTITIES: &[Identity] = &[
    Identity {
        name: "trace_ein_k",
        applies: |_| true,
        independent_scal: false,
        eval: |p, s| {
            let k = s.uniform(-3.0, nf(p) + 1.0);
            Ok((vec![sigma_i(&ein_k(p, k), &p.g, 1)?], vec![(nf(p) - k) * p.scal]))
        },
    },
    Identity {
        name: "t1_ein_k",
        applies: |_| true,
        independent_scal: false,
        eval: |p, s| {
            let n = nf(p);
            let k = k_away(s, -3.0, n, &[n - 1.0]);
            let lhs = newton_t1(&ein_k(p, k), &p.g)?;
            let rhs = ein_k(p, -k / (n - 1.0 - k)).scaled(n - k - 1.0);
            Ok((flat(&lhs), flat(&rhs)))
        },
    },
    Identity {
        name: "t1_ein_k_modified_schouten",
        applies: |_| true,
        independent_scal: false,
        eval: |p, s| {
            let n = nf(p);
            let k = k_away(s, 0.1, n, &[]);
            let lhs = newton_t1(&ein_k(p, k), &p.g)?;
            let rhs = sch_k(p, 1.0 - (n - 1.0) / k).scaled(k);
            Ok((flat(&lhs), flat(&rhs)))
        },
    },
    Identity {
        name: "t1_ein_k_schouten",
        applies: |n| n >= 4,
        independent_scal: false,
        eval: |p, _| {
            let n = nf(p);
            let k = schouten_positive_k(p.dim());
            let lhs = newton_t1(&ein_k(p, k), &p.g)?;
            let rhs = schouten(p)?.scaled(k * (n - 2.0));
            Ok((flat(&lhs), flat(&rhs)))
        },
    },
    Identity {
        name: "sigma_b",
        applies: |_| true,
        independent_scal: false,
        eval: |p, _| {
            let n = nf(p);
            let rhs2 = 0.5 * (n - 1.0) * (p.scal * p.scal - (n - 1.0) * p.ricci_norm_sq());
            Ok((sigmas(&top_ein(p), p)?, vec![p.scal, rhs2]))
        },
    },
    Identity {
        name: "t1_b_ricci",
        applies: |_| true,
        independent_scal: false,
        eval: |p, _| {
            let lhs = newton_t1(&top_ein(p), &p.g)?;
            Ok((flat(&lhs), flat(&SymBilinear::new(&p.ric * (nf(p) - 1.0)))))
        },
    },
    Identity {
        name: "sigma_bbar",
        applies: |n| n >= 3,
        independent_scal: false,
        eval: |p, _| Ok((sigmas(&aux_bbar(p)?, p)?, sigmas(&top_ein(p), p)?)),
    },
    Identity {
        name: "t1_bbar",
        applies: |n| n >= 3,
        independent_scal: false,
        eval: |p, _| {
            let n = nf(p);
            let lhs = newton_t1(&aux_bbar(p)?, &p.g)?;
            let rhs = ein_k(p, n / 2.0).scaled(2.0 * (n - 1.0) / n);
            Ok((flat(&lhs), flat(&rhs)))
        },
    },
    Identity {
        name: "sigma_abar",
        applies: |n| n >= 4,
        independent_scal: false,
        eval: |p, _| Ok((sigmas(&aux_abar(p)?, p)?, sigmas(&schouten(p)?, p)?)),
    },
    Identity {
        name: "sigma2_ein3_schouten",
        applies: |n| n == 4,
        independent_scal: false,
        eval: |p, _| {
            let lhs = sigma_i(&ein_k(p, 3.0), &p.g, 2)?;
            Ok((vec![lhs], vec![36.0 * sigma_i(&schouten(p)?, &p.g, 2)?]))
        },
    },
    Identity {
        name: "t1_modified_schouten",
        applies: |_| true,
        independent_scal: false,
        eval: |p, s| {
            let n = nf(p);
            let k = k_away(s, 0.1, n, &[]);
            let lhs = newton_t1(&sch_k(p, (k - 1.0) / (k * (n - 1.0))), &p.g)?;
            Ok((flat(&lhs), flat(&ein_k(p, k).scaled(1.0 / k))))
        },
    },
    Identity {
        name: "modified_schouten_as_ein",
        applies: |_| true,
        independent_scal: true,
        eval: |p, s| {
            let k = k_away(s, -5.0, -0.05, &[]);
            Ok((flat(&sch_k(p, k)), flat(&ein_k(p, 1.0 / k).scaled(-k))))
        },
    },
    Identity {
        name: "ein_k_affine_in_k",
        applies: |_| true,
        independent_scal: true,
        eval: |p, s| {
            let (a, b, t) = (s.uniform(-5.0, 5.0), s.uniform(-5.0, 5.0), s.uniform(0.0, 1.0));
            let lhs = ein_k(p, t * a + (1.0 - t) * b);
            let rhs = SymBilinear::new(ein_k(p, a).0 * t + ein_k(p, b).0 * (1.0 - t));
            Ok((flat(&lhs), flat(&rhs)))
        },
    },
];

fn rel_residual(lhs: &[f64], rhs: &[f64]) -> (f64, usize) {
    let scale = lhs.iter().chain(rhs).fold(1.0f64, |m, v| m.max(v.abs()));
    let (i, d) = lhs
        .iter()
        .zip(rhs)
        .map(|(a, b)| (a - b).abs())
        .enumerate()
        .fold((0, 0.0), |acc, (i, d)| if d > acc.1 { (i, d) } else { acc });
    (d / scale, i)
}

fn identity_records(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let jobs: Vec<(usize, &Identity, usize)> = IDENTITIES
        .iter()
        .enumerate()
        .flat_map(|(i, id)| cfg.dims.iter().filter(|&&n| (id.applies)(n)).map(move |&n| (i, id, n)))
        .collect();
    jobs.par_iter()
        .map(|&(i, id, n)| {
            let mut s = PointSampler::with_stream(cfg.seed, stream_id(i, n));
            let mut worst = (0.0, 0.0, 0.0, 0usize);
            for sample in 0..cfg.samples {
                let p = if id.independent_scal { s.independent(n) } else { s.consistent(n) };
                let (lhs, rhs) = (id.eval)(&p, &mut s)?;
                let (r, at) = rel_residual(&lhs, &rhs);
                if r > worst.0 || sample == 0 {
                    worst = (r, lhs[at], rhs[at], sample);
                }
            }
            Ok(CheckRecord::new(
                id.name,
                json!({"n": n, "samples": cfg.samples, "worst_sample": worst.3,
                       "scal": if id.independent_scal { "independent" } else { "trace" }}),
                worst.1,
                worst.2,
                worst.0,
                worst.0 <= IDENTITY_TOL,
            ))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Implications

enum Trial {
    /// Hypothesis false or a quantity inside the tolerance band.
    Skip,
    Implication { conclusion: bool },
    Equivalence { lhs: bool, rhs: bool },
}

/// Strict sign of `v` outside the band `[−τ, τ]`.
fn sign(v: f64) -> Option<bool> {
    (v.abs() > TAU).then_some(v > 0.0)
}

fn positive(h: &SymBilinear, p: &PointData) -> Result<Option<bool>> {
    Ok(sign(min_eig(h, &p.g)?))
}

fn gamma2(h: &SymBilinear, p: &PointData) -> Result<Option<bool>> {
    let (s1, s2) = (sign(sigma_i(h, &p.g, 1)?), sign(sigma_i(h, &p.g, 2)?));
    Ok(match (s1, s2) {
        (Some(a), Some(b)) => Some(a && b),
        (Some(false), None) | (None, Some(false)) => Some(false),
        _ => None,
    })
}

fn implication(hyp: Option<bool>, concl: Option<bool>) -> Trial {
    match (hyp, concl) {
        (Some(true), Some(c)) => Trial::Implication { conclusion: c },
        _ => Trial::Skip,
    }
}

fn equivalence(a: Option<bool>, b: Option<bool>) -> Trial {
    match (a, b) {
        (Some(lhs), Some(rhs)) => Trial::Equivalence { lhs, rhs },
        _ => Trial::Skip,
    }
}

fn all(vals: &[Option<bool>]) -> Option<bool> {
    vals.iter().try_fold(true, |acc, v| v.map(|b| acc && b))
}

type ImplicationFn = fn(&PointData, &mut PointSampler) -> Result<Trial>;

struct Implication {
    name: &'static str,
    applies: fn(usize) -> bool,
    /// Extra dimensions checked regardless of the configured list.
    dims_override: Option<&'static [usize]>,
    eval: ImplicationFn,
}

fn int_k(s: &mut PointSampler, lo: usize, hi: usize) -> usize {
    s.rng().gen_range(lo..=hi)
}

const IMPLICATIONS: &[Implication] = &[
    Implication {
        name: "ricci_k_positive_iff_ein_k_positive",
        applies: |n| n >= 2,
        dims_override: None,
        eval: |p, s| {
            let n = p.dim();
            let k = int_k(s, 1, n - 1);
            let ric = SymBilinear::new(p.ric.clone());
            Ok(equivalence(
                sign(lowest_sum(&ric, &p.g, n - k)?),
                sign(lowest_sum(&ein_k(p, k as f64), &p.g, k)?),
            ))
        },
    },
    Implication {
        name: "ein_k_positive_eigenvalue_count",
        applies: |_| true,
        dims_override: None,
        eval: |p, s| {
            let n = p.dim();
            let k = int_k(s, 0, n - 1);
            let spec = p.ricci_spectrum();
            if spec.iter().any(|r| r.abs() <= TAU) {
                return Ok(Trial::Skip);
            }
            let count = spec.iter().filter(|&&r| r > 0.0).count();
            Ok(implication(positive(&ein_k(p, k as f64), p)?, Some(count > k)))
        },
    },
    Implication {
        name: "heredity_positive_k",
        applies: |_| true,
        dims_override: None,
        eval: |p, s| {
            let n = nf(p);
            let l = s.uniform(0.0, n);
            let k = s.uniform(0.0, l);
            let concl = all(&[positive(&ein_k(p, k), p)?, sign(p.scal)]);
            Ok(implication(positive(&ein_k(p, l), p)?, concl))
        },
    },
    Implication {
        name: "heredity_negative_k",
        applies: |_| true,
        dims_override: None,
        eval: |p, s| {
            let k = s.uniform(-10.0, 0.0);
            let l = s.uniform(k, 0.0);
            let concl = all(&[positive(&ein_k(p, l), p)?, sign(p.scal)]);
            Ok(implication(positive(&ein_k(p, k), p)?, concl))
        },
    },
    Implication {
        name: "ein_k_implies_ein_minus_k",
        applies: |n| n >= 3,
        dims_override: None,
        eval: |p, s| {
            let n = nf(p);
            let k = s.uniform(n - 2.0, n);
            Ok(implication(positive(&ein_k(p, k), p)?, positive(&ein_k(p, -k), p)?))
        },
    },
    Implication {
        name: "ein_k_n_minus_1_positive_iff_t1",
        applies: |n| n >= 3,
        dims_override: None,
        eval: |p, s| {
            let n = nf(p);
            let k = k_away(s, 0.0, n - 1.0, &[n - 1.0]);
            Ok(equivalence(
                sign(lowest_sum(&ein_k(p, k), &p.g, p.dim() - 1)?),
                positive(&ein_k(p, -k / (n - 1.0 - k)), p)?,
            ))
        },
    },
    Implication {
        name: "nonnegative_ricci_implies_negative_k",
        applies: |_| true,
        dims_override: None,
        eval: |p, s| {
            let k = -(10f64.powf(s.uniform(-3.0, 3.0)));
            let hyp = all(&[sign(p.ricci_spectrum()[0]), sign(p.scal)]);
            let infinite = ein_lower_pointwise(p).is_neg_infinity();
            let concl = all(&[positive(&ein_k(p, k), p)?, Some(infinite)]);
            Ok(implication(hyp, concl))
        },
    },
    Implication {
        name: "gamma2_b_criterion",
        applies: |_| true,
        dims_override: None,
        eval: |p, _| {
            let n = nf(p);
            let crit = all(&[sign(p.scal), sign(p.scal * p.scal - (n - 1.0) * p.ricci_norm_sq())]);
            Ok(equivalence(gamma2(&top_ein(p), p)?, crit))
        },
    },
    Implication {
        name: "gamma2_b_implies_ricci_positive",
        applies: |_| true,
        dims_override: None,
        eval: |p, _| {
            let ric = SymBilinear::new(p.ric.clone());
            Ok(implication(gamma2(&top_ein(p), p)?, positive(&ric, p)?))
        },
    },
    Implication {
        name: "gamma2_b_implies_ein_half_n",
        applies: |n| n >= 3,
        dims_override: None,
        eval: |p, s| {
            let k = s.uniform(-10.0, nf(p) / 2.0);
            let concl = all(&[positive(&ein_k(p, nf(p) / 2.0), p)?, positive(&ein_k(p, k), p)?]);
            Ok(implication(gamma2(&top_ein(p), p)?, concl))
        },
    },
    Implication {
        name: "ein_top_implies_gamma2_b",
        applies: |n| n >= 4,
        dims_override: None,
        eval: |p, _| Ok(implication(positive(&top_ein(p), p)?, gamma2(&top_ein(p), p)?)),
    },
    Implication {
        name: "gamma2_b_implies_gamma2_a",
        applies: |n| n >= 4,
        dims_override: None,
        eval: |p, _| Ok(implication(gamma2(&top_ein(p), p)?, gamma2(&schouten(p)?, p)?)),
    },
    Implication {
        name: "gamma2_a_criterion",
        applies: |n| n >= 3,
        dims_override: None,
        eval: |p, _| {
            let n = nf(p);
            let crit = all(&[sign(p.scal), sign(0.25 * n * p.scal * p.scal - (n - 1.0) * p.ricci_norm_sq())]);
            Ok(equivalence(gamma2(&schouten(p)?, p)?, crit))
        },
    },
    Implication {
        name: "gamma2_a_iff_gamma2_ein_3",
        applies: |n| n == 4,
        dims_override: Some(&[4]),
        eval: |p, _| Ok(equivalence(gamma2(&schouten(p)?, p)?, gamma2(&ein_k(p, 3.0), p)?)),
    },
    Implication {
        name: "gamma2_a_iff_gamma2_ein_k",
        applies: |n| n >= 4,
        dims_override: Some(&[4, 5, 6, 7, 8]),
        eval: |p, _| {
            let k = gamma2_schouten_k(p.dim());
            Ok(equivalence(gamma2(&schouten(p)?, p)?, gamma2(&ein_k(p, k), p)?))
        },
    },
    Implication {
        name: "ein_k_implies_schouten_positive",
        applies: |n| n >= 4,
        dims_override: None,
        eval: |p, _| {
            let k = schouten_positive_k(p.dim());
            Ok(implication(positive(&ein_k(p, k), p)?, positive(&schouten(p)?, p)?))
        },
    },
    Implication {
        name: "modified_schouten_negative_k_iff_ein",
        applies: |_| true,
        dims_override: None,
        eval: |p, s| {
            let k = -(10f64.powf(s.uniform(-2.0, 2.0)));
            Ok(equivalence(positive(&sch_k(p, k), p)?, positive(&ein_k(p, 1.0 / k), p)?))
        },
    },
    Implication {
        name: "ein_k_implies_modified_schouten",
        applies: |_| true,
        dims_override: None,
        eval: |p, s| {
            let n = nf(p);
            let k = s.uniform(n - 1.0, n);
            Ok(implication(positive(&ein_k(p, k), p)?, positive(&sch_k(p, 1.0 - (n - 1.0) / k), p)?))
        },
    },
    Implication {
        name: "modified_schouten_implies_ein_k",
        applies: |_| true,
        dims_override: None,
        eval: |p, s| {
            let n = nf(p);
            let k = s.uniform(1.0, n);
            let c = (k - 1.0) / (k * (n - 1.0));
            Ok(implication(positive(&sch_k(p, c), p)?, positive(&ein_k(p, k), p)?))
        },
    },
];

/// Outcome of one boolean check over `samples` accepted trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanTally {
    pub samples: usize,
    pub attempts: usize,
    pub counterexamples: usize,
    /// Trials where both sides were true (equivalences) or the conclusion held.
    pub positives: usize,
}

fn tally(
    eval: ImplicationFn,
    name: &str,
    n: usize,
    samples: usize,
    sampler: &mut PointSampler,
) -> Result<BooleanTally> {
    let mut t = BooleanTally {
        samples,
        attempts: 0,
        counterexamples: 0,
        positives: 0,
    };
    for _ in 0..samples {
        let (trial, attempts) = sampler.draw(name, MAX_ATTEMPTS, |s| {
            let p = s.mixed(n);
            Ok(match eval(&p, s)? {
                Trial::Skip => None,
                other => Some(other),
            })
        })?;
        t.attempts += attempts;
        match trial {
            Trial::Implication { conclusion } => {
                t.counterexamples += usize::from(!conclusion);
                t.positives += usize::from(conclusion);
            }
            Trial::Equivalence { lhs, rhs } => {
                t.counterexamples += usize::from(lhs != rhs);
                t.positives += usize::from(lhs && rhs);
            }
            Trial::Skip => unreachable!(),
        }
    }
    Ok(t)
}

fn implication_records(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let jobs: Vec<(usize, &Implication, usize)> = IMPLICATIONS
        .iter()
        .enumerate()
        .flat_map(|(i, imp)| {
            let dims: Vec<usize> = match imp.dims_override {
                Some(d) => d.to_vec(),
                None => cfg.dims.clone(),
            };
            dims.into_iter().filter(|&n| (imp.applies)(n)).map(move |n| (i, imp, n))
        })
        .collect();
    jobs.par_iter()
        .map(|&(i, imp, n)| {
            let mut s = PointSampler::with_stream(cfg.seed, stream_id(1000 + i, n));
            let t = tally(imp.eval, imp.name, n, cfg.samples, &mut s)?;
            Ok(CheckRecord::new(
                imp.name,
                json!({"n": n, "samples": t.samples, "attempts": t.attempts, "positives": t.positives}),
                t.counterexamples as f64,
                0.0,
                t.counterexamples as f64 / t.samples as f64,
                t.counterexamples == 0,
            ))
        })
        .collect()
}

/// The equivalence with the reciprocal index negated, `Sch_k > 0 ⟺ Ein_{−1/k} > 0`
/// for `k < 0`. Algebra gives `Sch_k = −k·Ein_{1/k}`, so this form is expected
/// to fail; the tally quantifies how often.
pub fn printed_schouten_equivalence(n: usize, samples: usize, seed: u64) -> Result<BooleanTally> {
    let mut s = PointSampler::with_stream(seed, stream_id(4000, n));
    tally(
        |p, s| {
            let k = -(10f64.powf(s.uniform(-2.0, 2.0)));
            Ok(equivalence(positive(&sch_k(p, k), p)?, positive(&ein_k(p, -1.0 / k), p)?))
        },
        "printed_schouten_equivalence",
        n,
        samples,
        &mut s,
    )
}

// ---------------------------------------------------------------------------
// Surgery cone and four-manifold arithmetic

/// Half-integer grid `−3, −2.5, …, 8.5`.
pub fn cone_k_grid() -> Vec<f64> {
    (-6..=17).map(|i| f64::from(i) * 0.5).collect()
}

pub fn cone_records() -> Vec<CheckRecord> {
    let n = 10;
    let mut out = Vec::new();
    let mut worst_eig = 0.0f64;
    for q in 2..=n {
        let reference = cylinder_reference(q, n);
        for k in cone_k_grid() {
            let (a, b) = cylinder_model_eigs(q, n, k).expect("q in range");
            let positive = a > 0.0 && b > 0.0;
            let expected = q > 2 && (q as f64) > k + 1.0;
            out.push(CheckRecord::new(
                "cylinder_cone",
                json!({"q": q, "n": n, "k": k, "sphere_eig": a, "flat_eig": b}),
                f64::from(u8::from(positive)),
                f64::from(u8::from(expected)),
                f64::from(u8::from(positive != expected)),
                positive == expected,
            ));
            // Second route: eigenvalues of Scal·g − k·Ric from the model's Ricci spectrum.
            let from_ricci: Vec<f64> = reference.ein_k_eigs(k).iter().map(|e| e.0).collect();
            let near = |v: f64, set: &[f64]| set.iter().map(|w| (v - w).abs()).fold(f64::INFINITY, f64::min);
            let diff = from_ricci
                .iter()
                .map(|&v| near(v, &[a, b]))
                .chain([a, b].iter().map(|&v| near(v, &from_ricci)))
                .fold(0.0, f64::max);
            worst_eig = worst_eig.max(diff);
        }
    }
    out.push(CheckRecord::close(
        "cylinder_eigs_match_ricci_spectrum",
        json!({"n": n, "q": "2..=10"}),
        worst_eig,
        0.0,
        TABLE_TOL,
    ));
    out
}

pub fn mkl_records() -> Vec<CheckRecord> {
    let mut mismatches = 0usize;
    let mut excluded = 0usize;
    for k in 0..=50u64 {
        for l in 0..=50u64 {
            let expected = !(k > 5 * l + 3 || l > 5 * k + 3);
            excluded += usize::from(!expected);
            mismatches += usize::from(mkl_admissible(k, l) != expected);
        }
    }
    let mut out = vec![CheckRecord::new(
        "mkl_exclusion",
        json!({"range": "0..=50", "pairs": 51 * 51, "excluded": excluded}),
        mismatches as f64,
        0.0,
        mismatches as f64,
        mismatches == 0,
    )];
    for (k, l, want) in [(1, 1, true), (9, 1, false), (4, 0, false), (3, 0, true)] {
        let got = mkl_admissible(k, l);
        out.push(CheckRecord::new(
            "mkl_example",
            json!({"k": k, "l": l}),
            f64::from(u8::from(got)),
            f64::from(u8::from(want)),
            f64::from(u8::from(got != want)),
            got == want,
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Berger spheres

/// The five-regime table for `(Ein(g_t), ein(g_t))` on `S^{2n+1}`.
pub fn berger_table(n: usize, t: f64) -> (f64, ExtendedReal) {
    let nf = n as f64;
    let top = 2.0 * nf + 2.0;
    let small = nf * (1.0 + top / (top - 2.0 * t));
    if t >= top {
        return (0.0, ExtendedReal::Finite(0.0));
    }
    let upper = if t >= 1.0 { top / t - 1.0 } else { small };
    let lower = if t > nf + 1.0 {
        ExtendedReal::Finite(small)
    } else {
        ExtendedReal::NegInfinity
    };
    (upper, lower)
}

/// Closed-form `Ein_k` eigenvalues `(ν₁, ν₂)` of the Berger sphere.
pub fn berger_nu(n: usize, t: f64, k: f64) -> (f64, f64) {
    let nf = n as f64;
    (
        4.0 * nf * (nf + 1.0) - 2.0 * nf * t * (1.0 + k),
        2.0 * t * (k - nf) + (2.0 * nf - k) * (2.0 * nf + 2.0),
    )
}

pub fn berger_t_grid(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let top = 2.0 * nf + 2.0;
    vec![0.1, 0.25, 0.5, 0.9, 1.0, 1.5, nf + 0.5, nf + 1.0, nf + 1.5, top - 0.5, top - 0.1, top, top + 1.0]
}

fn extended_close(a: ExtendedReal, b: ExtendedReal, tol: f64) -> (f64, bool) {
    match (a, b) {
        (ExtendedReal::NegInfinity, ExtendedReal::NegInfinity) => (0.0, true),
        (ExtendedReal::Finite(x), ExtendedReal::Finite(y)) => ((x - y).abs(), (x - y).abs() <= tol),
        _ => (f64::INFINITY, false),
    }
}

fn berger_records(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    for n in [1usize, 2] {
        for t in berger_t_grid(n) {
            let (upper, lower) = berger_table(n, t);
            let r = reference_invariants(&berger_reference(n, t), &[])?;
            out.push(CheckRecord::close(
                "berger_ein_upper_closed_form",
                json!({"n": n, "t": t}),
                r.ein_upper,
                upper,
                TABLE_TOL,
            ));
            let (res, pass) = extended_close(r.ein_lower, lower, TABLE_TOL);
            out.push(CheckRecord::new(
                "berger_ein_lower_closed_form",
                json!({"n": n, "t": t}),
                r.ein_lower.to_f64(),
                lower.to_f64(),
                res,
                pass,
            ));
            for k in [-2.0, 0.5, 1.0, 2.0] {
                let (nu1, nu2) = berger_nu(n, t, k);
                let mut want = [nu1, nu2];
                want.sort_by(f64::total_cmp);
                let mut got: Vec<f64> = berger_reference(n, t).ein_k_eigs(k).iter().map(|e| e.0).collect();
                got.sort_by(f64::total_cmp);
                let diff = want.iter().zip(&got).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                out.push(CheckRecord::close(
                    "berger_nu_eigenvalues",
                    json!({"n": n, "t": t, "k": k}),
                    diff,
                    0.0,
                    TABLE_TOL,
                ));
            }
        }
        out.push(berger_remark_record(n));
    }
    for t in berger_t_grid(1) {
        let field = canonical_variation(t)?;
        let grid = GridSample::lattice(field.chart(), cfg.grid)?;
        let r = grid_invariants(&field, &grid, &[])?;
        let (upper, lower) = berger_table(1, t);
        out.push(CheckRecord::close(
            "berger_ein_upper_chart",
            json!({"n": 1, "t": t, "grid": cfg.grid}),
            r.ein_upper,
            upper,
            CHART_TOL,
        ));
        let (res, pass) = extended_close(r.ein_lower, lower, CHART_TOL);
        out.push(CheckRecord::new(
            "berger_ein_lower_chart",
            json!({"n": 1, "t": t, "grid": cfg.grid}),
            r.ein_lower.to_f64(),
            lower.to_f64(),
            res,
            pass,
        ));
    }
    Ok(out)
}

/// For `2(n+1)/(k+1) < t < n+1` the Berger metric has positive Ricci curvature
/// while `Ein_k` is not positive.
fn berger_remark_record(n: usize) -> CheckRecord {
    let nf = n as f64;
    let (mut cases, mut bad) = (0usize, 0usize);
    for ki in 1..=40 {
        let k = f64::from(ki) * 0.25;
        let lo = 2.0 * (nf + 1.0) / (k + 1.0);
        for ti in 1..40 {
            let t = lo + (nf + 1.0 - lo) * f64::from(ti) / 40.0;
            if !(t > lo && t < nf + 1.0) {
                continue;
            }
            cases += 1;
            let r = berger_reference(n, t);
            let ricci_positive = r.ricci_spectrum()[0] > 0.0;
            let ein_min = r.ein_k_eigs(k).iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
            bad += usize::from(!(ricci_positive && ein_min <= 0.0));
        }
    }
    CheckRecord::new(
        "berger_positive_ricci_without_ein_k",
        json!({"n": n, "cases": cases}),
        bad as f64,
        0.0,
        bad as f64,
        bad == 0 && cases > 0,
    )
}

// ---------------------------------------------------------------------------
// Products with a small round factor

pub const PRODUCT_LAMBDAS: [f64; 4] = [1.0, 0.5, 0.25, 0.1];

fn product_records(cfg: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    let grid_n = cfg.grid.min(24);
    let mut out = Vec::new();
    // Flat second factor: Ein = Scal/ρ_max = 2 exactly.
    let flat = product_field(
        vec![Factor::sphere(2, 0.1)?, Factor::torus(2, 2.0 * std::f64::consts::PI, 0.0)?],
        "product",
    )?;
    let r = grid_invariants(&flat, &GridSample::lattice(flat.chart(), grid_n)?, &[])?;
    out.push(CheckRecord::close(
        "product_flat_ein_upper",
        json!({"lambda": 0.1, "bump": 0.0}),
        r.ein_upper,
        2.0,
        1e-6,
    ));
    let reference = ReferenceData::new(vec![(100.0, 2), (0.0, 2)]);
    let p = reference.point_data();
    out.push(CheckRecord::close(
        "product_flat_ein_upper_reference",
        json!({"lambda": 0.1, "bump": 0.0}),
        ein_pointwise(&p),
        2.0,
        TABLE_TOL,
    ));
    let mut previous: Option<f64> = None;
    for lambda in PRODUCT_LAMBDAS {
        let field = product_field(
            vec![Factor::sphere(2, lambda)?, Factor::torus(2, 2.0 * std::f64::consts::PI, 0.3)?],
            "product",
        )?;
        let r = grid_invariants(&field, &GridSample::lattice(field.chart(), grid_n)?, &[1.0, 1.9])?;
        let gap = 2.0 - r.ein_upper;
        out.push(CheckRecord::new(
            "product_ein_upper_below_two",
            json!({"lambda": lambda, "bump": 0.3, "grid": grid_n}),
            r.ein_upper,
            2.0,
            gap,
            gap > 0.0 && r.ein_upper > 0.0,
        ));
        if let Some(prev) = previous {
            out.push(CheckRecord::new(
                "product_ein_upper_increases_as_lambda_shrinks",
                json!({"lambda": lambda}),
                r.ein_upper,
                prev,
                r.ein_upper - prev,
                r.ein_upper > prev,
            ));
        }
        previous = Some(r.ein_upper);
        if lambda <= 0.1 {
            let min = r.ein_k_min.iter().map(|m| m.min_eig).fold(f64::INFINITY, f64::min);
            out.push(CheckRecord::new(
                "product_small_lambda_ein_k_positive",
                json!({"lambda": lambda, "k": [1.0, 1.9]}),
                min,
                0.0,
                min,
                min > TAU,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            dims: vec![3, 4, 5],
            samples: 200,
            seed: 7,
            grid: 16,
        }
    }

    #[test]
    fn berger_table_examples() {
        assert_eq!(berger_table(1, 2.0), (1.0, ExtendedReal::NegInfinity));
        let (u, l) = berger_table(1, 3.0);
        assert!((u - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(l, ExtendedReal::Finite(-1.0));
        assert_eq!(berger_table(1, 0.5).0, 1.0 + 4.0 / 3.0);
        assert_eq!(berger_table(1, 4.0), (0.0, ExtendedReal::Finite(0.0)));
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL.into_iter().chain([Suite::All]) {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_identity_suite_passes() {
        let r = run_suite(Suite::Identities, &small()).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn small_implication_suite_passes() {
        let r = run_suite(Suite::Implications, &small()).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn suites_are_deterministic() {
        let a = run_suite(Suite::Identities, &small()).unwrap();
        let b = run_suite(Suite::Identities, &small()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn printed_appendix_form_fails() {
        let t = printed_schouten_equivalence(4, 500, 3).unwrap();
        assert!(t.counterexamples > 0);
    }

    #[test]
    fn cone_and_mkl_pass() {
        assert!(cone_records().iter().all(|r| r.pass));
        assert!(mkl_records().iter().all(|r| r.pass));
    }
}
