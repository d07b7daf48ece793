//! Seeded random point data for identity and implication checks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensors::PointData;

/// Default attempt budget for [`PointSampler::draw`].
pub const MAX_ATTEMPTS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct PointSampler {
    rng: ChaCha8Rng,
}

impl PointSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream `stream` of the generator seeded with `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    fn symmetric(&mut self, n: usize, half_width: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.rng.gen_range(-half_width..=half_width);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Cholesky-style factor `L = I + 0.3·U`, `U` uniform in `[−1, 1]`,
    /// redrawn until `L Lᵀ` is comfortably positive definite.
    fn factor(&mut self, n: usize) -> DMatrix<f64> {
        loop {
            let u: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| self.rng.gen_range(-1.0..=1.0));
            let l = DMatrix::identity(n, n) + u * 0.3;
            if l.determinant().abs() > 0.05 {
                return l;
            }
        }
    }

    /// `g = L Lᵀ` with `L = I + 0.3·U`.
    pub fn metric(&mut self, n: usize) -> DMatrix<f64> {
        let l = self.factor(n);
        &l * l.transpose()
    }

    /// Symmetric matrix with entries uniform in `[−2, 2]`.
    pub fn ricci(&mut self, n: usize) -> DMatrix<f64> {
        self.symmetric(n, 2.0)
    }

    /// `(g, Ric, Scal)` with `Scal` uniform in `[−n², n²]`, unrelated to Ric.
    pub fn independent(&mut self, n: usize) -> PointData {
        let g = self.metric(n);
        let ric = self.ricci(n);
        let bound = (n * n) as f64;
        let scal = self.rng.gen_range(-bound..=bound);
        PointData::new(g, ric, scal).expect("sampled metric is positive definite")
    }

    /// `(g, Ric, tr_g Ric)`.
    pub fn consistent(&mut self, n: usize) -> PointData {
        let g = self.metric(n);
        let ric = self.ricci(n);
        PointData::consistent(g, ric).expect("sampled metric is positive definite")
    }

    /// Ricci close to a multiple of g: `Ric = c·g + s·L E Lᵀ` with `c` uniform
    /// in `[−1, 2]`, `s` log-uniform in `[10⁻³, 1]` and `E` uniform in
    /// `[−1, 1]`, so the g-relative Ricci spectrum is `c + s·spec(E)`.
    pub fn near_einstein(&mut self, n: usize) -> PointData {
        let l = self.factor(n);
        let g = &l * l.transpose();
        let c = self.rng.gen_range(-1.0..=2.0);
        let s = 10f64.powf(self.rng.gen_range(-3.0..=0.0));
        let e = self.symmetric(n, 1.0);
        let ric = &g * c + &l * e * l.transpose() * s;
        PointData::consistent(g, ric).expect("sampled metric is positive definite")
    }

    /// Consistent data, from either [`Self::consistent`] or
    /// [`Self::near_einstein`] with equal probability.
    pub fn mixed(&mut self, n: usize) -> PointData {
        if self.rng.gen_bool(0.5) {
            self.consistent(n)
        } else {
            self.near_einstein(n)
        }
    }

    /// Calls `f` until it yields a value, giving up after `max_attempts`.
    /// Used to discard samples inside a tolerance band or outside a hypothesis.
    pub fn draw<T>(
        &mut self,
        what: &str,
        max_attempts: usize,
        mut f: impl FnMut(&mut Self) -> Result<Option<T>>,
    ) -> Result<(T, usize)> {
        for attempt in 1..=max_attempts {
            if let Some(v) = f(self)? {
                return Ok((v, attempt));
            }
        }
        Err(Error::SamplingExhausted {
            what: what.to_string(),
            attempts: max_attempts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_are_reproducible_and_distinct() {
        let a = PointSampler::with_stream(42, 3).independent(4);
        let b = PointSampler::with_stream(42, 3).independent(4);
        let c = PointSampler::with_stream(42, 4).independent(4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn consistent_data_has_trace_scal() {
        let mut s = PointSampler::new(1);
        for n in 2..=6 {
            assert!(s.consistent(n).consistency_defect().abs() < 1e-12);
            assert!(s.near_einstein(n).consistency_defect().abs() < 1e-12);
        }
    }

    #[test]
    fn independent_scal_in_range() {
        let mut s = PointSampler::new(9);
        for _ in 0..100 {
            let p = s.independent(3);
            assert!(p.scal.abs() <= 9.0);
            assert!(p.ric.iter().all(|v| v.abs() <= 2.0));
        }
    }

    #[test]
    fn draw_gives_up() {
        let mut s = PointSampler::new(0);
        let r: Result<(u8, usize)> = s.draw("never", 10, |_| Ok(None));
        assert!(matches!(r, Err(Error::SamplingExhausted { attempts: 10, .. })));
    }
}
