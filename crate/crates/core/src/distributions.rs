//! Lognormal duration primitives and the Poisson-binomial distribution.
//!
//! Surgery, recovery and the combined surgery-plus-recovery durations are all
//! lognormal. The combined duration is not closed under summation, so it is
//! approximated by the lognormal with the same first two moments as the sum.
//!
//! The number of patients in recovery at a fixed time is a sum of independent
//! non-identical Bernoulli variables. Its CDF is evaluated by inverting the
//! characteristic function on the `n + 1` roots of unity, with a
//! dynamic-programming convolution kept alongside as an independent oracle.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Error function.
///
/// Delegates to the `libm` port of the FreeBSD/musl implementation, which is
/// accurate to within one ulp; the unit tests pin it to `1e-13` absolute
/// against 40-digit reference values.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Complementary error function, `1 - erf(x)` without cancellation.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Parameters `(mu, sigma2)` of a lognormal duration, in log-hours.
///
/// `sigma2` is the variance of the logarithm, not of the duration itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalParams {
    pub mu: f64,
    pub sigma2: f64,
}

impl LognormalParams {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        let params = LognormalParams { mu, sigma2 };
        params.validate()?;
        Ok(params)
    }

    /// Checks the invariants for values that bypassed [`LognormalParams::new`]
    /// (e.g. deserialized ones).
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::param(
                "mu",
                format!("must be finite, got {}", self.mu),
            ));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(Error::param(
                "sigma2",
                format!("must be finite and > 0, got {}", self.sigma2),
            ));
        }
        let mean = self.mean();
        if !mean.is_finite() {
            return Err(Error::NonFiniteMoment {
                quantity: "mean",
                mu: self.mu,
                sigma2: self.sigma2,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// `exp(mu + sigma2 / 2)`
    #[inline]
    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma2).exp()
    }

    /// `(exp(sigma2) - 1) * exp(2 mu + sigma2)`
    #[inline]
    pub fn variance(&self) -> f64 {
        self.sigma2.exp_m1() * (2.0 * self.mu + self.sigma2).exp()
    }

    #[inline]
    pub fn median(&self) -> f64 {
        self.mu.exp()
    }

    /// Standardized log argument `(ln t - mu) / sigma`.
    #[inline]
    pub(crate) fn z_score(&self, t: f64) -> f64 {
        (t.ln() - self.mu) / self.sigma()
    }
}

/// Lognormal CDF, `1/2 + 1/2 erf((ln t - mu) / (sqrt(2) sigma))`; zero for `t <= 0`.
pub fn lognormal_cdf(t: f64, params: &LognormalParams) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let z = params.z_score(t) / SQRT_2;
    (0.5 + 0.5 * erf(z)).clamp(0.0, 1.0)
}

/// Lognormal survival function `1 - F(t)`, computed through `erfc` so the
/// upper tail keeps its relative precision.
pub fn lognormal_sf(t: f64, params: &LognormalParams) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let z = params.z_score(t) / SQRT_2;
    (0.5 * erfc(z)).clamp(0.0, 1.0)
}

/// Fits a lognormal to the sum of two independent lognormals by matching the
/// mean and variance of the sum.
pub fn moment_match_sum(
    surgery: &LognormalParams,
    recovery: &LognormalParams,
) -> Result<LognormalParams> {
    surgery.validate()?;
    recovery.validate()?;
    let mean = surgery.mean() + recovery.mean();
    if !mean.is_finite() {
        return Err(Error::NonFiniteMoment {
            quantity: "combined mean",
            mu: surgery.mu.max(recovery.mu),
            sigma2: surgery.sigma2.max(recovery.sigma2),
        });
    }
    let variance = surgery.variance() + recovery.variance();
    let second_moment = variance + mean * mean;
    if !variance.is_finite() || !second_moment.is_finite() {
        return Err(Error::NonFiniteMoment {
            quantity: "combined variance",
            mu: surgery.mu.max(recovery.mu),
            sigma2: surgery.sigma2.max(recovery.sigma2),
        });
    }
    // ln(M^2 / sqrt(V + M^2)) and ln((V + M^2) / M^2), rearranged so that
    // ln_1p keeps precision when V << M^2.
    let ratio = variance / (mean * mean);
    let sigma2 = ratio.ln_1p();
    let mu = mean.ln() - 0.5 * sigma2;
    LognormalParams::new(mu, sigma2)
}

/// Success probabilities of independent Bernoulli trials.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::param("probs", format!("{bad} is not in [0, 1]")));
        }
        Ok(ProbVector(probs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn variance(&self) -> f64 {
        self.0.iter().map(|p| p * (1.0 - p)).sum()
    }
}

/// Largest imaginary residue tolerated in the inverted characteristic
/// function sum before it is considered a numerical failure.
pub const IMAGINARY_RESIDUE_TOL: f64 = 1e-9;

/// Values `x_l = prod_j (1 - p_j + p_j e^{i w l})` for `l = 0..=n`, with
/// `w = 2 pi / (n + 1)`.
fn characteristic_values(probs: &[f64]) -> Vec<Complex64> {
    let n = probs.len();
    let omega = 2.0 * PI / (n as f64 + 1.0);
    (0..=n)
        .map(|l| {
            let z = Complex64::from_polar(1.0, omega * l as f64);
            probs
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, &p| acc * (1.0 - p + p * z))
        })
        .collect()
}

/// Unnormalised inversion sum for `F(k)`, `0 <= k < n`, including the
/// removable `l = 0` term `(k + 1) x_0 = k + 1`.
fn inversion_sum(x: &[Complex64], k: usize) -> Complex64 {
    let n1 = x.len() as f64;
    let omega = 2.0 * PI / n1;
    let kp1 = (k + 1) as f64;
    let mut sum = Complex64::new(kp1, 0.0);
    for (l, xl) in x.iter().enumerate().skip(1) {
        let theta = omega * l as f64;
        let numer = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -theta * kp1);
        let denom = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -theta);
        sum += numer * xl / denom;
    }
    sum / n1
}

/// Same as [`poisson_binomial_cdf`] but returns the complex inversion sum
/// before the real part is taken, so callers can inspect the residue.
pub fn poisson_binomial_cdf_complex(probs: &ProbVector, k: i64) -> Complex64 {
    let n = probs.len() as i64;
    if k < 0 {
        return Complex64::new(0.0, 0.0);
    }
    if k >= n {
        return Complex64::new(1.0, 0.0);
    }
    inversion_sum(&characteristic_values(probs.as_slice()), k as usize)
}

/// Poisson-binomial CDF `Pr(N <= k)` by discrete Fourier inversion of the
/// characteristic function.
///
/// `k < 0` gives 0 and `k >= n` gives 1.
pub fn poisson_binomial_cdf(probs: &ProbVector, k: i64) -> f64 {
    poisson_binomial_cdf_complex(probs, k).re.clamp(0.0, 1.0)
}

/// `Pr(N <= k)` for every `k = 0..=n`, sharing one characteristic-function
/// evaluation across all `k`.
pub fn poisson_binomial_cdf_table(probs: &ProbVector) -> Vec<f64> {
    let n = probs.len();
    let x = characteristic_values(probs.as_slice());
    let mut table: Vec<f64> = (0..n)
        .map(|k| inversion_sum(&x, k).re.clamp(0.0, 1.0))
        .collect();
    table.push(1.0);
    table
}

/// Poisson-binomial PMF by sequential convolution over the trials.
pub fn poisson_binomial_pmf_oracle(probs: &ProbVector) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(probs.len() + 1);
    pmf.push(1.0);
    for &p in probs.as_slice() {
        pmf.push(0.0);
        for j in (1..pmf.len()).rev() {
            pmf[j] = pmf[j] * (1.0 - p) + pmf[j - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    pmf
}

/// Reference Poisson-binomial CDF using real arithmetic only.
pub fn poisson_binomial_cdf_oracle(probs: &ProbVector, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let n = probs.len();
    if k as usize >= n {
        return 1.0;
    }
    let k = k as usize;
    // Only the first k + 1 PMF entries are needed.
    let mut pmf = vec![0.0; k + 1];
    pmf[0] = 1.0;
    for (i, &p) in probs.as_slice().iter().enumerate() {
        let top = (i + 1).min(k);
        for j in (1..=top).rev() {
            pmf[j] = pmf[j] * (1.0 - p) + pmf[j - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    pmf.iter().sum::<f64>().clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// erf at 50 points on [-6, 6], reference values from 40-digit arithmetic.
    #[allow(clippy::excessive_precision)]
    const ERF_REFERENCE: [(f64, f64); 50] = [
        (-6.0, -0.99999999999999997848),
        (-5.755102040816326, -0.99999999999999960126),
        (-5.510204081632653, -0.99999999999999343586),
        (-5.26530612244898, -0.99999999999990398185),
        (-5.020408163265306, -0.99999999999875179285),
        (-4.775510204081633, -0.99999999998557703256),
        (-4.530612244897959, -0.99999999985183543012),
        (-4.285714285714286, -0.99999999864650875271),
        (-4.040816326530612, -0.99999998900229199493),
        (-3.795918367346939, -0.99999992049095773293),
        (-3.5510204081632653, -0.99999948837504729566),
        (-3.306122448979592, -0.99999706852031909922),
        (-3.061224489795918, -0.99998503651354251911),
        (-2.816326530612245, -0.99993191691828060874),
        (-2.5714285714285716, -0.9997236850716134245),
        (-2.326530612244898, -0.99899887770326483886),
        (-2.0816326530612246, -0.99675867158256044177),
        (-1.836734693877551, -0.99061044806916482322),
        (-1.5918367346938775, -0.9756269434529250321),
        (-1.346938775510204, -0.9432016088800122449),
        (-1.1020408163265305, -0.88089022242932659439),
        (-0.8571428571428571, -0.77455768300548692977),
        (-0.6122448979591837, -0.61342485306823342771),
        (-0.3673469387755102, -0.39659278322805918354),
        (-0.12244897959183673, -0.13748141610141345016),
        (0.12244897959183673, 0.13748141610141345016),
        (0.3673469387755102, 0.39659278322805918354),
        (0.6122448979591837, 0.61342485306823342771),
        (0.8571428571428571, 0.77455768300548692977),
        (1.1020408163265305, 0.88089022242932659439),
        (1.346938775510204, 0.9432016088800122449),
        (1.5918367346938775, 0.9756269434529250321),
        (1.836734693877551, 0.99061044806916482322),
        (2.0816326530612246, 0.99675867158256044177),
        (2.326530612244898, 0.99899887770326483886),
        (2.5714285714285716, 0.9997236850716134245),
        (2.816326530612245, 0.99993191691828060874),
        (3.061224489795918, 0.99998503651354251911),
        (3.306122448979592, 0.99999706852031909922),
        (3.5510204081632653, 0.99999948837504729566),
        (3.795918367346939, 0.99999992049095773293),
        (4.040816326530612, 0.99999998900229199493),
        (4.285714285714286, 0.99999999864650875271),
        (4.530612244897959, 0.99999999985183543012),
        (4.775510204081633, 0.99999999998557703256),
        (5.020408163265306, 0.99999999999875179285),
        (5.26530612244898, 0.99999999999990398185),
        (5.510204081632653, 0.99999999999999343586),
        (5.755102040816326, 0.99999999999999960126),
        (6.0, 0.99999999999999997848),
    ];

    fn params(mu: f64, sigma2: f64) -> LognormalParams {
        LognormalParams::new(mu, sigma2).unwrap()
    }

    fn pv(p: &[f64]) -> ProbVector {
        ProbVector::new(p.to_vec()).unwrap()
    }

    #[test]
    fn erf_matches_reference() {
        for (x, expected) in ERF_REFERENCE {
            let got = erf(x);
            assert!(
                (got - expected).abs() <= 1e-13,
                "erf({x}) = {got}, want {expected}"
            );
        }
    }

    #[test]
    fn params_reject_bad_values() {
        assert!(LognormalParams::new(0.0, 0.0).is_err());
        assert!(LognormalParams::new(0.0, -1.0).is_err());
        assert!(LognormalParams::new(f64::NAN, 1.0).is_err());
        assert!(LognormalParams::new(700.0, 100.0).is_err());
    }

    #[test]
    fn cdf_at_median_is_half() {
        for &(mu, s2) in &[(1.0, 0.25), (-1.5, 2.0), (0.3, 0.01)] {
            let p = params(mu, s2);
            assert!((lognormal_cdf(p.median(), &p) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_support_boundary() {
        let p = params(1.0, 0.25);
        assert_eq!(lognormal_cdf(0.0, &p), 0.0);
        assert_eq!(lognormal_cdf(-3.0, &p), 0.0);
        assert_eq!(lognormal_sf(0.0, &p), 1.0);
    }

    #[test]
    fn cdf_matches_quadrature() {
        // Integral of the lognormal(1, 0.25) density over [0, 3], adaptive
        // Gauss-Legendre quadrature at 40 digits.
        let expected = 0.578_174_100_802_873_1;
        let got = lognormal_cdf(3.0, &params(1.0, 0.25));
        assert!((got - expected).abs() < 1e-14, "{got}");
    }

    #[test]
    fn sf_complements_cdf() {
        let p = params(0.4, 0.3);
        for t in [0.1, 0.7, 1.5, 4.0, 30.0] {
            assert!((lognormal_cdf(t, &p) + lognormal_sf(t, &p) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn moment_match_identical_inputs() {
        let p = params(0.7, 0.4);
        let m = moment_match_sum(&p, &p).unwrap();
        let want = 2.0 * (0.7f64 + 0.2).exp();
        assert!((m.mean() - want).abs() / want < 1e-12);
    }

    #[test]
    fn moment_match_worked_example() {
        let s = params(1.0, 0.25);
        let r = params(0.5, 0.25);
        let m = moment_match_sum(&s, &r).unwrap();
        let mean = 1.125f64.exp() + 0.625f64.exp();
        let var = (0.25f64.exp() - 1.0) * 2.25f64.exp() + (0.25f64.exp() - 1.0) * 1.25f64.exp();
        assert!((m.mean() - mean).abs() / mean <= 1e-12);
        assert!((m.variance() - var).abs() / var <= 1e-12);
    }

    #[test]
    fn moment_match_rejects_overflow() {
        let big = LognormalParams {
            mu: 300.0,
            sigma2: 200.0,
        };
        let ok = params(0.0, 1.0);
        assert!(matches!(
            moment_match_sum(&big, &ok),
            Err(Error::NonFiniteMoment { .. })
        ));
        // Mean is finite here but exp(2 mu + sigma2) is not.
        let edge = LognormalParams {
            mu: 400.0,
            sigma2: 30.0,
        };
        assert!(edge.mean().is_finite());
        assert!(moment_match_sum(&edge, &ok).is_err());
    }

    #[test]
    fn poisson_binomial_examples() {
        assert_eq!(poisson_binomial_cdf(&pv(&[0.0, 0.0, 0.0]), 0), 1.0);
        assert!((poisson_binomial_cdf(&pv(&[0.5]), 0) - 0.5).abs() < 1e-15);
        // Enumeration: Pr(0) = 0.08, Pr(1) = 0.42.
        let v = pv(&[0.2, 0.5, 0.8]);
        assert!((poisson_binomial_cdf(&v, 1) - 0.5).abs() < 1e-12);
        assert!((poisson_binomial_cdf_oracle(&v, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn poisson_binomial_conventions() {
        let v = pv(&[0.3; 10]);
        assert_eq!(poisson_binomial_cdf(&v, -1), 0.0);
        assert_eq!(poisson_binomial_cdf(&v, 10), 1.0);
        assert_eq!(poisson_binomial_cdf(&v, 15), 1.0);
        assert_eq!(poisson_binomial_cdf_oracle(&v, 10), 1.0);
        assert_eq!(poisson_binomial_cdf_oracle(&pv(&[1.0, 1.0]), 1), 0.0);
        assert!(poisson_binomial_cdf(&pv(&[1.0, 1.0]), 1).abs() < 1e-12);
        assert_eq!(poisson_binomial_cdf(&ProbVector::default(), 0), 1.0);
    }

    #[test]
    fn prob_vector_validates() {
        assert!(ProbVector::new(vec![0.1, 1.2]).is_err());
        assert!(ProbVector::new(vec![-0.1]).is_err());
        assert!(ProbVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn table_agrees_with_pointwise() {
        let v = pv(&[0.1, 0.9, 0.35, 0.6, 0.02]);
        let table = poisson_binomial_cdf_table(&v);
        assert_eq!(table.len(), 6);
        for (k, f) in table.iter().enumerate() {
            assert!((f - poisson_binomial_cdf(&v, k as i64)).abs() < 1e-15);
        }
    }

    fn prob_vec_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..=1.0, 1..=100)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn dft_matches_convolution(probs in prob_vec_strategy()) {
            let v = ProbVector::new(probs).unwrap();
            let n = v.len() as i64;
            for k in 0..=n {
                let residue = poisson_binomial_cdf_complex(&v, k).im.abs();
                prop_assert!(residue < IMAGINARY_RESIDUE_TOL);
                let a = poisson_binomial_cdf(&v, k);
                let b = poisson_binomial_cdf_oracle(&v, k);
                prop_assert!((a - b).abs() <= 1e-9, "k={} dft={} dp={}", k, a, b);
            }
            let table = poisson_binomial_cdf_table(&v);
            prop_assert!((table[v.len()] - 1.0).abs() <= 1e-12);
            // Clamping can leave round-off sized dips; monotone up to 1e-12.
            for w in table.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12);
            }
        }

        #[test]
        fn moment_match_round_trip(
            mu in -2.0f64..3.0, s2 in 0.01f64..2.0,
            mu_r in -2.0f64..3.0, s2_r in 0.01f64..2.0,
        ) {
            let s = LognormalParams::new(mu, s2).unwrap();
            let r = LognormalParams::new(mu_r, s2_r).unwrap();
            let m = moment_match_sum(&s, &r).unwrap();
            let mean = s.mean() + r.mean();
            let var = s.variance() + r.variance();
            prop_assert!((m.mean() - mean).abs() / mean <= 1e-12);
            prop_assert!((m.variance() - var).abs() / var <= 1e-12);
        }

        #[test]
        fn cdf_is_monotone(mu in -2.0f64..3.0, s2 in 0.01f64..2.0, a in 1e-6f64..50.0, b in 1e-6f64..50.0) {
            let p = LognormalParams::new(mu, s2).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (fl, fh) = (lognormal_cdf(lo, &p), lognormal_cdf(hi, &p));
            prop_assert!(fl <= fh);
            prop_assert!((0.0..=1.0).contains(&fl));
        }
    }
}
