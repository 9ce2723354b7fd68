//! Analytic start-of-day forecast of recovery occupancy.
//!
//! A patient whose surgery starts at `Z` is in recovery at time `t` when
//! `Z + S <= t <= Z + T`, where `S` is the surgery duration and `T` the
//! moment-matched surgery-plus-recovery duration. The probability is
//! `F_S(t - Z) - F_T(t - Z)` wherever that is positive, and 0 elsewhere.
//! Summing over patients gives the mean and variance of the Poisson-binomial
//! occupancy, from which the normal-approximation 95% band follows.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::distributions::{erf, erfc, poisson_binomial_cdf, LognormalParams, ProbVector};
use crate::error::{Error, Result};
use crate::model::Patient;

/// Grid spacing used when none is given, in hours.
pub const DEFAULT_GRID_STEP: f64 = 0.1;

/// Normal quantile for a two-sided 95% band.
pub const BAND_Z: f64 = 1.96;

/// Below this separation of the two log standard deviations the crossing
/// point is treated as nonexistent.
pub const SIGMA_EQUAL_TOL: f64 = 1e-12;

/// Where `F_S(t - Z) - F_T(t - Z)` is positive.
///
/// The two standardized log arguments cross at most once. Which side of the
/// crossing carries positive mass depends on which log standard deviation is
/// larger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportBound {
    /// `sigma_hat == sigma`: no crossing, positive for all `t > Z` whenever
    /// `mu_hat > mu`.
    Unbounded,
    /// `sigma_hat < sigma`: positive only for `Z < t < bound`.
    Upper(f64),
    /// `sigma_hat > sigma`: positive only for `t > bound`.
    Lower(f64),
}

impl SupportBound {
    /// The absolute time where the two standardized arguments coincide.
    pub fn crossing(&self) -> Option<f64> {
        match *self {
            SupportBound::Unbounded => None,
            SupportBound::Upper(t) | SupportBound::Lower(t) => Some(t),
        }
    }
}

/// Crossing time `Z + exp((sigma_hat mu - sigma mu_hat) / (sigma_hat - sigma))`
/// and the side of it on which the in-recovery probability can be nonzero.
pub fn support_bound(
    surgery: &LognormalParams,
    combined: &LognormalParams,
    start: f64,
) -> SupportBound {
    let (s, s_hat) = (surgery.sigma(), combined.sigma());
    let gap = s_hat - s;
    if gap.abs() < SIGMA_EQUAL_TOL {
        return SupportBound::Unbounded;
    }
    let crossing = start + ((s_hat * surgery.mu - s * combined.mu) / gap).exp();
    if gap < 0.0 {
        SupportBound::Upper(crossing)
    } else {
        SupportBound::Lower(crossing)
    }
}

/// `Phi(a) - Phi(b)` for `a > b`, choosing the tail that avoids cancellation.
fn normal_interval(a: f64, b: f64) -> f64 {
    let (a, b) = (a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2);
    let diff = if b >= 0.0 {
        0.5 * (erfc(b) - erfc(a))
    } else if a <= 0.0 {
        0.5 * (erfc(-a) - erfc(-b))
    } else {
        0.5 * (erf(a) - erf(b))
    };
    diff.clamp(0.0, 1.0)
}

/// Probability the patient is in recovery at time `t` given a surgery start.
///
/// Does not look at `needs_recovery`; the aggregate functions filter on it.
pub fn in_recovery_prob(patient: &Patient, start: f64, t: f64) -> f64 {
    recovery_prob_raw(&patient.surgery, &patient.combined, t - start)
}

/// In-recovery probability at `elapsed` hours after the surgery start.
pub(crate) fn recovery_prob_raw(
    surgery: &LognormalParams,
    combined: &LognormalParams,
    elapsed: f64,
) -> f64 {
    if elapsed <= 0.0 {
        return 0.0;
    }
    let a = surgery.z_score(elapsed);
    let b = combined.z_score(elapsed);
    if a <= b {
        return 0.0;
    }
    normal_interval(a, b)
}

fn recovery_patients<'a>(
    patients: &'a [Patient],
    starts: &'a [f64],
) -> impl Iterator<Item = (&'a Patient, f64)> {
    assert_eq!(
        patients.len(),
        starts.len(),
        "one start time is required per patient"
    );
    patients
        .iter()
        .zip(starts.iter().copied())
        .filter(|(p, _)| p.needs_recovery)
}

/// Per-patient in-recovery probabilities at `t` for recovery-requiring patients.
pub fn recovery_probs(patients: &[Patient], starts: &[f64], t: f64) -> ProbVector {
    let probs = recovery_patients(patients, starts)
        .map(|(p, z)| in_recovery_prob(p, z, t))
        .collect();
    ProbVector::new(probs).expect("in-recovery probabilities are clamped to [0, 1]")
}

/// `E[N(t)]`
pub fn expected_occupancy(patients: &[Patient], starts: &[f64], t: f64) -> f64 {
    recovery_patients(patients, starts)
        .map(|(p, z)| in_recovery_prob(p, z, t))
        .sum()
}

/// `Var[N(t)] = sum p (1 - p)`
pub fn occupancy_variance(patients: &[Patient], starts: &[f64], t: f64) -> f64 {
    recovery_patients(patients, starts)
        .map(|(p, z)| {
            let q = in_recovery_prob(p, z, t);
            q * (1.0 - q)
        })
        .sum()
}

/// Exact `Pr(N(t) <= k)` from the Poisson-binomial CDF.
pub fn exact_occupancy_cdf(patients: &[Patient], starts: &[f64], t: f64, k: i64) -> f64 {
    poisson_binomial_cdf(&recovery_probs(patients, starts, t), k)
}

/// Evaluation points `0, step, 2 step, ...` up to and including `horizon`
/// (when `step` divides it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    step: f64,
    len: usize,
}

impl TimeGrid {
    pub fn new(step: f64, horizon: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::param(
                "grid_step",
                format!("must be > 0, got {step}"),
            ));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::param(
                "horizon",
                format!("must be > 0, got {horizon}"),
            ));
        }
        // Absorb representation error, e.g. 24 / 0.1 = 239.99999999999997.
        let intervals = (horizon / step + 1e-9).floor() as usize;
        Ok(TimeGrid {
            step,
            len: intervals + 1,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.time(i))
    }

    /// Smallest index whose time is strictly greater than `x`, or `len` if none.
    pub(crate) fn first_after(&self, x: f64) -> usize {
        if x < 0.0 {
            return 0;
        }
        let mut i = ((x / self.step).floor() as usize).min(self.len);
        while i > 0 && self.time(i - 1) > x {
            i -= 1;
        }
        while i < self.len && self.time(i) <= x {
            i += 1;
        }
        i.min(self.len)
    }

    /// Smallest index whose time is `>= x`, or `len` if none.
    pub(crate) fn first_at_or_after(&self, x: f64) -> usize {
        if x <= 0.0 {
            return 0;
        }
        let mut i = ((x / self.step).ceil() as usize).min(self.len);
        while i > 0 && self.time(i - 1) >= x {
            i -= 1;
        }
        while i < self.len && self.time(i) < x {
            i += 1;
        }
        i.min(self.len)
    }
}

/// Index range of grid points where a patient's in-recovery probability can
/// be nonzero.
fn active_range(grid: &TimeGrid, patient: &Patient, start: f64) -> std::ops::Range<usize> {
    let mut lo = grid.first_after(start);
    let mut hi = grid.len();
    match support_bound(&patient.surgery, &patient.combined, start) {
        SupportBound::Unbounded => {}
        SupportBound::Upper(c) => hi = hi.min(grid.first_at_or_after(c)),
        SupportBound::Lower(c) => lo = lo.max(grid.first_after(c)),
    }
    lo..hi.max(lo)
}

/// Adds each recovery patient's probability curve into `mean`, and
/// `p (1 - p)` into `variance` when given.
pub(crate) fn accumulate_on_grid(
    patients: &[Patient],
    starts: &[f64],
    grid: &TimeGrid,
    mean: &mut [f64],
    mut variance: Option<&mut [f64]>,
) {
    for (patient, z) in recovery_patients(patients, starts) {
        for i in active_range(grid, patient, z) {
            let p = recovery_prob_raw(&patient.surgery, &patient.combined, grid.time(i) - z);
            mean[i] += p;
            if let Some(var) = variance.as_deref_mut() {
                var[i] += p * (1.0 - p);
            }
        }
    }
}

/// `E[N(t)]` at every grid point.
pub fn expected_occupancy_on_grid(
    patients: &[Patient],
    starts: &[f64],
    grid: &TimeGrid,
) -> Vec<f64> {
    let mut mean = vec![0.0; grid.len()];
    accumulate_on_grid(patients, starts, grid, &mut mean, None);
    mean
}

/// Mean, variance and 95% band of the occupancy on a regular time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyCurve {
    pub grid_step: f64,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl OccupancyCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest expected occupancy on the grid.
    pub fn max_mean(&self) -> f64 {
        self.mean.iter().copied().fold(0.0, f64::max)
    }
}

pub fn occupancy_curve(
    patients: &[Patient],
    starts: &[f64],
    grid_step: f64,
    horizon: f64,
) -> Result<OccupancyCurve> {
    let grid = TimeGrid::new(grid_step, horizon)?;
    let mut mean = vec![0.0; grid.len()];
    let mut variance = vec![0.0; grid.len()];
    accumulate_on_grid(patients, starts, &grid, &mut mean, Some(&mut variance));
    let half_width: Vec<f64> = variance.iter().map(|v| BAND_Z * v.sqrt()).collect();
    Ok(OccupancyCurve {
        grid_step,
        times: grid.times().collect(),
        lower: mean.iter().zip(&half_width).map(|(m, h)| m - h).collect(),
        upper: mean.iter().zip(&half_width).map(|(m, h)| m + h).collect(),
        mean,
        variance,
    })
}
