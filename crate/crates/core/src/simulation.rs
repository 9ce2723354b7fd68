//! Monte Carlo oracle for the analytic forecast and a synthetic instance
//! generator.
//!
//! Sampling comes in two modes. [`SamplingMode::True`] draws surgery and
//! recovery durations independently and adds them, which is the process the
//! forecast approximates. [`SamplingMode::Matched`] draws the surgery and the
//! moment-matched total from one shared normal variate, so that
//! `Pr(S <= t < T) = max(0, F_S(t) - F_T(t))` holds exactly and the analytic
//! forecast is exact under sampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::LognormalParams;
use crate::error::{Error, Result};
use crate::forecast::{occupancy_curve, OccupancyCurve, TimeGrid};
use crate::model::{Instance, Patient, Schedule, Surgeon, DEFAULT_DAY_HOURS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Independent surgery and recovery draws, summed.
    True,
    /// Surgery and moment-matched total from a common normal variate.
    Matched,
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true" => Ok(SamplingMode::True),
            "matched" => Ok(SamplingMode::Matched),
            other => Err(Error::param(
                "mode",
                format!("expected `true` or `matched`, got `{other}`"),
            )),
        }
    }
}

fn draw_lognormal(params: &LognormalParams, z: f64) -> f64 {
    (params.mu + params.sigma() * z).exp()
}

/// Recovery entry and exit times for every recovery-requiring patient, in
/// storage order.
pub fn sample_day<R: Rng + ?Sized>(
    instance: &Instance,
    schedule: &Schedule,
    mode: SamplingMode,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    instance
        .patients()
        .iter()
        .zip(&schedule.starts)
        .filter(|(p, _)| p.needs_recovery)
        .map(|(p, &z)| sample_patient(p, z, mode, rng))
        .collect()
}

fn sample_patient<R: Rng + ?Sized>(
    patient: &Patient,
    start: f64,
    mode: SamplingMode,
    rng: &mut R,
) -> (f64, f64) {
    match mode {
        SamplingMode::True => {
            let surgery = draw_lognormal(&patient.surgery, rng.sample(StandardNormal));
            let recovery = draw_lognormal(&patient.recovery, rng.sample(StandardNormal));
            let entry = start + surgery;
            (entry, entry + recovery)
        }
        SamplingMode::Matched => {
            let z: f64 = rng.sample(StandardNormal);
            let entry = start + draw_lognormal(&patient.surgery, z);
            let exit = start + draw_lognormal(&patient.combined, z);
            (entry, exit.max(entry))
        }
    }
}

/// Sample statistics of simulated occupancy next to the analytic forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCurve {
    pub times: Vec<f64>,
    pub n_samples: usize,
    pub sample_mean: Vec<f64>,
    pub sample_variance: Vec<f64>,
    pub standard_error: Vec<f64>,
    /// Samples above the analytic upper band, per grid point.
    pub above: Vec<u64>,
    pub below: Vec<u64>,
    pub inside: Vec<u64>,
    pub analytic: OccupancyCurve,
}

impl EmpiricalCurve {
    /// Whether the analytic mean lies within `k` standard errors of the
    /// sample mean at grid point `i`.
    ///
    /// When every sample agrees the estimated standard error is zero; the
    /// sample mean then has a resolution of one count in `n`, and the
    /// tolerance becomes `k / n`.
    pub fn mean_agrees(&self, i: usize, k: f64) -> bool {
        let diff = (self.analytic.mean[i] - self.sample_mean[i]).abs();
        let se = self.standard_error[i];
        let tol = if se > 0.0 {
            k * se
        } else {
            k / self.n_samples as f64
        };
        diff <= tol
    }

    /// Number of grid points where [`EmpiricalCurve::mean_agrees`] holds.
    pub fn points_within(&self, k: f64) -> usize {
        (0..self.times.len())
            .filter(|&i| self.mean_agrees(i, k))
            .count()
    }
}

/// Simulates `n_samples` days and tallies occupancy at each grid point.
///
/// A patient counts toward time `t` when `entry <= t < exit`.
pub fn monte_carlo_curve<R: Rng + ?Sized>(
    instance: &Instance,
    schedule: &Schedule,
    n_samples: usize,
    grid_step: f64,
    mode: SamplingMode,
    rng: &mut R,
) -> Result<EmpiricalCurve> {
    if n_samples < 1 {
        return Err(Error::param("n_samples", "must be >= 1"));
    }
    if schedule.starts.len() != instance.patients().len() {
        return Err(Error::ScheduleLength {
            expected: instance.patients().len(),
            got: schedule.starts.len(),
        });
    }
    let grid = TimeGrid::new(grid_step, instance.day_hours())?;
    let analytic = occupancy_curve(
        instance.patients(),
        &schedule.starts,
        grid_step,
        instance.day_hours(),
    )?;
    let len = grid.len();

    let mut sum = vec![0u64; len];
    let mut sum_sq = vec![0u64; len];
    let mut above = vec![0u64; len];
    let mut below = vec![0u64; len];
    let mut inside = vec![0u64; len];
    let mut diff = vec![0i64; len + 1];

    for _ in 0..n_samples {
        diff.iter_mut().for_each(|d| *d = 0);
        for (entry, exit) in sample_day(instance, schedule, mode, rng) {
            let lo = grid.first_at_or_after(entry);
            let hi = grid.first_at_or_after(exit);
            if lo < hi {
                diff[lo] += 1;
                diff[hi] -= 1;
            }
        }
        let mut occupancy = 0i64;
        for i in 0..len {
            occupancy += diff[i];
            let n = occupancy as u64;
            sum[i] += n;
            sum_sq[i] += n * n;
            let x = occupancy as f64;
            if x > analytic.upper[i] {
                above[i] += 1;
            } else if x < analytic.lower[i] {
                below[i] += 1;
            } else {
                inside[i] += 1;
            }
        }
    }

    let n = n_samples as f64;
    let sample_mean: Vec<f64> = sum.iter().map(|&s| s as f64 / n).collect();
    let sample_variance: Vec<f64> = sum_sq
        .iter()
        .zip(&sample_mean)
        .map(|(&sq, &m)| {
            if n_samples < 2 {
                0.0
            } else {
                ((sq as f64 - n * m * m) / (n - 1.0)).max(0.0)
            }
        })
        .collect();
    let standard_error = sample_variance.iter().map(|v| (v / n).sqrt()).collect();

    Ok(EmpiricalCurve {
        times: grid.times().collect(),
        n_samples,
        sample_mean,
        sample_variance,
        standard_error,
        above,
        below,
        inside,
        analytic,
    })
}

/// Band coverage and mean error, pooled over all grid points and samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub above: f64,
    pub below: f64,
    pub inside: f64,
    /// Mean over grid points of |sample mean - analytic mean|.
    pub mean_abs_error: f64,
    /// Fraction of grid points where the analytic mean is within three
    /// standard errors of the sample mean.
    pub within_three_se: f64,
}

pub fn coverage_stats(empirical: &EmpiricalCurve) -> CoverageStats {
    let total: u64 = empirical
        .above
        .iter()
        .chain(&empirical.below)
        .chain(&empirical.inside)
        .sum();
    let frac = |v: &[u64]| v.iter().sum::<u64>() as f64 / total as f64;
    let points = empirical.times.len() as f64;
    let mean_abs_error = empirical
        .sample_mean
        .iter()
        .zip(&empirical.analytic.mean)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / points;
    CoverageStats {
        above: frac(&empirical.above),
        below: frac(&empirical.below),
        inside: frac(&empirical.inside),
        mean_abs_error,
        within_three_se: empirical.points_within(3.0) as f64 / points,
    }
}

/// Closed interval `[lo, hi]` sampled uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// Parameters of the synthetic instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenSpec {
    pub or_count: u32,
    pub surgeon_count: usize,
    pub patient_count: usize,
    pub recovery_fraction: f64,
    pub or_open_hours: f64,
    pub day_hours: f64,
    pub surgery_mu: Range,
    pub surgery_sigma2: Range,
    pub recovery_mu: Range,
    pub recovery_sigma2: Range,
    pub setup: Range,
    pub cleanup: Range,
    pub shift_start: Range,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            or_count: 21,
            surgeon_count: 35,
            patient_count: 61,
            recovery_fraction: 45.0 / 61.0,
            or_open_hours: 8.0,
            day_hours: DEFAULT_DAY_HOURS,
            surgery_mu: Range::new(0.5f64.ln(), 3.0f64.ln()),
            surgery_sigma2: Range::new(0.05, 0.5),
            recovery_mu: Range::new(0.25f64.ln(), 2.0f64.ln()),
            recovery_sigma2: Range::new(0.05, 0.5),
            setup: Range::new(0.1, 0.5),
            cleanup: Range::new(0.1, 0.5),
            shift_start: Range::new(0.0, 1.0),
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.or_count < 1 || self.surgeon_count < 1 || self.patient_count < 1 {
            return bad(format!(
                "counts must be >= 1 (ORs {}, surgeons {}, patients {})",
                self.or_count, self.surgeon_count, self.patient_count
            ));
        }
        if self.surgeon_count > self.patient_count {
            return bad(format!(
                "{} surgeons cannot each receive a patient out of {}",
                self.surgeon_count, self.patient_count
            ));
        }
        if !(0.0..=1.0).contains(&self.recovery_fraction) {
            return bad(format!(
                "recovery fraction {} is not in [0, 1]",
                self.recovery_fraction
            ));
        }
        if !(self.day_hours.is_finite() && self.day_hours > 0.0) {
            return bad(format!("day length must be > 0, got {}", self.day_hours));
        }
        if !(self.or_open_hours > 0.0 && self.or_open_hours <= self.day_hours) {
            return bad(format!(
                "OR opening hours {} must lie in (0, {}]",
                self.or_open_hours, self.day_hours
            ));
        }
        let ranges = [
            ("surgery_mu", self.surgery_mu),
            ("surgery_sigma2", self.surgery_sigma2),
            ("recovery_mu", self.recovery_mu),
            ("recovery_sigma2", self.recovery_sigma2),
            ("setup", self.setup),
            ("cleanup", self.cleanup),
            ("shift_start", self.shift_start),
        ];
        for (name, r) in ranges {
            if !r.is_valid() {
                return bad(format!(
                    "range {name} = [{}, {}] is empty or non-finite",
                    r.lo, r.hi
                ));
            }
        }
        if self.surgery_sigma2.lo <= 0.0 || self.recovery_sigma2.lo <= 0.0 {
            return bad("log-variance ranges must be strictly positive".into());
        }
        if self.setup.lo < 0.0 || self.cleanup.lo < 0.0 {
            return bad("setup and cleanup ranges must be nonnegative".into());
        }
        if self.shift_start.lo < 0.0 || self.shift_start.hi >= self.or_open_hours {
            return bad(format!(
                "shift starts must lie in [0, {}), got [{}, {}]",
                self.or_open_hours, self.shift_start.lo, self.shift_start.hi
            ));
        }
        Ok(())
    }

    /// Number of patients marked as needing recovery.
    pub fn recovery_count(&self) -> usize {
        ((self.recovery_fraction * self.patient_count as f64).round() as usize)
            .min(self.patient_count)
    }
}

/// [`generate_instance`] seeded from `spec.seed`.
pub fn generate_seeded(spec: &GenSpec) -> Result<Instance> {
    generate_instance(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))
}

/// Draws a synthetic day.
///
/// Every surgeon gets at least one patient and works in a single OR for the
/// whole day. Surgeons are placed, in random order, into the OR with the least
/// expected workload so far. Shifts end when the ORs close.
pub fn generate_instance<R: Rng + ?Sized>(spec: &GenSpec, rng: &mut R) -> Result<Instance> {
    spec.validate()?;
    let n_h = spec.surgeon_count;
    let n_p = spec.patient_count;

    let surgeons: Vec<Surgeon> = (0..n_h)
        .map(|h| {
            Surgeon::new(
                format!("h{:02}", h + 1),
                spec.shift_start.sample(rng),
                spec.or_open_hours,
            )
        })
        .collect();

    let mut surgeon_of: Vec<usize> = (0..n_h)
        .chain((n_h..n_p).map(|_| rng.random_range(0..n_h)))
        .collect();
    surgeon_of.shuffle(rng);

    let mut recovery = vec![false; n_p];
    recovery[..spec.recovery_count()]
        .iter_mut()
        .for_each(|r| *r = true);
    recovery.shuffle(rng);

    struct Draw {
        surgery: LognormalParams,
        recovery: LognormalParams,
        setup: f64,
        cleanup: f64,
    }
    let draws = (0..n_p)
        .map(|_| {
            Ok(Draw {
                surgery: LognormalParams::new(
                    spec.surgery_mu.sample(rng),
                    spec.surgery_sigma2.sample(rng),
                )?,
                recovery: LognormalParams::new(
                    spec.recovery_mu.sample(rng),
                    spec.recovery_sigma2.sample(rng),
                )?,
                setup: spec.setup.sample(rng),
                cleanup: spec.cleanup.sample(rng),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut workload = vec![0.0f64; n_h];
    for (p, d) in draws.iter().enumerate() {
        workload[surgeon_of[p]] += d.surgery.mean() + d.setup + d.cleanup;
    }
    let mut order: Vec<usize> = (0..n_h).collect();
    order.shuffle(rng);
    let mut or_load = vec![0.0f64; spec.or_count as usize];
    let mut or_of_surgeon = vec![0u32; n_h];
    for h in order {
        let (r, _) = or_load
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("or_count >= 1");
        or_load[r] += workload[h];
        or_of_surgeon[h] = r as u32 + 1;
    }

    let patients = draws
        .into_iter()
        .enumerate()
        .map(|(p, d)| {
            let h = surgeon_of[p];
            Patient::new(
                format!("p{:03}", p + 1),
                surgeons[h].id.clone(),
                or_of_surgeon[h],
                recovery[p],
                d.surgery,
                d.recovery,
            )?
            .with_turnover(d.setup, d.cleanup)
        })
        .collect::<Result<Vec<_>>>()?;

    Instance::new(
        surgeons,
        patients,
        spec.or_count,
        spec.or_open_hours,
        spec.day_hours,
    )
}
