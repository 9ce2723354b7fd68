//! Surgical case sequencing data model.
//!
//! An [`Instance`] fixes each patient's surgeon and operating room; a
//! [`Schedule`] assigns expected surgery start times. [`check_feasibility`]
//! tests a schedule against the sequencing constraints and [`meo`] evaluates
//! the maximum expected recovery occupancy it induces.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::distributions::{moment_match_sum, LognormalParams};
use crate::error::{Error, Result};
use crate::forecast::{expected_occupancy_on_grid, TimeGrid};

/// Slack used wherever a constraint compares schedule times, in hours.
pub const FEASIBILITY_TOL: f64 = 1e-9;

pub const DEFAULT_DAY_HOURS: f64 = 24.0;

/// Relative tolerance when comparing a supplied combined distribution against
/// the recomputed moment match.
const COMBINED_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surgeon {
    pub id: String,
    /// Start of shift, hours from midnight.
    pub shift_start: f64,
    /// End of shift, hours from midnight.
    pub shift_end: f64,
    /// Setup time when moving to a new OR. Carried for completeness; no
    /// constraint uses it.
    #[serde(default)]
    pub new_or_setup: f64,
}

impl Surgeon {
    pub fn new(id: impl Into<String>, shift_start: f64, shift_end: f64) -> Self {
        Surgeon {
            id: id.into(),
            shift_start,
            shift_end,
            new_or_setup: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patient {
    pub id: String,
    pub surgeon: String,
    /// Operating room, numbered from 1.
    pub or: u32,
    pub needs_recovery: bool,
    pub surgery: LognormalParams,
    pub recovery: LognormalParams,
    /// Moment-matched lognormal for surgery plus recovery.
    pub combined: LognormalParams,
    /// Expected surgery duration used for sequencing, in hours.
    pub expected_duration: f64,
    pub setup: f64,
    pub cleanup: f64,
}

impl Patient {
    /// Builds a patient with zero setup/cleanup and the surgery lognormal's
    /// mean as its expected duration.
    pub fn new(
        id: impl Into<String>,
        surgeon: impl Into<String>,
        or: u32,
        needs_recovery: bool,
        surgery: LognormalParams,
        recovery: LognormalParams,
    ) -> Result<Self> {
        let combined = moment_match_sum(&surgery, &recovery)?;
        let patient = Patient {
            id: id.into(),
            surgeon: surgeon.into(),
            or,
            needs_recovery,
            surgery,
            recovery,
            combined,
            expected_duration: surgery.mean(),
            setup: 0.0,
            cleanup: 0.0,
        };
        patient.validate()?;
        Ok(patient)
    }

    pub fn with_expected_duration(mut self, hours: f64) -> Result<Self> {
        self.expected_duration = hours;
        self.validate()?;
        Ok(self)
    }

    pub fn with_turnover(mut self, setup: f64, cleanup: f64) -> Result<Self> {
        self.setup = setup;
        self.cleanup = cleanup;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Error::InvalidInstance(format!("patient `{}`: {what}", self.id));
        if !(self.expected_duration.is_finite() && self.expected_duration > 0.0) {
            return Err(bad("expected duration must be > 0"));
        }
        if !(self.setup.is_finite() && self.setup >= 0.0) {
            return Err(bad("setup time must be >= 0"));
        }
        if !(self.cleanup.is_finite() && self.cleanup >= 0.0) {
            return Err(bad("cleanup time must be >= 0"));
        }
        let expected = moment_match_sum(&self.surgery, &self.recovery)?;
        let close =
            |a: f64, b: f64| (a - b).abs() <= COMBINED_REL_TOL * a.abs().max(b.abs()).max(1.0);
        if !close(expected.mu, self.combined.mu) || !close(expected.sigma2, self.combined.sigma2) {
            return Err(bad(
                "combined parameters do not match the moment-matched sum",
            ));
        }
        Ok(())
    }

    /// `tau + setup + cleanup`
    pub fn total_work(&self) -> f64 {
        self.expected_duration + self.setup + self.cleanup
    }
}

/// One day's surgical case sequencing problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    surgeons: Vec<Surgeon>,
    patients: Vec<Patient>,
    or_count: u32,
    or_open_hours: f64,
    day_hours: f64,
    surgeon_of: Vec<usize>,
    by_surgeon: Vec<Vec<usize>>,
    by_or: Vec<Vec<usize>>,
    patient_index: HashMap<String, usize>,
}

impl Instance {
    pub fn new(
        surgeons: Vec<Surgeon>,
        patients: Vec<Patient>,
        or_count: u32,
        or_open_hours: f64,
        day_hours: f64,
    ) -> Result<Self> {
        let invalid = |msg: String| Err(Error::InvalidInstance(msg));
        if !(day_hours.is_finite() && day_hours > 0.0) {
            return invalid(format!("day length must be > 0, got {day_hours}"));
        }
        if !(or_open_hours > 0.0 && or_open_hours <= day_hours) {
            return invalid(format!(
                "OR opening hours must lie in (0, {day_hours}], got {or_open_hours}"
            ));
        }

        let mut surgeon_index = HashMap::with_capacity(surgeons.len());
        for (i, s) in surgeons.iter().enumerate() {
            if !(0.0 <= s.shift_start && s.shift_start < s.shift_end && s.shift_end <= day_hours) {
                return invalid(format!(
                    "surgeon `{}` needs 0 <= shift start < shift end <= {day_hours}, got [{}, {}]",
                    s.id, s.shift_start, s.shift_end
                ));
            }
            if !(s.new_or_setup.is_finite() && s.new_or_setup >= 0.0) {
                return invalid(format!("surgeon `{}` has a negative OR setup time", s.id));
            }
            if surgeon_index.insert(s.id.clone(), i).is_some() {
                return invalid(format!("duplicate surgeon id `{}`", s.id));
            }
        }

        let mut surgeon_of = Vec::with_capacity(patients.len());
        let mut by_surgeon = vec![Vec::new(); surgeons.len()];
        let mut by_or = vec![Vec::new(); or_count as usize];
        let mut patient_index = HashMap::with_capacity(patients.len());
        for (i, p) in patients.iter().enumerate() {
            p.validate()?;
            let Some(&h) = surgeon_index.get(&p.surgeon) else {
                return invalid(format!(
                    "patient `{}` references unknown surgeon `{}`",
                    p.id, p.surgeon
                ));
            };
            if p.or == 0 || p.or > or_count {
                return invalid(format!(
                    "patient `{}` is assigned OR {} outside 1..={or_count}",
                    p.id, p.or
                ));
            }
            if patient_index.insert(p.id.clone(), i).is_some() {
                return invalid(format!("duplicate patient id `{}`", p.id));
            }
            surgeon_of.push(h);
            by_surgeon[h].push(i);
            by_or[p.or as usize - 1].push(i);
        }

        Ok(Instance {
            surgeons,
            patients,
            or_count,
            or_open_hours,
            day_hours,
            surgeon_of,
            by_surgeon,
            by_or,
            patient_index,
        })
    }

    /// An instance with no surgeons or patients.
    pub fn empty(or_count: u32, or_open_hours: f64) -> Result<Self> {
        Instance::new(
            Vec::new(),
            Vec::new(),
            or_count,
            or_open_hours,
            DEFAULT_DAY_HOURS,
        )
    }

    pub fn surgeons(&self) -> &[Surgeon] {
        &self.surgeons
    }

    pub fn patients(&self) -> &[Patient] {
        &self.patients
    }

    pub fn or_count(&self) -> u32 {
        self.or_count
    }

    /// Hours each OR is open, counted from time 0.
    pub fn or_open_hours(&self) -> f64 {
        self.or_open_hours
    }

    pub fn day_hours(&self) -> f64 {
        self.day_hours
    }

    /// Index of the surgeon treating patient `p`.
    pub fn surgeon_of(&self, p: usize) -> usize {
        self.surgeon_of[p]
    }

    /// Patient indices treated by surgeon `h`, in storage order.
    pub fn patients_of_surgeon(&self, h: usize) -> &[usize] {
        &self.by_surgeon[h]
    }

    /// Patient indices treated in OR `r` (1-based), in storage order.
    pub fn patients_in_or(&self, r: u32) -> &[usize] {
        &self.by_or[r as usize - 1]
    }

    pub fn patient_index(&self, id: &str) -> Option<usize> {
        self.patient_index.get(id).copied()
    }

    pub fn recovery_count(&self) -> usize {
        self.patients.iter().filter(|p| p.needs_recovery).count()
    }

    /// Whether patients `p` and `q` share a surgeon or an OR.
    pub fn share_resource(&self, p: usize, q: usize) -> bool {
        self.surgeon_of[p] == self.surgeon_of[q] || self.patients[p].or == self.patients[q].or
    }
}

/// Expected start and end times plus the overtime they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub starts: Vec<f64>,
    pub ends: Vec<f64>,
    /// Overtime per surgeon, in surgeon storage order.
    pub overtime: Vec<f64>,
    pub overtime_flag: Vec<bool>,
}

impl Schedule {
    /// Derives end times and overtime from start times.
    pub fn from_starts(instance: &Instance, starts: Vec<f64>) -> Result<Self> {
        if starts.len() != instance.patients().len() {
            return Err(Error::ScheduleLength {
                expected: instance.patients().len(),
                got: starts.len(),
            });
        }
        let ends = starts
            .iter()
            .zip(instance.patients())
            .map(|(z, p)| z + p.expected_duration)
            .collect();
        let overtime = compute_overtime(instance, &starts);
        let overtime_flag = overtime.iter().map(|&o| o > 0.0).collect();
        Ok(Schedule {
            starts,
            ends,
            overtime,
            overtime_flag,
        })
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }
}

/// Smallest nonnegative overtime per surgeon that lets every one of their
/// surgeries finish within shift end plus overtime.
pub fn compute_overtime(instance: &Instance, starts: &[f64]) -> Vec<f64> {
    instance
        .surgeons()
        .iter()
        .enumerate()
        .map(|(h, surgeon)| {
            instance
                .patients_of_surgeon(h)
                .iter()
                .map(|&p| starts[p] + instance.patients()[p].expected_duration - surgeon.shift_end)
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Pairwise indicators derived from a schedule.
///
/// `ends_after_start(p, q)` is true when `q` ends after `p` starts;
/// `overlap(p, q)` when both directions hold, i.e. the surgeries share a
/// nonzero stretch of time. Touching intervals do not overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairwise {
    n: usize,
    ends_after_start: Vec<bool>,
}

impl Pairwise {
    pub fn ends_after_start(&self, p: usize, q: usize) -> bool {
        p != q && self.ends_after_start[p * self.n + q]
    }

    pub fn overlap(&self, p: usize, q: usize) -> bool {
        self.ends_after_start(p, q) && self.ends_after_start(q, p)
    }
}

pub fn derive_pairwise(schedule: &Schedule) -> Pairwise {
    let n = schedule.len();
    let mut ends_after_start = vec![false; n * n];
    for p in 0..n {
        for q in 0..n {
            if p != q {
                ends_after_start[p * n + q] =
                    schedule.ends[q] > schedule.starts[p] + FEASIBILITY_TOL;
            }
        }
    }
    Pairwise {
        n,
        ends_after_start,
    }
}

/// Constraint families a schedule can break. Discriminants follow the
/// customary numbering of the sequencing formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Constraint {
    /// Surgery starts before its surgeon's shift.
    ShiftStart = 2,
    /// Surgery ends after shift end plus overtime.
    ShiftEnd = 3,
    /// Overtime exceeds the surgeon's cap.
    OvertimeCap = 4,
    /// A surgeon treats two patients at once.
    SurgeonOverlap = 9,
    /// An OR hosts two surgeries at once.
    OrOverlap = 10,
    /// End time differs from start plus expected duration.
    EndTime = 11,
    /// Same-surgeon turnover shorter than cleanup plus setup.
    SurgeonTurnover = 12,
    /// Same-OR turnover shorter than cleanup plus setup.
    OrTurnover = 13,
    NegativeOvertime = 14,
}

impl Constraint {
    pub fn number(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {:?}", self.number(), self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub patients: Vec<String>,
    pub surgeon: Option<String>,
    pub or: Option<u32>,
    /// Amount by which the constraint is exceeded, in hours.
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} by {:.6} h", self.constraint, self.magnitude)?;
        if !self.patients.is_empty() {
            write!(f, " patients [{}]", self.patients.join(", "))?;
        }
        if let Some(h) = &self.surgeon {
            write!(f, " surgeon {h}")?;
        }
        if let Some(r) = self.or {
            write!(f, " OR {r}")?;
        }
        Ok(())
    }
}

/// Lists every constraint the schedule breaks by more than `eps` hours.
///
/// Returns an error, not a violation, when the schedule does not have one
/// entry per patient and per surgeon.
pub fn check_feasibility(
    instance: &Instance,
    schedule: &Schedule,
    eps: f64,
) -> Result<Vec<Violation>> {
    let patients = instance.patients();
    let surgeons = instance.surgeons();
    let n = patients.len();
    for (expected, got) in [
        (n, schedule.starts.len()),
        (n, schedule.ends.len()),
        (surgeons.len(), schedule.overtime.len()),
        (surgeons.len(), schedule.overtime_flag.len()),
    ] {
        if expected != got {
            return Err(Error::ScheduleLength { expected, got });
        }
    }

    let mut out = Vec::new();
    let mut push = |constraint: Constraint,
                    pats: &[usize],
                    surgeon: Option<usize>,
                    or: Option<u32>,
                    magnitude: f64| {
        if magnitude > eps {
            out.push(Violation {
                constraint,
                patients: pats.iter().map(|&p| patients[p].id.clone()).collect(),
                surgeon: surgeon.map(|h: usize| surgeons[h].id.clone()),
                or,
                magnitude,
            });
        }
    };

    for (p, patient) in patients.iter().enumerate() {
        let h = instance.surgeon_of(p);
        let (z, end) = (schedule.starts[p], schedule.ends[p]);
        push(
            Constraint::ShiftStart,
            &[p],
            Some(h),
            None,
            surgeons[h].shift_start - z,
        );
        push(
            Constraint::ShiftEnd,
            &[p],
            Some(h),
            None,
            z + patient.expected_duration - (surgeons[h].shift_end + schedule.overtime[h]),
        );
        push(
            Constraint::EndTime,
            &[p],
            None,
            None,
            (end - z - patient.expected_duration).abs(),
        );
    }

    for (h, surgeon) in surgeons.iter().enumerate() {
        let overtime = schedule.overtime[h];
        let cap = if schedule.overtime_flag[h] {
            instance
                .patients_of_surgeon(h)
                .iter()
                .map(|&p| patients[p].total_work())
                .sum::<f64>()
                - surgeon.shift_start
                + surgeon.shift_end
        } else {
            0.0
        };
        push(Constraint::OvertimeCap, &[], Some(h), None, overtime - cap);
        push(Constraint::NegativeOvertime, &[], Some(h), None, -overtime);
    }

    let pairwise = derive_pairwise(schedule);
    // Earlier-starting patient first; ties broken by index.
    let ordered = |p: usize, q: usize| {
        if (schedule.starts[p], p) <= (schedule.starts[q], q) {
            (p, q)
        } else {
            (q, p)
        }
    };
    let mut check_group = |group: &[usize],
                           overlap_c: Constraint,
                           turnover_c: Constraint,
                           surgeon: Option<usize>,
                           or: Option<u32>| {
        for (i, &p) in group.iter().enumerate() {
            for &q in &group[i + 1..] {
                if pairwise.overlap(p, q) {
                    let shared = schedule.ends[p].min(schedule.ends[q])
                        - schedule.starts[p].max(schedule.starts[q]);
                    push(overlap_c, &[p, q], surgeon, or, shared);
                }
                let (first, second) = ordered(p, q);
                let required =
                    schedule.ends[first] + patients[second].setup + patients[first].cleanup;
                push(
                    turnover_c,
                    &[first, second],
                    surgeon,
                    or,
                    required - schedule.starts[second],
                );
            }
        }
    };
    for h in 0..surgeons.len() {
        check_group(
            instance.patients_of_surgeon(h),
            Constraint::SurgeonOverlap,
            Constraint::SurgeonTurnover,
            Some(h),
            None,
        );
    }
    for r in 1..=instance.or_count() {
        check_group(
            instance.patients_in_or(r),
            Constraint::OrOverlap,
            Constraint::OrTurnover,
            None,
            Some(r),
        );
    }
    Ok(out)
}

/// Maximum expected recovery occupancy over the grid `0, step, ..., day_hours`.
pub fn meo(instance: &Instance, schedule: &Schedule, grid_step: f64) -> Result<f64> {
    let grid = TimeGrid::new(grid_step, instance.day_hours())?;
    meo_on_grid(instance, &schedule.starts, &grid)
}

pub(crate) fn meo_on_grid(instance: &Instance, starts: &[f64], grid: &TimeGrid) -> Result<f64> {
    if starts.len() != instance.patients().len() {
        return Err(Error::ScheduleLength {
            expected: instance.patients().len(),
            got: starts.len(),
        });
    }
    Ok(
        expected_occupancy_on_grid(instance.patients(), starts, grid)
            .into_iter()
            .fold(0.0, f64::max),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(mu: f64, s2: f64) -> LognormalParams {
        LognormalParams::new(mu, s2).unwrap()
    }

    fn pat(id: &str, surgeon: &str, or: u32, tau: f64) -> Patient {
        Patient::new(id, surgeon, or, true, lp(0.2, 0.2), lp(0.0, 0.3))
            .unwrap()
            .with_expected_duration(tau)
            .unwrap()
    }

    fn two_surgeon_instance(turnover: (f64, f64)) -> Instance {
        let surgeons = vec![Surgeon::new("h1", 0.0, 8.0), Surgeon::new("h2", 1.0, 8.0)];
        let patients = vec![
            pat("a", "h1", 1, 2.0)
                .with_turnover(turnover.0, turnover.1)
                .unwrap(),
            pat("b", "h2", 1, 1.5)
                .with_turnover(turnover.0, turnover.1)
                .unwrap(),
        ];
        Instance::new(surgeons, patients, 2, 8.0, 24.0).unwrap()
    }

    #[test]
    fn instance_rejects_bad_references() {
        let s = vec![Surgeon::new("h1", 0.0, 8.0)];
        assert!(Instance::new(s.clone(), vec![pat("a", "nope", 1, 1.0)], 1, 8.0, 24.0).is_err());
        assert!(Instance::new(s.clone(), vec![pat("a", "h1", 2, 1.0)], 1, 8.0, 24.0).is_err());
        assert!(Instance::new(s.clone(), vec![pat("a", "h1", 0, 1.0)], 1, 8.0, 24.0).is_err());
        assert!(Instance::new(s.clone(), vec![], 1, 30.0, 24.0).is_err());
        assert!(Instance::new(vec![Surgeon::new("h1", 5.0, 4.0)], vec![], 1, 8.0, 24.0).is_err());
        assert!(Instance::new(
            s,
            vec![pat("a", "h1", 1, 1.0), pat("a", "h1", 1, 1.0)],
            1,
            8.0,
            24.0
        )
        .is_err());
    }

    #[test]
    fn patient_checks_combined() {
        let mut p = pat("a", "h1", 1, 1.0);
        p.combined.mu += 0.1;
        assert!(p.validate().is_err());
        assert!(pat("a", "h1", 1, 1.0).with_expected_duration(0.0).is_err());
        assert!(pat("a", "h1", 1, 1.0).with_turnover(-0.1, 0.0).is_err());
    }

    #[test]
    fn default_duration_is_lognormal_mean() {
        let p = Patient::new("a", "h", 1, true, lp(0.5, 0.4), lp(0.0, 0.3)).unwrap();
        assert!((p.expected_duration - 0.7f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn partitions() {
        let inst = two_surgeon_instance((0.0, 0.0));
        assert_eq!(inst.patients_of_surgeon(0), &[0]);
        assert_eq!(inst.patients_of_surgeon(1), &[1]);
        assert_eq!(inst.patients_in_or(1), &[0, 1]);
        assert!(inst.patients_in_or(2).is_empty());
        assert!(inst.share_resource(0, 1));
    }

    #[test]
    fn pairwise_indicators() {
        let inst = two_surgeon_instance((0.0, 0.0));
        // Disjoint by one hour.
        let s = Schedule::from_starts(&inst, vec![0.0, 3.0]).unwrap();
        let pw = derive_pairwise(&s);
        assert!(!pw.overlap(0, 1) && !pw.overlap(1, 0));
        // Identical intervals.
        let s = Schedule::from_starts(&inst, vec![1.0, 1.0]).unwrap();
        let pw = derive_pairwise(&s);
        assert!(pw.overlap(0, 1) && pw.overlap(1, 0));
        // Back to back.
        let s = Schedule::from_starts(&inst, vec![0.0, 2.0]).unwrap();
        let pw = derive_pairwise(&s);
        assert!(!pw.overlap(0, 1) && !pw.overlap(1, 0));
        assert!(pw.ends_after_start(0, 1) && !pw.ends_after_start(1, 0));
        assert!(!pw.ends_after_start(0, 0));
    }

    #[test]
    fn empty_instance_is_feasible() {
        let inst = Instance::empty(3, 8.0).unwrap();
        let s = Schedule::from_starts(&inst, vec![]).unwrap();
        assert!(check_feasibility(&inst, &s, FEASIBILITY_TOL)
            .unwrap()
            .is_empty());
        assert_eq!(meo(&inst, &s, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn single_patient_at_shift_start() {
        let inst = Instance::new(
            vec![Surgeon::new("h", 1.5, 8.0)],
            vec![pat("a", "h", 1, 3.0)],
            1,
            8.0,
            24.0,
        )
        .unwrap();
        let s = Schedule::from_starts(&inst, vec![1.5]).unwrap();
        assert!(check_feasibility(&inst, &s, FEASIBILITY_TOL)
            .unwrap()
            .is_empty());
        let early = Schedule::from_starts(&inst, vec![1.0]).unwrap();
        let v = check_feasibility(&inst, &early, FEASIBILITY_TOL).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, Constraint::ShiftStart);
        assert!((v[0].magnitude - 0.5).abs() < 1e-12);
    }

    #[test]
    fn short_or_turnover() {
        // a: tau 2, cleanup 0.4; b: setup 0.3. Required gap 0.7, given 0.2.
        let inst = two_surgeon_instance((0.3, 0.4));
        let zb = 1.0 + 2.0 + 0.3 + 0.4 - 0.5;
        let s = Schedule::from_starts(&inst, vec![1.0, zb]).unwrap();
        let v = check_feasibility(&inst, &s, FEASIBILITY_TOL).unwrap();
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].constraint, Constraint::OrTurnover);
        assert_eq!(v[0].patients, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(v[0].or, Some(1));
        assert!((v[0].magnitude - 0.5).abs() < 1e-12);
    }

    #[test]
    fn overlap_reports_both_families() {
        let inst = two_surgeon_instance((0.0, 0.0));
        let s = Schedule::from_starts(&inst, vec![1.0, 2.0]).unwrap();
        let v = check_feasibility(&inst, &s, FEASIBILITY_TOL).unwrap();
        let kinds: Vec<_> = v.iter().map(|x| x.constraint).collect();
        assert_eq!(kinds, vec![Constraint::OrOverlap, Constraint::OrTurnover]);
        assert!((v[0].magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overtime_derivation() {
        let surgeons = vec![Surgeon::new("h1", 0.0, 8.0), Surgeon::new("h2", 0.0, 6.0)];
        let patients = vec![
            pat("a", "h1", 1, 2.0),
            pat("b", "h2", 2, 2.0),
            pat("c", "h2", 3, 1.0),
        ];
        let inst = Instance::new(surgeons, patients, 3, 8.0, 24.0).unwrap();
        let s = Schedule::from_starts(&inst, vec![0.0, 2.0, 5.75]).unwrap();
        assert_eq!(s.overtime[0], 0.0);
        assert!((s.overtime[1] - 0.75).abs() < 1e-12);
        assert_eq!(s.overtime_flag, vec![false, true]);
        assert!(check_feasibility(&inst, &s, FEASIBILITY_TOL)
            .unwrap()
            .is_empty());

        // Latest-ending patient determines overtime, not the sum of residuals.
        let s = Schedule::from_starts(&inst, vec![0.0, 5.0, 6.5]).unwrap();
        assert!((s.overtime[1] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn overtime_constraints() {
        let inst = Instance::new(
            vec![Surgeon::new("h", 0.0, 4.0)],
            vec![pat("a", "h", 1, 2.0)],
            1,
            8.0,
            24.0,
        )
        .unwrap();
        let mut s = Schedule::from_starts(&inst, vec![3.0]).unwrap();
        assert!((s.overtime[0] - 1.0).abs() < 1e-12);
        // Overtime without the flag breaks the cap.
        s.overtime_flag[0] = false;
        let v = check_feasibility(&inst, &s, FEASIBILITY_TOL).unwrap();
        assert_eq!(v[0].constraint, Constraint::OvertimeCap);
        // Negative overtime breaks both the end-of-shift and sign constraints.
        s.overtime = vec![-0.5];
        let kinds: Vec<_> = check_feasibility(&inst, &s, FEASIBILITY_TOL)
            .unwrap()
            .iter()
            .map(|v| v.constraint)
            .collect();
        assert!(kinds.contains(&Constraint::ShiftEnd));
        assert!(kinds.contains(&Constraint::NegativeOvertime));
        // Cap: tau + setup + cleanup - shift start + shift end = 2 + 4.
        let late = Schedule::from_starts(&inst, vec![9.0]).unwrap();
        let v = check_feasibility(&inst, &late, FEASIBILITY_TOL).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].constraint, Constraint::OvertimeCap);
        assert!((v[0].magnitude - 1.0).abs() < 1e-12);
    }

    #[test]
    fn end_time_mismatch() {
        let inst = two_surgeon_instance((0.0, 0.0));
        let mut s = Schedule::from_starts(&inst, vec![1.0, 4.0]).unwrap();
        s.ends[1] += 0.25;
        let v = check_feasibility(&inst, &s, FEASIBILITY_TOL).unwrap();
        assert_eq!(v[0].constraint, Constraint::EndTime);
    }

    #[test]
    fn structural_mismatch_is_an_error() {
        let inst = two_surgeon_instance((0.0, 0.0));
        assert!(Schedule::from_starts(&inst, vec![1.0]).is_err());
        let mut s = Schedule::from_starts(&inst, vec![1.0, 4.0]).unwrap();
        s.starts.pop();
        assert!(matches!(
            check_feasibility(&inst, &s, FEASIBILITY_TOL),
            Err(Error::ScheduleLength { .. })
        ));
    }

    #[test]
    fn meo_bounds() {
        let inst = two_surgeon_instance((0.0, 0.0));
        let s = Schedule::from_starts(&inst, vec![1.0, 4.0]).unwrap();
        let m = meo(&inst, &s, 0.1).unwrap();
        assert!(m > 0.0 && m <= 2.0);
        let single = Instance::new(
            vec![Surgeon::new("h", 0.0, 8.0)],
            vec![pat("a", "h", 1, 1.0)],
            1,
            8.0,
            24.0,
        )
        .unwrap();
        let s = Schedule::from_starts(&single, vec![0.0]).unwrap();
        assert!(meo(&single, &s, 0.1).unwrap() <= 1.0);
        assert!(meo(&single, &s, 0.0).is_err());
    }
}
