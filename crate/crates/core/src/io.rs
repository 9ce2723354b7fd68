//! On-disk formats: instance and schedule JSON, occupancy CSV.
//!
//! Both JSON documents carry a `format_version`. Times are decimal hours from
//! midnight of the scheduled day.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::distributions::LognormalParams;
use crate::error::{Error, Result};
use crate::forecast::OccupancyCurve;
use crate::model::{Instance, Patient, Schedule, Surgeon, DEFAULT_DAY_HOURS};

pub const FORMAT_VERSION: u32 = 1;

fn default_day_hours() -> f64 {
    DEFAULT_DAY_HOURS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format_version: u32,
    pub or_count: u32,
    pub or_open_hours: f64,
    #[serde(default = "default_day_hours")]
    pub day_hours: f64,
    pub surgeons: Vec<Surgeon>,
    pub patients: Vec<PatientRecord>,
}

/// A patient as written on disk. `combined` and `expected_duration` may be
/// omitted; they are derived on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientRecord {
    pub id: String,
    pub surgeon: String,
    pub or: u32,
    pub needs_recovery: bool,
    pub surgery: LognormalParams,
    pub recovery: LognormalParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combined: Option<LognormalParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_duration: Option<f64>,
    #[serde(default)]
    pub setup: f64,
    #[serde(default)]
    pub cleanup: f64,
}

impl From<&Patient> for PatientRecord {
    fn from(p: &Patient) -> Self {
        PatientRecord {
            id: p.id.clone(),
            surgeon: p.surgeon.clone(),
            or: p.or,
            needs_recovery: p.needs_recovery,
            surgery: p.surgery,
            recovery: p.recovery,
            combined: Some(p.combined),
            expected_duration: Some(p.expected_duration),
            setup: p.setup,
            cleanup: p.cleanup,
        }
    }
}

impl PatientRecord {
    fn into_patient(self) -> Result<Patient> {
        self.surgery.validate()?;
        self.recovery.validate()?;
        let mut patient = Patient::new(
            self.id,
            self.surgeon,
            self.or,
            self.needs_recovery,
            self.surgery,
            self.recovery,
        )?;
        if let Some(tau) = self.expected_duration {
            patient.expected_duration = tau;
        }
        if let Some(combined) = self.combined {
            // Kept verbatim so a written file reads back bit-identical;
            // validate() rejects it if it disagrees with the moment match.
            patient.combined = combined;
        }
        patient.setup = self.setup;
        patient.cleanup = self.cleanup;
        patient.validate()?;
        Ok(patient)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            format_version: FORMAT_VERSION,
            or_count: inst.or_count(),
            or_open_hours: inst.or_open_hours(),
            day_hours: inst.day_hours(),
            surgeons: inst.surgeons().to_vec(),
            patients: inst.patients().iter().map(PatientRecord::from).collect(),
        }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        check_version(self.format_version)?;
        let patients = self
            .patients
            .into_iter()
            .map(PatientRecord::into_patient)
            .collect::<Result<Vec<_>>>()?;
        Instance::new(
            self.surgeons,
            patients,
            self.or_count,
            self.or_open_hours,
            self.day_hours,
        )
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format_version {v}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

pub fn instance_to_json(instance: &Instance) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&InstanceFile::from(instance))?;
    s.push('\n');
    Ok(s)
}

pub fn instance_from_json(json: &str) -> Result<Instance> {
    serde_json::from_str::<InstanceFile>(json)?.into_instance()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub format_version: u32,
    pub patients: Vec<ScheduledPatient>,
    #[serde(default)]
    pub surgeons: Vec<SurgeonOvertime>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledPatient {
    pub id: String,
    pub start: f64,
    /// Informational; recomputed from `start` on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
}

/// Informational; recomputed from the starts on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeonOvertime {
    pub id: String,
    pub overtime: f64,
    pub overtime_flag: bool,
}

pub fn schedule_to_file(instance: &Instance, schedule: &Schedule) -> ScheduleFile {
    ScheduleFile {
        format_version: FORMAT_VERSION,
        patients: instance
            .patients()
            .iter()
            .enumerate()
            .map(|(p, patient)| ScheduledPatient {
                id: patient.id.clone(),
                start: schedule.starts[p],
                end: Some(schedule.ends[p]),
            })
            .collect(),
        surgeons: instance
            .surgeons()
            .iter()
            .enumerate()
            .map(|(h, s)| SurgeonOvertime {
                id: s.id.clone(),
                overtime: schedule.overtime[h],
                overtime_flag: schedule.overtime_flag[h],
            })
            .collect(),
    }
}

pub fn schedule_to_json(instance: &Instance, schedule: &Schedule) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&schedule_to_file(instance, schedule))?;
    s.push('\n');
    Ok(s)
}

/// Resolves a schedule file against `instance`. Every instance patient must
/// appear exactly once; unknown ids are rejected.
pub fn schedule_from_file(instance: &Instance, file: ScheduleFile) -> Result<Schedule> {
    check_version(file.format_version)?;
    let mut starts: HashMap<String, f64> = HashMap::with_capacity(file.patients.len());
    for entry in file.patients {
        if instance.patient_index(&entry.id).is_none() {
            return Err(Error::Format(format!(
                "schedule lists patient `{}` who is not in the instance",
                entry.id
            )));
        }
        if !entry.start.is_finite() {
            return Err(Error::Format(format!(
                "patient `{}` has a non-finite start",
                entry.id
            )));
        }
        if starts.insert(entry.id.clone(), entry.start).is_some() {
            return Err(Error::Format(format!(
                "patient `{}` is scheduled twice",
                entry.id
            )));
        }
    }
    let ordered = instance
        .patients()
        .iter()
        .map(|p| {
            starts
                .get(&p.id)
                .copied()
                .ok_or_else(|| Error::MissingPatient {
                    patient: p.id.clone(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Schedule::from_starts(instance, ordered)
}

pub fn schedule_from_json(instance: &Instance, json: &str) -> Result<Schedule> {
    schedule_from_file(instance, serde_json::from_str(json)?)
}

pub const CURVE_CSV_HEADER: &str = "time,mean,variance,lower,upper";

/// Grid times are products `i * step`; trim representation noise such as
/// `0.30000000000000004` for display.
fn format_time(t: f64) -> String {
    let rounded = (t * 1e9).round() / 1e9;
    format!("{rounded}")
}

/// Occupancy curve as CSV with a header row. Values other than time are
/// written with shortest round-trip precision.
pub fn curve_to_csv(curve: &OccupancyCurve) -> String {
    let mut out = String::with_capacity(64 * (curve.len() + 1));
    out.push_str(CURVE_CSV_HEADER);
    out.push('\n');
    for i in 0..curve.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_time(curve.times[i]),
            curve.mean[i],
            curve.variance[i],
            curve.lower[i],
            curve.upper[i]
        );
    }
    out
}
