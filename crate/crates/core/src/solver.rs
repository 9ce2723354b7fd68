//! Constructive heuristic and simulated annealing over patient sequences.
//!
//! A [`Sequence`] is turned into a [`Schedule`] by a two-pass critical-path
//! computation: a backward pass sets each patient's latest completion from
//! the patients that follow it on the same surgeon or OR, and a forward pass
//! sets the earliest start from those that precede it. Each start is then
//! drawn uniformly inside the resulting slack. Simulated annealing searches
//! over sequences with a random-swap neighborhood.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::TimeGrid;
use crate::forecast::DEFAULT_GRID_STEP;
use crate::model::{meo_on_grid, Instance, Schedule};

/// Order in which patients are handed to the constructive heuristic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence(Vec<usize>);

impl Sequence {
    /// Patients in storage (input file) order.
    pub fn identity(n: usize) -> Self {
        Sequence((0..n).collect())
    }

    /// Checks that `order` is a permutation of `0..n`.
    pub fn new(order: Vec<usize>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        if order.len() != n {
            return Err(Error::param(
                "sequence",
                format!("has {} entries, expected {n}", order.len()),
            ));
        }
        for &p in &order {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::param(
                    "sequence",
                    format!("entry {p} is out of range or repeated"),
                ));
            }
        }
        Ok(Sequence(order))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Patient ids in sequence order.
    pub fn ids(&self, instance: &Instance) -> Vec<String> {
        self.0
            .iter()
            .map(|&p| instance.patients()[p].id.clone())
            .collect()
    }
}

/// Builds a schedule from `sequence`, drawing one placement fraction per
/// patient from `rng`.
pub fn construct_schedule<R: Rng + ?Sized>(
    instance: &Instance,
    sequence: &Sequence,
    rng: &mut R,
) -> Schedule {
    construct_with(instance, sequence, || rng.random::<f64>())
}

/// Input-order sequence with every patient at its earliest start.
pub fn baseline_schedule(instance: &Instance) -> Schedule {
    construct_with(
        instance,
        &Sequence::identity(instance.patients().len()),
        || 0.0,
    )
}

/// Constructive heuristic with the placement fraction supplied by `draw`,
/// which is called once per patient in sequence order.
pub fn construct_with(
    instance: &Instance,
    sequence: &Sequence,
    mut draw: impl FnMut() -> f64,
) -> Schedule {
    let patients = instance.patients();
    let n = patients.len();
    assert_eq!(sequence.len(), n, "sequence must cover every patient");
    let order = sequence.as_slice();

    let mut latest_completion = vec![instance.or_open_hours(); n];
    let mut earliest_start: Vec<f64> = (0..n)
        .map(|p| {
            instance.surgeons()[instance.surgeon_of(p)]
                .shift_start
                .max(0.0)
        })
        .collect();

    for (pos, &p) in order.iter().enumerate().rev() {
        let bound = order[pos + 1..]
            .iter()
            .filter(|&&s| instance.share_resource(p, s))
            .map(|&s| latest_completion[s] - patients[s].expected_duration - patients[s].setup)
            .fold(f64::INFINITY, f64::min);
        if bound.is_finite() {
            latest_completion[p] = bound - patients[p].cleanup;
        }
    }

    let mut starts = vec![0.0; n];
    for (pos, &p) in order.iter().enumerate() {
        let ready = order[..pos]
            .iter()
            .filter(|&&q| instance.share_resource(p, q))
            .map(|&q| earliest_start[q] + patients[q].expected_duration + patients[q].cleanup)
            .fold(f64::NEG_INFINITY, f64::max);
        if ready.is_finite() {
            // Keep the shift-start floor from initialization.
            earliest_start[p] = earliest_start[p].max(ready + patients[p].setup);
        }
        let slack = latest_completion[p] - earliest_start[p] - patients[p].expected_duration;
        let start = earliest_start[p] + (draw() * slack).max(0.0);
        earliest_start[p] = start;
        starts[p] = start;
    }

    Schedule::from_starts(instance, starts).expect("one start per patient")
}

/// Copy of `sequence` with two distinct, uniformly chosen positions swapped.
/// Sequences shorter than two are returned unchanged.
pub fn swap_neighbor<R: Rng + ?Sized>(sequence: &Sequence, rng: &mut R) -> Sequence {
    let mut next = sequence.clone();
    let n = next.len();
    if n < 2 {
        return next;
    }
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    next.0.swap(i, j);
    next
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SAConfig {
    pub iterations: usize,
    pub initial_temperature: f64,
    /// Multiplier applied to the temperature every `cooling_period` iterations.
    pub cooling_factor: f64,
    pub cooling_period: usize,
    pub grid_step: f64,
    pub seed: u64,
}

impl Default for SAConfig {
    fn default() -> Self {
        SAConfig {
            iterations: 2500,
            initial_temperature: 1.0,
            cooling_factor: 0.95,
            cooling_period: 200,
            grid_step: DEFAULT_GRID_STEP,
            seed: 0,
        }
    }
}

impl SAConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.iterations < 1 {
            return bad("iterations must be >= 1".into());
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return bad(format!(
                "cooling factor must lie in (0, 1), got {}",
                self.cooling_factor
            ));
        }
        if self.cooling_period < 1 {
            return bad("cooling period must be >= 1".into());
        }
        if !(self.initial_temperature.is_finite() && self.initial_temperature > 0.0) {
            return bad(format!(
                "initial temperature must be > 0, got {}",
                self.initial_temperature
            ));
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return bad(format!("grid step must be > 0, got {}", self.grid_step));
        }
        Ok(())
    }

    /// Temperature in force after `completed` iterations.
    pub fn temperature_after(&self, completed: usize) -> f64 {
        let drops = (completed / self.cooling_period) as i32;
        self.initial_temperature * self.cooling_factor.powi(drops)
    }
}

/// What happened in one annealing iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub temperature: f64,
    pub candidate_meo: f64,
    /// Candidate minus current objective before the move.
    pub delta: f64,
    pub accepted: bool,
    /// Objective of the current solution after the move.
    pub current_meo: f64,
    pub best_meo: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub config: SAConfig,
    pub best_schedule: Schedule,
    pub best_sequence: Sequence,
    pub best_meo: f64,
    pub initial_meo: f64,
    pub trace: Vec<IterationRecord>,
    pub accepted: usize,
    pub rejected: usize,
    pub elapsed_secs: f64,
}

impl SolveReport {
    /// Current objective after each iteration.
    pub fn meo_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.current_meo).collect()
    }

    pub fn best_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.best_meo).collect()
    }
}

/// Metropolis acceptance: always for improvements, otherwise with
/// probability `exp(-delta / temperature)`.
fn accept<R: Rng + ?Sized>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    delta <= 0.0 || rng.random::<f64>() < (-delta / temperature).exp()
}

/// Anneals from the input patient order. Deterministic for a given config,
/// seed included.
pub fn simulated_annealing(instance: &Instance, config: &SAConfig) -> Result<SolveReport> {
    config.validate()?;
    let clock = Instant::now();
    let grid = TimeGrid::new(config.grid_step, instance.day_hours())?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut current_seq = Sequence::identity(instance.patients().len());
    let initial_schedule = construct_schedule(instance, &current_seq, &mut rng);
    let mut current_meo = meo_on_grid(instance, &initial_schedule.starts, &grid)?;
    let initial_meo = current_meo;

    let mut best_seq = current_seq.clone();
    let mut best_schedule = initial_schedule;
    let mut best_meo = current_meo;

    let mut temperature = config.initial_temperature;
    let mut trace = Vec::with_capacity(config.iterations);
    let mut accepted = 0;

    for iteration in 1..=config.iterations {
        let candidate = swap_neighbor(&current_seq, &mut rng);
        let schedule = construct_schedule(instance, &candidate, &mut rng);
        let candidate_meo = meo_on_grid(instance, &schedule.starts, &grid)?;
        let delta = candidate_meo - current_meo;
        let took = accept(delta, temperature, &mut rng);
        let record_temperature = temperature;
        if took {
            accepted += 1;
            if candidate_meo < best_meo {
                best_meo = candidate_meo;
                best_seq = candidate.clone();
                best_schedule = schedule;
            }
            current_seq = candidate;
            current_meo = candidate_meo;
        }
        trace.push(IterationRecord {
            temperature: record_temperature,
            candidate_meo,
            delta,
            accepted: took,
            current_meo,
            best_meo,
        });
        if iteration % config.cooling_period == 0 {
            temperature *= config.cooling_factor;
        }
    }

    Ok(SolveReport {
        config: *config,
        best_schedule,
        best_sequence: best_seq,
        best_meo,
        initial_meo,
        trace,
        accepted,
        rejected: config.iterations - accepted,
        elapsed_secs: clock.elapsed().as_secs_f64(),
    })
}
