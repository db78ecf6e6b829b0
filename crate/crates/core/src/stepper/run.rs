//! Drives a scheme to `t_end`, stopping exactly at observation and snapshot
//! times.

use super::{Scheme, Stepper};
use crate::error::{Error, Result};
use crate::grid::Field;

/// Receives every step and every observation of a run.
pub trait Observer {
    /// Called before each step with the state at its left endpoint.
    fn on_step(&mut self, _t: f64, _dt: f64, _before: &Field) -> Result<()> {
        Ok(())
    }

    /// Called with the state at each observation time, including `t = 0`.
    fn observe(&mut self, t: f64, field: &Field) -> Result<()>;
}

pub struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _t: f64, _field: &Field) -> Result<()> {
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Observation spacing; `None` observes only at `0` and `t_end`.
    pub cadence: Option<f64>,
    /// Extra observation times, merged with the cadence.
    pub observe_times: Vec<f64>,
    /// Extra times at which snapshots are kept. `0` and `t_end` are always kept.
    pub snapshot_times: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub dt_history: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, &Field)> {
        self.times.last().copied().zip(self.snapshots.last())
    }

    /// Snapshot whose time is within `1e-12` of `t`.
    pub fn at(&self, t: f64) -> Option<&Field> {
        self.times.iter().position(|&x| (x - t).abs() <= 1e-12 * t.abs().max(1.0)).map(|i| &self.snapshots[i])
    }

    fn push(&mut self, t: f64, f: &Field) {
        if self.times.last().map_or(true, |&last| t > last) {
            self.times.push(t);
            self.snapshots.push(f.clone());
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub final_state: Field,
    pub t_reached: f64,
    /// Set when the run stopped early; the trajectory up to `t_reached` is kept.
    pub error: Option<Error>,
}

fn stop_points(t_end: f64, options: &RunOptions) -> (Vec<f64>, Vec<f64>) {
    let mut observe = vec![0.0];
    if let Some(c) = options.cadence.filter(|c| *c > 0.0) {
        let count = (t_end / c * (1.0 + 1e-12)).floor() as usize;
        observe.extend((1..=count).map(|k| k as f64 * c).filter(|&t| t <= t_end));
    }
    observe.extend(options.observe_times.iter().copied().filter(|&t| t > 0.0 && t < t_end));
    if t_end > 0.0 {
        observe.push(t_end);
    }
    observe.sort_by(f64::total_cmp);
    observe.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    if let Some(last) = observe.last_mut() {
        if (*last - t_end).abs() <= 1e-12 * t_end.max(1.0) {
            *last = t_end;
        }
    }
    let mut snaps: Vec<f64> = options.snapshot_times.iter().copied().filter(|&t| t > 0.0 && t < t_end).collect();
    snaps.sort_by(f64::total_cmp);
    (observe, snaps)
}

/// Runs the configured scheme from `u0` to `t_end`.
pub fn run(u0: &Field, stepper: &Stepper, options: &RunOptions, observer: &mut dyn Observer) -> RunOutcome {
    let t_end = stepper.config().t_end;
    let (observe, snaps) = stop_points(t_end, options);
    let mut stops: Vec<(f64, bool)> = observe.iter().map(|&t| (t, true)).chain(snaps.iter().map(|&t| (t, false))).collect();
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut trajectory = Trajectory::default();
    trajectory.push(0.0, u0);
    let mut state = u0.clone();
    let mut t = 0.0;
    let result = (|| -> Result<()> {
        observer.observe(0.0, u0)?;
        for &(target, is_obs) in stops.iter().filter(|s| s.0 > 0.0) {
            if target <= t {
                if is_obs && target == t {
                    observer.observe(t, &state)?;
                }
                continue;
            }
            match stepper.config().scheme {
                Scheme::Duhamel => advance_duhamel(stepper, &mut state, &mut t, target, &mut trajectory, observer)?,
                _ => advance_steps(stepper, &mut state, &mut t, target, &mut trajectory, observer)?,
            }
            if is_obs {
                observer.observe(t, &state)?;
            }
            trajectory.push(t, &state);
        }
        Ok(())
    })();
    RunOutcome { trajectory, final_state: state, t_reached: t, error: result.err() }
}

fn advance_steps(
    stepper: &Stepper,
    state: &mut Field,
    t: &mut f64,
    target: f64,
    trajectory: &mut Trajectory,
    observer: &mut dyn Observer,
) -> Result<()> {
    while *t < target {
        let mut dt = stepper.cfl_dt(state)?;
        let remaining = target - *t;
        let last = dt >= remaining * (1.0 - 1e-10);
        if last {
            dt = remaining;
        } else if dt > 0.5 * remaining {
            // split the remainder into two equal steps rather than leave a sliver
            dt = 0.5 * remaining;
        }
        observer.on_step(*t, dt, state)?;
        *state = stepper.step(state, dt, *t)?;
        trajectory.dt_history.push(dt);
        *t = if last { target } else { *t + dt };
    }
    Ok(())
}

fn advance_duhamel(
    stepper: &Stepper,
    state: &mut Field,
    t: &mut f64,
    target: f64,
    trajectory: &mut Trajectory,
    observer: &mut dyn Observer,
) -> Result<()> {
    let d = stepper.config().duhamel;
    while *t < target {
        let remaining = target - *t;
        let window = if d.window >= remaining * (1.0 - 1e-10) { remaining } else { d.window };
        let out = stepper.duhamel_window(state, window, d.tol, d.max_iter)?;
        for k in 0..out.times.len() - 1 {
            let dt = out.times[k + 1] - out.times[k];
            observer.on_step(*t + out.times[k], dt, &out.fields[k])?;
            trajectory.dt_history.push(dt);
        }
        *state = out.fields.last().expect("at least two nodes").clone();
        *t = if window == remaining { target } else { *t + window };
    }
    Ok(())
}
