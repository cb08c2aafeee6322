//! Epoch schedules `0 = tau_0 < tau_1 < tau_2 < ...`.
//!
//! Epoch `m` covers rounds `tau_{m-1} + 1 ..= tau_m`. The learner calls its
//! oracle once when it enters each epoch after the first.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Geometric,
    KnownHorizon,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochSchedule {
    kind: ScheduleKind,
    // Empty for the geometric kind, whose boundaries are computed on demand.
    boundaries: Vec<u64>,
}

/// Ceiling that snaps values within floating-point noise of an integer onto
/// that integer, so that e.g. `100^(1/2)` yields 10 rather than 11.
fn snapped_ceil(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

impl EpochSchedule {
    /// `tau_m = 2^m`, unbounded.
    pub fn geometric() -> Self {
        Self {
            kind: ScheduleKind::Geometric,
            boundaries: Vec::new(),
        }
    }

    /// `tau_m = ceil(T^(1 - 2^-m))` with consecutive duplicates dropped; the
    /// first boundary reaching `T` is replaced by `T` and ends the schedule.
    pub fn known_horizon(horizon: u64) -> Result<Self> {
        if horizon < 2 {
            return Err(Error::config(
                "horizon",
                "known-horizon schedule needs T >= 2",
            ));
        }
        let t = horizon as f64;
        let mut boundaries: Vec<u64> = Vec::new();
        for m in 1..=200 {
            let exponent = 1.0 - 0.5f64.powi(m);
            let tau = snapped_ceil(t.powf(exponent));
            if tau >= horizon {
                boundaries.push(horizon);
                break;
            }
            if boundaries.last().is_none_or(|&last| tau > last) {
                boundaries.push(tau);
            }
        }
        // powi(200) underflows the gap to zero long before this is reachable
        debug_assert_eq!(boundaries.last(), Some(&horizon));
        Ok(Self {
            kind: ScheduleKind::KnownHorizon,
            boundaries,
        })
    }

    /// Explicit boundaries, strictly increasing and positive.
    pub fn custom(boundaries: Vec<u64>) -> Result<Self> {
        if boundaries.is_empty() {
            return Err(Error::config("schedule.boundaries", "no boundaries given"));
        }
        if boundaries[0] == 0 || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "schedule.boundaries",
                "boundaries must be strictly increasing positive integers",
            ));
        }
        Ok(Self {
            kind: ScheduleKind::Custom,
            boundaries,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    /// `tau_m`; `tau_0 = 0`. `None` past the end of a finite schedule.
    pub fn boundary(&self, m: usize) -> Option<u64> {
        if m == 0 {
            return Some(0);
        }
        match self.kind {
            ScheduleKind::Geometric => 1u64.checked_shl(m as u32).filter(|_| m < 64),
            _ => self.boundaries.get(m - 1).copied(),
        }
    }

    /// Final boundary of a finite schedule.
    pub fn last(&self) -> Option<u64> {
        match self.kind {
            ScheduleKind::Geometric => None,
            _ => self.boundaries.last().copied(),
        }
    }

    /// Smallest `m >= 1` with `t <= tau_m`.
    pub fn epoch_of(&self, t: u64) -> Result<usize> {
        if t == 0 {
            return Err(Error::config("round", "rounds start at 1"));
        }
        match self.kind {
            ScheduleKind::Geometric => Ok(if t <= 2 {
                1
            } else {
                (64 - (t - 1).leading_zeros()) as usize
            }),
            _ => {
                let idx = self.boundaries.partition_point(|&tau| tau < t);
                if idx == self.boundaries.len() {
                    Err(Error::ScheduleExhausted {
                        round: t,
                        last: *self.boundaries.last().unwrap(),
                    })
                } else {
                    Ok(idx + 1)
                }
            }
        }
    }

    /// Boundaries `tau_1, ..., tau_{m(T)}` needed to cover `horizon` rounds.
    pub fn boundaries_through(&self, horizon: u64) -> Result<Vec<u64>> {
        let epochs = self.epoch_of(horizon.max(1))?;
        Ok((1..=epochs).map(|m| self.boundary(m).unwrap()).collect())
    }

    /// `tau_m <= 2 tau_{m-1}` for every `m > 1` up to the horizon.
    pub fn at_most_doubling(&self, horizon: u64) -> Result<bool> {
        let b = self.boundaries_through(horizon)?;
        Ok(b.windows(2).all(|w| w[1] <= 2 * w[0]))
    }

    /// `tau_m >= 2^m` for every epoch up to the horizon.
    pub fn at_least_geometric(&self, horizon: u64) -> Result<bool> {
        let b = self.boundaries_through(horizon)?;
        Ok(b.iter()
            .enumerate()
            .all(|(i, &tau)| i + 1 >= 64 || tau >= 1u64 << (i + 1)))
    }
}
