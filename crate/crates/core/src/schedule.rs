//! Control schedules: bang-bang on-interval lists and the generic
//! piecewise-constant signal interface the simulator consumes.

use serde::{Deserialize, Serialize};

use crate::problem::{CampaignProblem, CostModel};

/// Half-open time interval `[start, end)`, serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Interval { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

impl From<[f64; 2]> for Interval {
    fn from(a: [f64; 2]) -> Self {
        Interval::new(a[0], a[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.start, i.end]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSchedule {
    pub u_max: f64,
    pub on_intervals: Vec<Interval>,
}

impl ChannelSchedule {
    pub fn on_time(&self) -> f64 {
        self.on_intervals.iter().map(Interval::len).sum()
    }

    pub fn is_on(&self, t: f64) -> bool {
        self.on_intervals.iter().any(|i| i.contains(t))
    }

    /// On-time inside `[0, t]`.
    pub fn on_time_until(&self, t: f64) -> f64 {
        self.on_intervals
            .iter()
            .map(|i| (i.end.min(t) - i.start).max(0.0))
            .sum()
    }

    /// Transitions between 0 and `u_max` strictly inside `(0, T)`.
    pub fn switch_count(&self, horizon: f64) -> usize {
        let tol = 1e-12 * horizon.max(1.0);
        self.on_intervals
            .iter()
            .map(|i| usize::from(i.start > tol) + usize::from(i.end < horizon - tol))
            .sum()
    }
}

/// Per channel, the control is `u_max` on its intervals and 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BangBangSchedule {
    pub channels: Vec<ChannelSchedule>,
}

impl BangBangSchedule {
    /// All channels off.
    pub fn idle(problem: &CampaignProblem) -> Self {
        BangBangSchedule {
            channels: problem
                .channels
                .iter()
                .map(|c| ChannelSchedule {
                    u_max: c.u_max,
                    on_intervals: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn spend(&self, costs: &[CostModel]) -> f64 {
        self.channels
            .iter()
            .zip(costs)
            .map(|(ch, c)| c.eval(ch.u_max) * ch.on_time())
            .sum()
    }

    /// Checks disjointness, ordering, and containment in `[0, T]`.
    pub fn is_well_formed(&self, horizon: f64) -> bool {
        self.channels.iter().all(|ch| {
            ch.on_intervals
                .iter()
                .all(|i| i.start >= 0.0 && i.end <= horizon && i.start < i.end)
                && ch.on_intervals.windows(2).all(|w| w[0].end <= w[1].start)
        })
    }
}

/// A piecewise-constant control the simulator can integrate exactly.
pub trait ControlSignal {
    /// Times in `(0, T)` where any channel's effort may change.
    fn breakpoints(&self) -> Vec<f64>;

    /// Effort of every channel at `t`, written into `out`.
    fn efforts_at(&self, t: f64, out: &mut [f64]);
}

impl ControlSignal for BangBangSchedule {
    fn breakpoints(&self) -> Vec<f64> {
        self.channels
            .iter()
            .flat_map(|c| c.on_intervals.iter().flat_map(|i| [i.start, i.end]))
            .collect()
    }

    fn efforts_at(&self, t: f64, out: &mut [f64]) {
        for (o, ch) in out.iter_mut().zip(&self.channels) {
            *o = if ch.is_on(t) { ch.u_max } else { 0.0 };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn switch_counting_respects_boundaries() {
        let ch = ChannelSchedule {
            u_max: 1.0,
            on_intervals: vec![Interval::new(0.0, 0.5), Interval::new(0.7, 0.8), Interval::new(0.9, 1.0)],
        };
        assert_eq!(ch.switch_count(1.0), 1 + 2 + 1);
        assert!((ch.on_time() - 0.7).abs() < 1e-15);
        assert!((ch.on_time_until(0.75) - 0.55).abs() < 1e-15);
        let full = ChannelSchedule {
            u_max: 1.0,
            on_intervals: vec![Interval::new(0.0, 1.0)],
        };
        assert_eq!(full.switch_count(1.0), 0);
    }

    #[test]
    fn interval_serializes_as_pair() {
        let s = serde_json::to_string(&Interval::new(0.0, 0.5)).unwrap();
        assert_eq!(s, "[0.0,0.5]");
    }
}
