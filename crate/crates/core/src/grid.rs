use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Strictly increasing time grid `0 = t_0 < ... < t_m = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParameter("a time grid needs at least two points".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter("time grid must start at 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    pub fn uniform(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || steps == 0 {
            return Err(Error::InvalidParameter("uniform grid needs T > 0 and at least one step".into()));
        }
        let h = t_final / steps as f64;
        let mut times: Vec<f64> = (0..steps).map(|j| j as f64 * h).collect();
        times.push(t_final);
        Self::new(times)
    }

    /// Copy with `t` inserted (no-op when `t` already is a node).
    pub fn with_point(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t < self.t_final()) {
            return Err(Error::InvalidParameter("inserted time must be interior".into()));
        }
        let mut times = self.times.clone();
        match times.binary_search_by(|s| s.partial_cmp(&t).expect("finite grid")) {
            Ok(_) => {}
            Err(pos) => times.insert(pos, t),
        }
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    pub fn step(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    /// Index of the node closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (j, s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = j;
            }
        }
        best
    }

    /// Every `factor`-th node of a refined grid, which must be `self` refined
    /// uniformly by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidParameter("refinement factor must be positive".into()));
        }
        let mut times = Vec::with_capacity(self.steps() * factor + 1);
        for w in self.times.windows(2) {
            let h = (w[1] - w[0]) / factor as f64;
            times.extend((0..factor).map(|i| w[0] + i as f64 * h));
        }
        times.push(self.t_final());
        Self::new(times)
    }
}
