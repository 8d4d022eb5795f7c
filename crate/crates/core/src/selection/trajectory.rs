use serde::{Deserialize, Serialize};

/// One evaluated candidate: a bandwidth on the scalar grid or an Adam iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub criterion: f64,
    pub mmd: f64,
    pub proxy: f64,
    /// `L(h)`; the spectral product for MLPs.
    pub lipschitz: f64,
    pub sigma: Option<f64>,
    pub tau: Option<f64>,
    /// Post-clip global gradient norm of the update taken from this iterate.
    pub grad_norm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub selected: usize,
}

impl Trajectory {
    pub fn selected_record(&self) -> Option<&TrajectoryRecord> {
        self.records.get(self.selected)
    }

    pub fn last(&self) -> Option<&TrajectoryRecord> {
        self.records.last()
    }

    /// Largest proxy over visited iterates; the class-level complexity.
    pub fn max_proxy(&self) -> f64 {
        self.records.iter().map(|r| r.proxy).fold(0.0, f64::max)
    }

    /// First index attaining the largest criterion value.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, r) in self.records.iter().enumerate() {
            if r.criterion > self.records[best].criterion {
                best = i;
            }
        }
        best
    }
}
