use serde::{Deserialize, Serialize};

use super::EstimationError;

/// Slack on dwell comparisons so that sample times like `k * 0.01` switch
/// on the intended tick.
const DWELL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactState {
    Active,
    Inactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchmittSettings {
    /// N
    pub on_threshold: f64,
    /// N
    pub off_threshold: f64,
    /// s
    pub on_dwell: f64,
    /// s
    pub off_dwell: f64,
}

impl Default for SchmittSettings {
    fn default() -> Self {
        Self {
            on_threshold: 30.0,
            off_threshold: 10.0,
            on_dwell: 0.05,
            off_dwell: 0.05,
        }
    }
}

impl SchmittSettings {
    pub fn validate(&self) -> Result<(), EstimationError> {
        if !(self.off_threshold < self.on_threshold) {
            return Err(EstimationError::InvalidSettings("off threshold must be below the on threshold".into()));
        }
        if !(self.on_dwell >= 0.0 && self.off_dwell >= 0.0) {
            return Err(EstimationError::InvalidSettings("dwell times must be non-negative".into()));
        }
        Ok(())
    }
}

/// Hysteresis on a normal-force signal with a dwell time on each edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmittTrigger {
    state: ContactState,
    /// Start of the current run of samples beyond the switching threshold.
    pending_since: Option<f64>,
    last_time: Option<f64>,
}

impl SchmittTrigger {
    pub fn new(initial: ContactState) -> Self {
        Self {
            state: initial,
            pending_since: None,
            last_time: None,
        }
    }

    pub fn state(&self) -> ContactState {
        self.state
    }

    pub fn update(&mut self, force: f64, time: f64, settings: &SchmittSettings) -> Result<ContactState, EstimationError> {
        if let Some(previous) = self.last_time {
            if time < previous {
                return Err(EstimationError::NonMonotonicTime { previous, current: time });
            }
        }
        self.last_time = Some(time);
        let (beyond, dwell, next) = match self.state {
            ContactState::Inactive => (force >= settings.on_threshold, settings.on_dwell, ContactState::Active),
            ContactState::Active => (force <= settings.off_threshold, settings.off_dwell, ContactState::Inactive),
        };
        if !beyond {
            self.pending_since = None;
            return Ok(self.state);
        }
        let since = *self.pending_since.get_or_insert(time);
        if time - since >= dwell - DWELL_EPS {
            self.state = next;
            self.pending_since = None;
        }
        Ok(self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dwell_switches_on_the_first_sample() {
        let s = SchmittSettings {
            on_dwell: 0.0,
            ..Default::default()
        };
        let mut t = SchmittTrigger::new(ContactState::Inactive);
        assert_eq!(t.update(31.0, 0.0, &s).unwrap(), ContactState::Active);
    }

    #[test]
    fn time_must_not_go_back() {
        let mut t = SchmittTrigger::new(ContactState::Inactive);
        t.update(0.0, 1.0, &SchmittSettings::default()).unwrap();
        assert!(t.update(0.0, 0.5, &SchmittSettings::default()).is_err());
    }
}
