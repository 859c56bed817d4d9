use serde::{Deserialize, Serialize};

use super::SimError;

/// Leaky integrate-and-fire parameters, in units of one simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifConfig {
    pub tau: f64,
    pub v_th: f64,
    pub v_reset: f64,
}

impl Default for LifConfig {
    fn default() -> Self {
        Self {
            tau: 2.0,
            v_th: 0.5,
            v_reset: 0.0,
        }
    }
}

impl LifConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.tau <= 0.0 || !self.tau.is_finite() {
            return Err(SimError::InvalidLif(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if self.v_th <= self.v_reset || !self.v_th.is_finite() || !self.v_reset.is_finite() {
            return Err(SimError::InvalidLif(format!(
                "v_th ({}) must exceed v_reset ({})",
                self.v_th, self.v_reset
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifState {
    pub v: Vec<f64>,
}

impl LifState {
    pub fn resting(neurons: usize, cfg: &LifConfig) -> Self {
        Self {
            v: vec![cfg.v_reset; neurons],
        }
    }

    /// One Euler step with unit dt: `v += (input - v) / tau`, then fire and
    /// hard-reset where `v >= v_th`. Writes 0/1 into `spikes` and returns the
    /// number of spikes.
    pub fn step(
        &mut self,
        input: &[f64],
        cfg: &LifConfig,
        spikes: &mut [f64],
    ) -> Result<usize, SimError> {
        if input.len() != self.v.len() || spikes.len() != self.v.len() {
            return Err(SimError::Shape(format!(
                "lif step: {} neurons, {} inputs, {} spike slots",
                self.v.len(),
                input.len(),
                spikes.len()
            )));
        }
        let mut fired = 0;
        for ((v, &i), s) in self.v.iter_mut().zip(input).zip(spikes.iter_mut()) {
            if !i.is_finite() {
                return Err(SimError::NonFinite);
            }
            let next = *v + (i - *v) / cfg.tau;
            if next >= cfg.v_th {
                *v = cfg.v_reset;
                *s = 1.0;
                fired += 1;
            } else {
                *v = next;
                *s = 0.0;
            }
        }
        Ok(fired)
    }
}

/// Functional form of [`LifState::step`].
pub fn lif_step(
    state: &LifState,
    input: &[f64],
    cfg: &LifConfig,
) -> Result<(LifState, Vec<bool>), SimError> {
    let mut next = state.clone();
    let mut spikes = vec![0.0; input.len()];
    next.step(input, cfg, &mut spikes)?;
    Ok((next, spikes.into_iter().map(|s| s > 0.0).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step1(v: f64, i: f64) -> (f64, bool) {
        let (s, spikes) = lif_step(&LifState { v: vec![v] }, &[i], &LifConfig::default()).unwrap();
        (s.v[0], spikes[0])
    }

    #[test]
    fn hand_integrated_steps() {
        assert_eq!(step1(0.0, 1.0), (0.0, true));
        assert_eq!(step1(0.0, 0.4), (0.2, false));
        assert_eq!(step1(0.2, 0.0), (0.1, false));
    }

    #[test]
    fn rejects_non_finite_input() {
        let s = LifState { v: vec![0.0] };
        assert_eq!(
            lif_step(&s, &[f64::NAN], &LifConfig::default()),
            Err(SimError::NonFinite)
        );
        assert_eq!(
            lif_step(&s, &[f64::INFINITY], &LifConfig::default()),
            Err(SimError::NonFinite)
        );
    }

    #[test]
    fn config_validation() {
        assert!(LifConfig::default().validate().is_ok());
        assert!(LifConfig {
            tau: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LifConfig {
            v_th: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn sub_threshold_current_never_fires() {
        let cfg = LifConfig::default();
        for c in [0.0, 0.1, 0.3, 0.49, 0.4999] {
            let mut s = LifState::resting(1, &cfg);
            let mut spk = [0.0];
            for _ in 0..100 {
                assert_eq!(s.step(&[c], &cfg, &mut spk).unwrap(), 0, "c={c}");
            }
        }
    }

    #[test]
    fn unit_current_fires_every_step() {
        let cfg = LifConfig::default();
        let mut s = LifState::resting(1, &cfg);
        let mut spk = [0.0];
        for _ in 0..100 {
            assert_eq!(s.step(&[1.0], &cfg, &mut spk).unwrap(), 1);
        }
    }
}
