//! Synthetic ground-sensor values.
//!
//! Each run first draws whether irrigation should be required (a fair coin),
//! then draws a humidity mean and a temperature mean uniformly from boxes
//! centred on the rule thresholds, rejecting pairs that disagree with the
//! coin. Individual humidity sensors get a seeded offset around the mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{DeviceKind, DeviceSpec};

/// Irrigation is needed when mean humidity is at or below `humidity_pct`
/// or mean temperature is at or above `temperature_c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrrigationRule {
    pub humidity_pct: f64,
    pub temperature_c: f64,
}

impl Default for IrrigationRule {
    fn default() -> Self {
        Self {
            humidity_pct: 57.0,
            temperature_c: 30.0,
        }
    }
}

impl IrrigationRule {
    pub fn required(&self, humidity_mean: f64, temperature_mean: f64) -> bool {
        humidity_mean <= self.humidity_pct || temperature_mean >= self.temperature_c
    }
}

/// Half-widths of the sampling boxes around the thresholds.
pub const HUMIDITY_HALF_SPAN: f64 = 10.0;
pub const TEMPERATURE_HALF_SPAN: f64 = 5.0;
/// Maximum spread of an individual humidity sensor around the mean.
pub const HUMIDITY_SENSOR_SPREAD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorScenario {
    pub required: bool,
    pub humidity_mean: f64,
    pub temperature_mean: f64,
}

impl SensorScenario {
    pub fn generate(run_seed: u64, rule: &IrrigationRule) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let required = rng.random_bool(0.5);
        let h_lo = rule.humidity_pct - HUMIDITY_HALF_SPAN;
        let h_hi = rule.humidity_pct + HUMIDITY_HALF_SPAN;
        let t_lo = rule.temperature_c - TEMPERATURE_HALF_SPAN;
        let t_hi = rule.temperature_c + TEMPERATURE_HALF_SPAN;
        loop {
            let humidity_mean = rng.random_range(h_lo..h_hi);
            let temperature_mean = rng.random_range(t_lo..t_hi);
            if rule.required(humidity_mean, temperature_mean) == required {
                return Self {
                    required,
                    humidity_mean,
                    temperature_mean,
                };
            }
        }
    }
}

fn device_rng(run_seed: u64, value_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(run_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ value_seed)
}

/// Readings each device returns when sampled; `None` for actuators.
///
/// Humidity offsets are re-centred so the three readings average to the
/// scenario mean; temperature sensors report the scenario mean directly.
pub fn device_readings(
    scenario: &SensorScenario,
    devices: &[DeviceSpec],
    run_seed: u64,
) -> Vec<Option<f64>> {
    let humidity_idx: Vec<usize> = devices
        .iter()
        .enumerate()
        .filter(|(_, d)| d.kind == DeviceKind::HumiditySensor)
        .map(|(i, _)| i)
        .collect();
    let offsets: Vec<f64> = humidity_idx
        .iter()
        .map(|&i| {
            device_rng(run_seed, devices[i].value_seed)
                .random_range(-HUMIDITY_SENSOR_SPREAD..HUMIDITY_SENSOR_SPREAD)
        })
        .collect();
    let mean_offset = if offsets.is_empty() {
        0.0
    } else {
        offsets.iter().sum::<f64>() / offsets.len() as f64
    };

    let mut out = vec![None; devices.len()];
    for (k, &i) in humidity_idx.iter().enumerate() {
        let v = scenario.humidity_mean + offsets[k] - mean_offset;
        out[i] = Some(v.clamp(0.0, 100.0));
    }
    for (i, d) in devices.iter().enumerate() {
        if d.kind == DeviceKind::TemperatureSensor {
            out[i] = Some(scenario.temperature_mean);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    fn layout() -> Vec<DeviceSpec> {
        let mk = |id: &str, kind, seed| DeviceSpec {
            id: id.into(),
            kind,
            position: Point2::new(0.0, 0.0),
            comm_range_m: 30.0,
            value_seed: seed,
        };
        vec![
            mk("h1", DeviceKind::HumiditySensor, 11),
            mk("h2", DeviceKind::HumiditySensor, 12),
            mk("h3", DeviceKind::HumiditySensor, 13),
            mk("t1", DeviceKind::TemperatureSensor, 21),
            mk("a1", DeviceKind::IrrigationActuator, 31),
        ]
    }

    #[test]
    fn rule_boundaries() {
        let r = IrrigationRule::default();
        assert!(r.required(57.0, 25.0));
        assert!(!r.required(57.01, 29.99));
        assert!(r.required(60.0, 30.0));
        assert!(!r.required(60.0, 29.9));
    }

    #[test]
    fn scenario_consistent_with_its_coin() {
        let rule = IrrigationRule::default();
        for seed in 0..100 {
            let s = SensorScenario::generate(seed, &rule);
            assert_eq!(rule.required(s.humidity_mean, s.temperature_mean), s.required);
            assert!((47.0..67.0).contains(&s.humidity_mean));
            assert!((25.0..35.0).contains(&s.temperature_mean));
        }
    }

    #[test]
    fn readings_average_to_mean() {
        let devices = layout();
        let s = SensorScenario::generate(5, &IrrigationRule::default());
        let r = device_readings(&s, &devices, 5);
        let h: Vec<f64> = r[..3].iter().map(|v| v.unwrap()).collect();
        let mean = h.iter().sum::<f64>() / 3.0;
        assert!((mean - s.humidity_mean).abs() < 1e-9);
        assert_eq!(r[3], Some(s.temperature_mean));
        assert_eq!(r[4], None);
    }

    #[test]
    fn readings_replay() {
        let devices = layout();
        let s = SensorScenario::generate(9, &IrrigationRule::default());
        assert_eq!(
            device_readings(&s, &devices, 9),
            device_readings(&s, &devices, 9)
        );
    }
}
