use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sensors::IrrigationRule;
use super::SimError;
use crate::geometry::{Point2, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    HumiditySensor,
    TemperatureSensor,
    IrrigationActuator,
}

impl DeviceKind {
    pub fn is_sensor(self) -> bool {
        matches!(self, Self::HumiditySensor | Self::TemperatureSensor)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HumiditySensor => "humidity_sensor",
            Self::TemperatureSensor => "temperature_sensor",
            Self::IrrigationActuator => "irrigation_actuator",
        }
    }
}

/// Placement of a ground device at world construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub id: String,
    pub kind: DeviceKind,
    pub position: Point2,
    pub comm_range_m: f64,
    #[serde(default)]
    pub value_seed: u64,
}

/// Simulation parameters. Every rate and tolerance must be strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub tick_dt: f64,
    pub horiz_speed: f64,
    pub climb_speed: f64,
    pub arrival_tol: f64,
    pub collision_horiz: f64,
    pub collision_vert: f64,
    pub drain_ground_armed: f64,
    pub drain_hover: f64,
    pub drain_cruise: f64,
    pub capacity_mah: f64,
    pub region: Region,
    pub rng_seed: u64,
    pub n_drones: usize,
    /// Drones start on a line along +x from the region origin with this pitch.
    pub start_pitch_m: f64,
    pub devices: Vec<DeviceSpec>,
    pub irrigation_rule: IrrigationRule,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            tick_dt: 0.1,
            horiz_speed: 10.0,
            climb_speed: 2.5,
            arrival_tol: 1.0,
            collision_horiz: 2.0,
            collision_vert: 1.0,
            drain_ground_armed: 0.2,
            drain_hover: 1.0,
            drain_cruise: 1.5,
            capacity_mah: 5000.0,
            region: Region::new(Point2::new(0.0, 0.0), 400.0, 300.0),
            rng_seed: 0,
            n_drones: 10,
            start_pitch_m: 5.0,
            devices: Vec::new(),
            irrigation_rule: IrrigationRule::default(),
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("horiz_speed", self.horiz_speed),
            ("climb_speed", self.climb_speed),
            ("arrival_tol", self.arrival_tol),
            ("collision_horiz", self.collision_horiz),
            ("collision_vert", self.collision_vert),
            ("drain_ground_armed", self.drain_ground_armed),
            ("drain_hover", self.drain_hover),
            ("drain_cruise", self.drain_cruise),
            ("capacity_mah", self.capacity_mah),
            ("start_pitch_m", self.start_pitch_m),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        if !(self.tick_dt > 0.0 && self.tick_dt <= 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "tick_dt must lie in (0, 1], got {}",
                self.tick_dt
            )));
        }
        if !self.region.is_valid() {
            return Err(SimError::InvalidConfig("region must have positive extent".into()));
        }
        if self.n_drones == 0 || self.n_drones > 255 {
            return Err(SimError::InvalidConfig(format!(
                "n_drones must lie in [1, 255], got {}",
                self.n_drones
            )));
        }
        let mut ids: Vec<&str> = self.devices.iter().map(|d| d.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::InvalidConfig("duplicate device id".into()));
        }
        for d in &self.devices {
            if !(d.comm_range_m.is_finite() && d.comm_range_m > 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "device {} comm_range_m must be strictly positive",
                    d.id
                )));
            }
            if d.id.starts_with("uav-") {
                return Err(SimError::InvalidConfig(format!(
                    "device id {} collides with the drone namespace",
                    d.id
                )));
            }
        }
        Ok(())
    }

    /// Loads a JSON config; missing fields take their defaults.
    pub fn from_json_file(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let config: WorldConfig = serde_json::from_str(&text)
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }
}
