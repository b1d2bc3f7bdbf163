use std::collections::BTreeSet;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{DeviceKind, WorldConfig};
use super::sensors::{device_readings, SensorScenario};
use super::SimError;
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlightMode {
    #[serde(rename = "GUIDED")]
    Guided,
    #[serde(rename = "LAND")]
    Land,
    #[serde(rename = "RTL")]
    Rtl,
    #[serde(rename = "STABILIZE")]
    Stabilize,
}

impl FlightMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Guided => "GUIDED",
            Self::Land => "LAND",
            Self::Rtl => "RTL",
            Self::Stabilize => "STABILIZE",
        }
    }

    /// Modes that count as a completed landing sequence.
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Land | Self::Rtl)
    }
}

impl fmt::Display for FlightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FlightMode {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "GUIDED" => Ok(Self::Guided),
            "LAND" => Ok(Self::Land),
            "RTL" => Ok(Self::Rtl),
            "STABILIZE" => Ok(Self::Stabilize),
            other => Err(SimError::InvalidMode(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneState {
    pub id: String,
    pub sysid: u8,
    pub position: Vec3,
    pub home: Vec3,
    pub mode: FlightMode,
    pub armed: bool,
    pub battery_mah: f64,
    pub capacity_mah: f64,
    pub target: Option<Vec3>,
    pub airborne: bool,
    /// Horizontal speed used in GUIDED and RTL; writable as `param.cruise_speed`.
    pub cruise_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundDevice {
    pub id: String,
    pub kind: DeviceKind,
    pub position: Vec3,
    pub comm_range_m: f64,
    pub value_seed: u64,
    pub last_reading: Option<f64>,
    pub triggered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub tick: u64,
    pub drone_a: String,
    pub drone_b: String,
    pub separation_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub position: Vec3,
    pub mode: FlightMode,
    pub armed: bool,
    pub battery_mah: f64,
    pub airborne: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneSample {
    pub id: String,
    pub position: Vec3,
    pub mode: FlightMode,
    pub armed: bool,
    pub airborne: bool,
}

/// Drone states at the end of one tick (tick 0 is the initial state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryFrame {
    pub tick: u64,
    pub time_s: f64,
    pub drones: Vec<DroneSample>,
}

/// Everything a scorer needs from the world after a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSnapshot {
    pub tick: u64,
    pub time_s: f64,
    pub config: WorldConfig,
    pub drones: Vec<DroneState>,
    pub devices: Vec<GroundDevice>,
    pub collisions: Vec<CollisionEvent>,
    pub energy_mah: f64,
    pub history: Vec<TelemetryFrame>,
}

impl WorldSnapshot {
    pub fn drone(&self, id: &str) -> Option<&DroneState> {
        self.drones.iter().find(|d| d.id == id)
    }

    pub fn device(&self, id: &str) -> Option<&GroundDevice> {
        self.devices.iter().find(|d| d.id == id)
    }

    /// Drones that were airborne in at least one recorded frame.
    pub fn participating_drones(&self) -> Vec<&DroneState> {
        self.drones
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                self.history
                    .iter()
                    .any(|f| f.drones.get(*i).is_some_and(|s| s.airborne))
            })
            .map(|(_, d)| d)
            .collect()
    }
}

pub struct World {
    config: WorldConfig,
    drones: Vec<DroneState>,
    devices: Vec<GroundDevice>,
    pending_readings: Vec<Option<f64>>,
    scenario: SensorScenario,
    tick: u64,
    collisions: Vec<CollisionEvent>,
    contacts: BTreeSet<(usize, usize)>,
    history: Vec<TelemetryFrame>,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self, SimError> {
        config.validate()?;
        let drones = (0..config.n_drones)
            .map(|i| {
                let home = Vec3::new(
                    config.region.origin.x + i as f64 * config.start_pitch_m,
                    config.region.origin.y,
                    0.0,
                );
                DroneState {
                    id: format!("uav-{}", i + 1),
                    sysid: (i + 1) as u8,
                    position: home,
                    home,
                    mode: FlightMode::Stabilize,
                    armed: false,
                    battery_mah: config.capacity_mah,
                    capacity_mah: config.capacity_mah,
                    target: None,
                    airborne: false,
                    cruise_speed: config.horiz_speed,
                }
            })
            .collect();
        let devices = config
            .devices
            .iter()
            .map(|d| GroundDevice {
                id: d.id.clone(),
                kind: d.kind,
                position: Vec3::new(d.position.x, d.position.y, 0.0),
                comm_range_m: d.comm_range_m,
                value_seed: d.value_seed,
                last_reading: None,
                triggered: false,
            })
            .collect();
        let scenario = SensorScenario::generate(config.rng_seed, &config.irrigation_rule);
        let pending_readings = device_readings(&scenario, &config.devices, config.rng_seed);
        let mut world = Self {
            config,
            drones,
            devices,
            pending_readings,
            scenario,
            tick: 0,
            collisions: Vec::new(),
            contacts: BTreeSet::new(),
            history: Vec::new(),
        };
        world.record_frame();
        Ok(world)
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn time_s(&self) -> f64 {
        self.tick as f64 * self.config.tick_dt
    }

    pub fn scenario(&self) -> &SensorScenario {
        &self.scenario
    }

    pub fn drones(&self) -> &[DroneState] {
        &self.drones
    }

    pub fn devices(&self) -> &[GroundDevice] {
        &self.devices
    }

    pub fn collisions(&self) -> &[CollisionEvent] {
        &self.collisions
    }

    pub fn history(&self) -> &[TelemetryFrame] {
        &self.history
    }

    pub fn drone(&self, id: &str) -> Result<&DroneState, SimError> {
        self.drones
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| SimError::UnknownDrone(id.to_string()))
    }

    fn drone_mut(&mut self, id: &str) -> Result<&mut DroneState, SimError> {
        self.drones
            .iter_mut()
            .find(|d| d.id == id)
            .ok_or_else(|| SimError::UnknownDrone(id.to_string()))
    }

    pub fn device(&self, id: &str) -> Result<&GroundDevice, SimError> {
        self.devices
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| SimError::UnknownDevice(id.to_string()))
    }

    fn device_index(&self, id: &str) -> Result<usize, SimError> {
        self.devices
            .iter()
            .position(|d| d.id == id)
            .ok_or_else(|| SimError::UnknownDevice(id.to_string()))
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        WorldSnapshot {
            tick: self.tick,
            time_s: self.time_s(),
            config: self.config.clone(),
            drones: self.drones.clone(),
            devices: self.devices.clone(),
            collisions: self.collisions.clone(),
            energy_mah: self.energy_consumed(),
            history: self.history.clone(),
        }
    }

    // ---- commands -------------------------------------------------------

    pub fn cmd_arm(&mut self, id: &str) -> Result<(), SimError> {
        self.drone_mut(id)?.armed = true;
        Ok(())
    }

    pub fn cmd_disarm(&mut self, id: &str) -> Result<(), SimError> {
        let d = self.drone_mut(id)?;
        if d.airborne {
            return Err(SimError::DisarmWhileAirborne(id.to_string()));
        }
        d.armed = false;
        d.target = None;
        Ok(())
    }

    /// Switches to GUIDED and climbs to `alt` above the current position.
    pub fn cmd_takeoff(&mut self, id: &str, alt: f64) -> Result<(), SimError> {
        let d = self.drone_mut(id)?;
        if !alt.is_finite() || alt <= 0.0 {
            return Err(SimError::NonPositiveAltitude(alt));
        }
        if !d.armed {
            return Err(SimError::NotArmed(id.to_string()));
        }
        d.mode = FlightMode::Guided;
        d.target = Some(Vec3::new(d.position.x, d.position.y, alt));
        Ok(())
    }

    pub fn cmd_goto(&mut self, id: &str, x: f64, y: f64, alt: f64) -> Result<(), SimError> {
        let d = self.drone_mut(id)?;
        if !(x.is_finite() && y.is_finite()) {
            return Err(SimError::InvalidParameter("goto coordinates must be finite".into()));
        }
        if !alt.is_finite() || alt <= 0.0 {
            return Err(SimError::NonPositiveAltitude(alt));
        }
        if !d.airborne {
            return Err(SimError::NotAirborne(id.to_string()));
        }
        if d.mode != FlightMode::Guided {
            return Err(SimError::NotGuided {
                id: id.to_string(),
                mode: d.mode,
            });
        }
        d.target = Some(Vec3::new(x, y, alt));
        Ok(())
    }

    pub fn cmd_land(&mut self, id: &str) -> Result<(), SimError> {
        let d = self.drone_mut(id)?;
        if !d.airborne {
            return Err(SimError::NotAirborne(id.to_string()));
        }
        d.mode = FlightMode::Land;
        d.target = None;
        Ok(())
    }

    pub fn cmd_rtl(&mut self, id: &str) -> Result<(), SimError> {
        let d = self.drone_mut(id)?;
        if !d.airborne {
            return Err(SimError::NotAirborne(id.to_string()));
        }
        d.mode = FlightMode::Rtl;
        d.target = None;
        Ok(())
    }

    /// Sets the flight mode directly. GUIDED holds position; LAND and RTL
    /// behave like the corresponding commands when airborne.
    pub fn set_mode(&mut self, id: &str, mode: &str) -> Result<(), SimError> {
        let mode: FlightMode = mode.parse()?;
        let d = self.drone_mut(id)?;
        d.mode = mode;
        d.target = match mode {
            FlightMode::Guided if d.airborne => Some(d.position),
            _ => None,
        };
        Ok(())
    }

    pub fn set_cruise_speed(&mut self, id: &str, speed: f64) -> Result<(), SimError> {
        let max = self.config.horiz_speed;
        let d = self.drone_mut(id)?;
        if !(speed > 0.0 && speed <= max) {
            return Err(SimError::InvalidParameter(format!(
                "cruise_speed must lie in (0, {max}], got {speed}"
            )));
        }
        d.cruise_speed = speed;
        Ok(())
    }

    pub fn read_telemetry(&self, id: &str) -> Result<Telemetry, SimError> {
        let d = self.drone(id)?;
        Ok(Telemetry {
            position: d.position,
            mode: d.mode,
            armed: d.armed,
            battery_mah: d.battery_mah,
            airborne: d.airborne,
        })
    }

    pub fn sample_sensor(&mut self, device_id: &str, requester_id: &str) -> Result<f64, SimError> {
        let idx = self.device_index(device_id)?;
        if !self.devices[idx].kind.is_sensor() {
            return Err(SimError::NotASensor(device_id.to_string()));
        }
        let drone_pos = self.drone(requester_id)?.position;
        let dev = &self.devices[idx];
        let distance_m = drone_pos.horizontal_distance(&dev.position);
        if distance_m > dev.comm_range_m {
            return Err(SimError::OutOfRange {
                device: device_id.to_string(),
                requester: requester_id.to_string(),
                distance_m,
                range_m: dev.comm_range_m,
            });
        }
        let value = self.pending_readings[idx]
            .ok_or_else(|| SimError::NotASensor(device_id.to_string()))?;
        self.devices[idx].last_reading = Some(value);
        Ok(value)
    }

    pub fn trigger_irrigation(&mut self, actuator_id: &str) -> Result<(), SimError> {
        let idx = self.device_index(actuator_id)?;
        let dev = &mut self.devices[idx];
        if dev.kind != DeviceKind::IrrigationActuator {
            return Err(SimError::NotAnActuator(actuator_id.to_string()));
        }
        dev.triggered = true;
        Ok(())
    }

    /// Total battery used by the swarm, in mAh.
    pub fn energy_consumed(&self) -> f64 {
        self.drones
            .iter()
            .map(|d| d.capacity_mah - d.battery_mah)
            .sum()
    }

    // ---- time -----------------------------------------------------------

    /// Advances one tick and returns collision episodes that began on it.
    pub fn step(&mut self) -> Vec<CollisionEvent> {
        let dt = self.config.tick_dt;
        let climb = self.config.climb_speed;
        let drains = (
            self.config.drain_ground_armed,
            self.config.drain_hover,
            self.config.drain_cruise,
        );
        for d in &mut self.drones {
            let before = d.position;
            advance_drone(d, dt, climb);
            let moved = d.position != before;
            let drain = if !d.armed && !d.airborne {
                0.0
            } else if d.airborne && moved {
                drains.2
            } else if d.airborne || moved {
                drains.1
            } else {
                drains.0
            };
            d.battery_mah = (d.battery_mah - drain * dt).max(0.0);
            if d.battery_mah == 0.0 && d.airborne && d.mode != FlightMode::Land {
                d.mode = FlightMode::Land;
                d.target = None;
            }
        }
        self.tick += 1;
        let events = self.detect_collisions();
        self.record_frame();
        events
    }

    /// Runs `round(seconds / tick_dt)` ticks.
    pub fn advance(&mut self, seconds: f64) -> Vec<CollisionEvent> {
        let n = (seconds.max(0.0) / self.config.tick_dt).round() as u64;
        (0..n).flat_map(|_| self.step()).collect()
    }

    fn detect_collisions(&mut self) -> Vec<CollisionEvent> {
        let mut now = BTreeSet::new();
        let mut events = Vec::new();
        for i in 0..self.drones.len() {
            for j in (i + 1)..self.drones.len() {
                let (a, b) = (&self.drones[i], &self.drones[j]);
                if !(a.airborne && b.airborne) {
                    continue;
                }
                let dh = a.position.horizontal_distance(&b.position);
                let dv = (a.position.z - b.position.z).abs();
                if dh < self.config.collision_horiz && dv < self.config.collision_vert {
                    now.insert((i, j));
                    if !self.contacts.contains(&(i, j)) {
                        events.push(CollisionEvent {
                            tick: self.tick,
                            drone_a: a.id.clone(),
                            drone_b: b.id.clone(),
                            separation_m: a.position.distance(&b.position),
                        });
                    }
                }
            }
        }
        self.contacts = now;
        self.collisions.extend(events.iter().cloned());
        events
    }

    fn record_frame(&mut self) {
        let frame = TelemetryFrame {
            tick: self.tick,
            time_s: self.time_s(),
            drones: self
                .drones
                .iter()
                .map(|d| DroneSample {
                    id: d.id.clone(),
                    position: d.position,
                    mode: d.mode,
                    armed: d.armed,
                    airborne: d.airborne,
                })
                .collect(),
        };
        self.history.push(frame);
    }

    pub fn write_telemetry_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for frame in &self.history {
            serde_json::to_writer(&mut out, frame)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_collisions_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for event in &self.collisions {
            serde_json::to_writer(&mut out, event)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn approach(current: f64, goal: f64, max_step: f64) -> f64 {
    let delta = goal - current;
    if delta.abs() <= max_step {
        goal
    } else {
        current + max_step * delta.signum()
    }
}

fn move_horizontal(pos: &mut Vec3, gx: f64, gy: f64, max_step: f64) {
    let dx = gx - pos.x;
    let dy = gy - pos.y;
    let dist = dx.hypot(dy);
    if dist <= max_step {
        pos.x = gx;
        pos.y = gy;
    } else {
        pos.x += dx / dist * max_step;
        pos.y += dy / dist * max_step;
    }
}

fn advance_drone(d: &mut DroneState, dt: f64, climb: f64) {
    if !d.armed {
        return;
    }
    let h_step = d.cruise_speed * dt;
    let v_step = climb * dt;
    let mut descending = false;
    match d.mode {
        FlightMode::Guided => {
            // An armed drone on the ground only leaves it through a takeoff target.
            if let Some(t) = d.target {
                if d.airborne {
                    move_horizontal(&mut d.position, t.x, t.y, h_step);
                }
                d.position.z = approach(d.position.z, t.z, v_step);
            }
        }
        FlightMode::Land if d.airborne => {
            d.position.z = approach(d.position.z, 0.0, v_step);
            descending = true;
        }
        FlightMode::Rtl if d.airborne => {
            let home = d.home;
            if d.position.horizontal_distance(&home) > 0.0 {
                move_horizontal(&mut d.position, home.x, home.y, h_step);
            } else {
                d.position.z = approach(d.position.z, 0.0, v_step);
                descending = true;
            }
        }
        _ => {}
    }
    if d.position.z <= 0.0 {
        d.position.z = 0.0;
        if d.airborne && descending {
            d.airborne = false;
            d.armed = false;
            d.target = None;
        }
    } else {
        d.airborne = true;
    }
}
