//! Deterministic discrete-time stand-in for a multirotor SITL swarm.
//!
//! Point-mass kinematics at constant speeds, flight modes, a piecewise-linear
//! battery model, range-gated ground sensors and pairwise collision
//! detection. All mutation goes through [`World`]; callers that share a world
//! wrap it in a mutex.

mod config;
mod sensors;
mod world;

pub use config::{DeviceKind, DeviceSpec, WorldConfig};
pub use sensors::{
    device_readings, IrrigationRule, SensorScenario, HUMIDITY_HALF_SPAN, HUMIDITY_SENSOR_SPREAD,
    TEMPERATURE_HALF_SPAN,
};
pub use world::{
    CollisionEvent, DroneSample, DroneState, FlightMode, GroundDevice, Telemetry, TelemetryFrame,
    World, WorldSnapshot,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown drone {0}")]
    UnknownDrone(String),
    #[error("drone {0} cannot disarm while airborne")]
    DisarmWhileAirborne(String),
    #[error("takeoff altitude must be strictly positive, got {0}")]
    NonPositiveAltitude(f64),
    #[error("drone {0} is not armed")]
    NotArmed(String),
    #[error("drone {0} is not airborne")]
    NotAirborne(String),
    #[error("drone {id} must be in GUIDED mode, currently {mode}")]
    NotGuided { id: String, mode: FlightMode },
    #[error("invalid flight mode {0:?}")]
    InvalidMode(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("drone {requester} is {distance_m:.1} m from {device}, range is {range_m} m")]
    OutOfRange {
        device: String,
        requester: String,
        distance_m: f64,
        range_m: f64,
    },
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("device {0} is not an actuator")]
    NotAnActuator(String),
    #[error("device {0} is not a sensor")]
    NotASensor(String),
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
}

impl SimError {
    /// Stable machine-readable code carried through the gateway.
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownDrone(_) => "unknown_drone",
            Self::DisarmWhileAirborne(_) => "disarm_while_airborne",
            Self::NonPositiveAltitude(_) => "non_positive_altitude",
            Self::NotArmed(_) => "not_armed",
            Self::NotAirborne(_) => "not_airborne",
            Self::NotGuided { .. } => "not_guided",
            Self::InvalidMode(_) => "invalid_mode",
            Self::InvalidParameter(_) => "invalid_parameter",
            Self::OutOfRange { .. } => "out_of_range",
            Self::UnknownDevice(_) => "unknown_device",
            Self::NotAnActuator(_) => "not_an_actuator",
            Self::NotASensor(_) => "not_a_sensor",
            Self::InvalidConfig(_) => "invalid_config",
        }
    }
}
