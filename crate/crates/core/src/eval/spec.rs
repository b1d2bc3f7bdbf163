use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::EvalError;
use crate::agent::{MissionKind, MissionPrompt};
use crate::directory::Directory;
use crate::gateway::{GatewayConfig, WotGateway, DEFAULT_OUTPUT_CAP};
use crate::geometry::{Point2, Region};
use crate::planners::FormationShape;
use crate::sim::{DeviceKind, DeviceSpec, IrrigationRule, World, WorldConfig};
use crate::wot::{MissionBrief, Servient, ServientConfig, ServiceKind};

pub const MISSION_THING_ID: &str = "mission-area";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationSpec {
    pub shape: FormationShape,
    pub center: Point2,
    pub orientation_deg: f64,
    pub spacing: f64,
    pub altitude: f64,
}

impl Default for FormationSpec {
    fn default() -> Self {
        Self {
            shape: FormationShape::Star,
            center: Point2::new(150.0, 150.0),
            orientation_deg: 90.0,
            spacing: 5.0,
            altitude: 20.0,
        }
    }
}

/// Scoring tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub slot_horizontal_m: f64,
    pub slot_vertical_m: f64,
    pub star_m: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            slot_horizontal_m: 2.0,
            slot_vertical_m: 2.0,
            star_m: 2.0,
        }
    }
}

/// Everything that defines a mission instance apart from the reasoner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub kind: MissionKind,
    pub n_drones: usize,
    pub region: Region,
    pub camera_fov_deg: f64,
    pub alt_min: f64,
    pub alt_max: f64,
    pub formation: FormationSpec,
    pub sensors: Vec<DeviceSpec>,
    pub rule: IrrigationRule,
    pub planner: bool,
    pub helpers: bool,
    /// World seed; identical for every run of a batch.
    pub seed: u64,
    pub tolerances: Tolerances,
    pub output_cap_bytes: usize,
}

pub fn default_field_devices() -> Vec<DeviceSpec> {
    let dev = |id: &str, kind, x, y, value_seed| DeviceSpec {
        id: id.to_string(),
        kind,
        position: Point2::new(x, y),
        comm_range_m: 30.0,
        value_seed,
    };
    vec![
        dev("hum-1", DeviceKind::HumiditySensor, 80.0, 220.0, 1),
        dev("hum-2", DeviceKind::HumiditySensor, 200.0, 90.0, 2),
        dev("hum-3", DeviceKind::HumiditySensor, 320.0, 200.0, 3),
        dev("temp-1", DeviceKind::TemperatureSensor, 260.0, 260.0, 4),
        dev("valve-1", DeviceKind::IrrigationActuator, 40.0, 150.0, 5),
    ]
}

impl MissionSpec {
    pub fn new(kind: MissionKind) -> Self {
        Self {
            kind,
            n_drones: 10,
            region: Region::new(Point2::new(0.0, 0.0), 400.0, 300.0),
            camera_fov_deg: 90.0,
            alt_min: 10.0,
            alt_max: 120.0,
            formation: FormationSpec::default(),
            sensors: if kind == MissionKind::Irrigation {
                default_field_devices()
            } else {
                Vec::new()
            },
            rule: IrrigationRule::default(),
            planner: kind != MissionKind::CoverageNoTool,
            helpers: false,
            seed: 0,
            tolerances: Tolerances::default(),
            output_cap_bytes: DEFAULT_OUTPUT_CAP,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_helpers(mut self, on: bool) -> Self {
        self.helpers = on;
        self
    }

    pub fn with_planner(mut self, on: bool) -> Self {
        self.planner = on;
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.kind == MissionKind::CoverageNoTool && self.planner {
            return Err(EvalError::InvalidSpec("coverage_no_tool runs without the planning tool".into()));
        }
        if self.n_drones == 0 {
            return Err(EvalError::InvalidSpec("n_drones must be at least 1".into()));
        }
        if self.kind == MissionKind::Irrigation {
            self.sensor_layout()?;
        }
        Ok(())
    }

    /// Humidity, temperature and actuator ids. Exactly three humidity
    /// sensors, one temperature sensor and one actuator are expected.
    pub fn sensor_layout(&self) -> Result<(Vec<String>, String, String), EvalError> {
        let ids = |k: DeviceKind| -> Vec<String> {
            self.sensors
                .iter()
                .filter(|d| d.kind == k)
                .map(|d| d.id.clone())
                .collect()
        };
        let hum = ids(DeviceKind::HumiditySensor);
        let temp = ids(DeviceKind::TemperatureSensor);
        let act = ids(DeviceKind::IrrigationActuator);
        match (hum.len(), temp.as_slice(), act.as_slice()) {
            (3, [t], [a]) => Ok((hum, t.clone(), a.clone())),
            _ => Err(EvalError::BadSensorLayout(format!(
                "{} humidity, {} temperature, {} actuator devices",
                hum.len(),
                temp.len(),
                act.len()
            ))),
        }
    }

    pub fn world_config(&self) -> WorldConfig {
        WorldConfig {
            region: self.region,
            rng_seed: self.seed,
            n_drones: self.n_drones,
            devices: self.sensors.clone(),
            irrigation_rule: self.rule,
            ..WorldConfig::default()
        }
    }

    pub fn gateway_config(&self) -> GatewayConfig {
        GatewayConfig {
            coverage_planner: self.planner && self.kind == MissionKind::CoverageWithTool,
            formation_planner: self.planner && self.kind == MissionKind::Formation,
            helpers: self.helpers,
            output_cap_bytes: self.output_cap_bytes,
        }
    }

    pub fn brief(&self) -> MissionBrief {
        let mut extra = BTreeMap::new();
        match self.kind {
            MissionKind::Formation => {
                extra.insert("formation".to_string(), json!(self.formation));
            }
            MissionKind::Irrigation => {
                extra.insert("irrigation_rule".to_string(), json!(self.rule));
            }
            _ => {}
        }
        MissionBrief {
            id: MISSION_THING_ID.to_string(),
            region: self.region,
            alt_min: self.alt_min,
            alt_max: self.alt_max,
            camera_fov_deg: self.camera_fov_deg,
            extra,
        }
    }

    pub fn mission_text(&self) -> String {
        let tail = "When the objective is met, land every drone that took off and confirm that all of them are disarmed before concluding.";
        let body = match self.kind {
            MissionKind::CoverageWithTool | MissionKind::CoverageNoTool => format!(
                "Cover the rectangular area described by the mission Thing with all {} drones so that their downward cameras jointly observe it. Respect the altitude bounds and the camera field of view published there.",
                self.n_drones
            ),
            MissionKind::Formation => format!(
                "Fly all {} drones into the {} formation described by the 'formation' property of the mission Thing (centre, spacing, orientation and altitude) and hold it.",
                self.n_drones, self.formation.shape
            ),
            MissionKind::Irrigation => "Collect a reading from every humidity and temperature sensor in the field by flying a drone within its communication range. Irrigation is required when the mean humidity is at or below the humidity threshold or the mean temperature is at or above the temperature threshold published in the mission Thing's 'irrigation_rule'. Trigger the irrigation actuator exactly when it is required.".to_string(),
        };
        format!("{body} {tail}")
    }

    pub fn prompt(&self) -> MissionPrompt {
        MissionPrompt {
            mission_id: format!("{}-seed{}", self.kind, self.seed),
            mission_thing: MISSION_THING_ID.to_string(),
            text: self.mission_text(),
        }
    }

    /// Builds world, servient, directory and gateway for one run.
    pub fn build_environment(&self) -> Result<Environment, EvalError> {
        self.validate()?;
        let world = World::new(self.world_config()).map_err(|e| EvalError::InvalidSpec(e.to_string()))?;
        let gw = self.gateway_config();
        let mut services = Vec::new();
        if gw.coverage_planner {
            services.push(ServiceKind::CoveragePlanner);
        }
        if gw.formation_planner {
            services.push(ServiceKind::FormationPlanner);
        }
        let servient = Arc::new(Servient::new(
            world,
            ServientConfig {
                services,
                mission: Some(self.brief()),
            },
        ));
        let directory = Arc::new(Directory::default());
        for td in servient.thing_descriptions() {
            directory
                .register(td.clone(), None)
                .map_err(|e| EvalError::InvalidSpec(e.to_string()))?;
        }
        let gateway = Arc::new(WotGateway::new(servient.clone(), directory.clone(), gw));
        Ok(Environment {
            servient,
            directory,
            gateway,
        })
    }
}

pub struct Environment {
    pub servient: Arc<Servient>,
    pub directory: Arc<Directory>,
    pub gateway: Arc<WotGateway>,
}
