//! Completion tracking for acknowledged actions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::sim::World;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionState {
    Accepted,
    Running,
    Completed,
    Failed,
}

impl ActionState {
    pub fn is_final(self) -> bool {
        matches!(self, Self::Completed | Self::Failed)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accepted => "accepted",
            Self::Running => "running",
            Self::Completed => "completed",
            Self::Failed => "failed",
        }
    }
}

/// What must hold in the world for an action to count as done.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Completion {
    Immediate,
    Reach { target: Vec3 },
    Grounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub action_id: String,
    pub thing: String,
    pub action: String,
    pub state: ActionState,
    pub detail: String,
    pub issued_tick: u64,
    pub completion: Completion,
}

impl ActionRecord {
    pub fn status_href(&self) -> String {
        format!("/things/{}/actions/{}/{}", self.thing, self.action, self.action_id)
    }
}

/// How many recent actions a drone's `action_status` property lists.
pub const STATUS_HISTORY: usize = 8;

#[derive(Debug, Default)]
pub struct ActionTracker {
    next: u64,
    records: BTreeMap<String, ActionRecord>,
    /// Latest movement action per drone; older ones are superseded.
    active_motion: BTreeMap<String, String>,
}

impl ActionTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a new acknowledged action. Movement actions supersede any
    /// earlier unfinished movement on the same thing.
    pub fn issue(&mut self, thing: &str, action: &str, completion: Completion, tick: u64) -> ActionRecord {
        self.next += 1;
        let action_id = format!("act-{:05}", self.next);
        let immediate = completion == Completion::Immediate;
        let record = ActionRecord {
            action_id: action_id.clone(),
            thing: thing.to_string(),
            action: action.to_string(),
            state: if immediate {
                ActionState::Completed
            } else {
                ActionState::Accepted
            },
            detail: if immediate { "done".into() } else { "acknowledged".into() },
            issued_tick: tick,
            completion,
        };
        if !immediate {
            if let Some(prev) = self.active_motion.insert(thing.to_string(), action_id.clone()) {
                if let Some(r) = self.records.get_mut(&prev) {
                    if !r.state.is_final() {
                        r.state = ActionState::Failed;
                        r.detail = format!("superseded by {action_id}");
                    }
                }
            }
        }
        self.records.insert(action_id, record.clone());
        record
    }

    pub fn get(&self, action_id: &str) -> Option<&ActionRecord> {
        self.records.get(action_id)
    }

    /// Most recent records for a thing, oldest first.
    pub fn recent(&self, thing: &str, limit: usize) -> Vec<&ActionRecord> {
        let mut all: Vec<&ActionRecord> = self.records.values().filter(|r| r.thing == thing).collect();
        let skip = all.len().saturating_sub(limit);
        all.drain(..skip);
        all
    }

    /// Advances pending records against the current world state. Called
    /// once per simulation tick.
    pub fn update(&mut self, world: &World) {
        let tol = world.config().arrival_tol;
        for id in self.active_motion.values() {
            let Some(r) = self.records.get_mut(id) else { continue };
            if r.state.is_final() {
                continue;
            }
            let Ok(drone) = world.drone(&r.thing) else {
                r.state = ActionState::Failed;
                r.detail = "thing disappeared".into();
                continue;
            };
            if world.tick() > r.issued_tick && r.state == ActionState::Accepted {
                r.state = ActionState::Running;
                r.detail = "in progress".into();
            }
            if r.state != ActionState::Running {
                continue;
            }
            match r.completion {
                Completion::Immediate => {}
                Completion::Reach { target } => {
                    if drone.position.distance(&target) <= tol {
                        r.state = ActionState::Completed;
                        r.detail = "target reached".into();
                    } else if !drone.airborne && !drone.armed {
                        r.state = ActionState::Failed;
                        r.detail = "drone landed before reaching target".into();
                    } else if drone.target.is_none() {
                        r.state = ActionState::Failed;
                        r.detail = format!("target dropped in mode {}", drone.mode);
                    }
                }
                Completion::Grounded => {
                    if !drone.airborne && !drone.armed {
                        r.state = ActionState::Completed;
                        r.detail = "landed and disarmed".into();
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::WorldConfig;

    #[test]
    fn newer_motion_supersedes_older() {
        let mut t = ActionTracker::new();
        let a = t.issue("uav-1", "goto", Completion::Reach { target: Vec3::new(1.0, 0.0, 5.0) }, 0);
        let b = t.issue("uav-1", "land", Completion::Grounded, 0);
        assert_eq!(t.get(&a.action_id).unwrap().state, ActionState::Failed);
        assert_eq!(t.get(&b.action_id).unwrap().state, ActionState::Accepted);
        assert_eq!(a.action_id, "act-00001");
    }

    #[test]
    fn takeoff_completes_on_arrival() {
        let mut w = World::new(WorldConfig::default()).unwrap();
        let mut t = ActionTracker::new();
        w.cmd_arm("uav-1").unwrap();
        w.cmd_takeoff("uav-1", 5.0).unwrap();
        let rec = t.issue("uav-1", "takeoff", Completion::Reach { target: Vec3::new(0.0, 0.0, 5.0) }, w.tick());
        let mut seen = vec![rec.state];
        for _ in 0..40 {
            w.step();
            t.update(&w);
            seen.push(t.get(&rec.action_id).unwrap().state);
        }
        assert!(seen.windows(2).all(|p| p[0] <= p[1]));
        assert_eq!(*seen.last().unwrap(), ActionState::Completed);
    }
}
