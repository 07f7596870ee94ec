use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::World;
use crate::robot::{collision_centers, pair_clearance, ChainPose, RobotModel, WholeBodyState};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FreeStateConfig {
    /// Extra clearance required beyond the collision thresholds.
    pub margin: f64,
    /// Joints are drawn from `±fraction · q_max`.
    pub joint_fraction: f64,
    pub max_attempts: usize,
}

impl Default for FreeStateConfig {
    fn default() -> Self {
        Self { margin: 0.05, joint_fraction: 0.5, max_attempts: 10_000 }
    }
}

/// True when every collision point clears the world and every self pair is
/// separated, each by at least `margin`.
pub fn state_is_free(world: &World, robot: &RobotModel, s: &WholeBodyState, margin: f64) -> bool {
    let col = &robot.collision;
    if world.esdf.query([s.x, s.y]).distance < col.base_threshold + margin {
        return false;
    }
    if world.base_clearance([s.x, s.y], col.cylinder.radius) < margin {
        return false;
    }
    let chain = ChainPose::new(robot, s.base(), &s.q);
    let centers = collision_centers(robot, &chain);
    for (i, sph) in col.spheres.iter().enumerate() {
        let c = centers[i + 1];
        if super::sdf3_query(&world.scenario, [c.x, c.y, c.z]).distance < sph.radius + margin {
            return false;
        }
    }
    col.self_pairs.iter().all(|&p| pair_clearance(robot, &centers, p).clearance >= margin)
}

/// Uniform base pose in the room and joint vector inside the scaled limits,
/// rejected until collision free.
pub fn sample_free_state<R: Rng>(world: &World, robot: &RobotModel, cfg: &FreeStateConfig, rng: &mut R) -> Result<WholeBodyState> {
    let [x0, y0, x1, y1] = world.scenario.room;
    for _ in 0..cfg.max_attempts {
        let x = rng.gen_range(x0..x1);
        let y = rng.gen_range(y0..y1);
        let theta = rng.gen_range(-PI..PI);
        let q = robot
            .limits
            .q_max
            .iter()
            .map(|&m| {
                let b = m * cfg.joint_fraction;
                if b > 0.0 {
                    rng.gen_range(-b..b)
                } else {
                    0.0
                }
            })
            .collect();
        let s = WholeBodyState { x, y, theta, q };
        if state_is_free(world, robot, &s, cfg.margin) {
            return Ok(s);
        }
    }
    Err(Error::SamplingExhausted(cfg.max_attempts))
}
