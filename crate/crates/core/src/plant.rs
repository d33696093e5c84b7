//! Differential-drive kinematics, first-order wheel motors and a planar world
//! of circular obstacles.

use std::f64::consts::PI;

use crate::controller::ControlParams;
use crate::error::{Result, SimError};
use crate::l293::Drive;

/// Below this yaw rate (rad/s) a step is integrated as a straight line.
pub const STRAIGHT_LINE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotGeometry {
    pub wheel_radius: f64,
    pub axle_length: f64,
    pub omega_max: f64,
    pub motor_tau: f64,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        RobotGeometry {
            wheel_radius: 0.03,
            axle_length: 0.15,
            omega_max: 10.0,
            motor_tau: 0.1,
        }
    }
}

impl RobotGeometry {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wheel_radius", self.wheel_radius),
            ("axle_length", self.axle_length),
            ("omega_max", self.omega_max),
            ("motor_tau", self.motor_tau),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::config(name, "must be positive"));
            }
        }
        Ok(())
    }

    /// Top linear speed in m/s.
    pub fn v_max(&self) -> f64 {
        self.wheel_radius * self.omega_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading in (-pi, pi].
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }
}

/// Wrap into (-pi, pi]. Angles already in range are returned unchanged.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Obstacle {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.x).hypot(y - self.y) < self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub initial_pose: Pose,
    pub obstacles: Vec<Obstacle>,
    pub duration_s: f64,
    pub control: ControlParams,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(SimError::config("duration_s", "must be positive"));
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.radius.is_finite() && o.radius > 0.0) {
                return Err(SimError::config(
                    format!("obstacle[{i}].radius"),
                    "must be positive",
                ));
            }
            if o.contains(self.initial_pose.x, self.initial_pose.y) {
                return Err(SimError::config(
                    format!("obstacle[{i}]"),
                    "robot starts inside this obstacle",
                ));
            }
        }
        Ok(())
    }
}

/// First-order motor lag toward `drive * duty_fraction * omega_max`.
pub fn wheel_speed_step(
    omega: f64,
    drive: Drive,
    duty_fraction: f64,
    geom: &RobotGeometry,
    dt: f64,
) -> f64 {
    let target = f64::from(drive.signum()) * duty_fraction * geom.omega_max;
    omega + (target - omega) * -(-dt / geom.motor_tau).exp_m1()
}

/// Exact-arc integration for wheel speeds held constant over `dt`.
pub fn pose_step(pose: Pose, omega_l: f64, omega_r: f64, geom: &RobotGeometry, dt: f64) -> Pose {
    let v = geom.wheel_radius * (omega_l + omega_r) / 2.0;
    let w = geom.wheel_radius * (omega_r - omega_l) / geom.axle_length;
    if w.abs() < STRAIGHT_LINE_EPS {
        let (s, c) = pose.theta.sin_cos();
        return Pose {
            x: pose.x + v * dt * c,
            y: pose.y + v * dt * s,
            theta: pose.theta,
        };
    }
    let radius = v / w;
    let theta_next = pose.theta + w * dt;
    Pose {
        x: pose.x + radius * (theta_next.sin() - pose.theta.sin()),
        y: pose.y - radius * (theta_next.cos() - pose.theta.cos()),
        theta: normalize_angle(theta_next),
    }
}

/// Distance in cm along the heading to the nearest obstacle boundary, or
/// `range_max_cm` when nothing is hit within range. Zero when inside an obstacle.
pub fn raycast_distance(pose: &Pose, obstacles: &[Obstacle], range_max_cm: f64) -> f64 {
    let (uy, ux) = pose.theta.sin_cos();
    let mut best = f64::INFINITY;
    for o in obstacles {
        let fx = pose.x - o.x;
        let fy = pose.y - o.y;
        let b = fx * ux + fy * uy;
        let c = fx * fx + fy * fy - o.radius * o.radius;
        if c <= 0.0 {
            return 0.0;
        }
        let disc = b * b - c;
        if disc < 0.0 {
            continue;
        }
        // outside the circle both roots share a sign; negative means behind
        let t = -b - disc.sqrt();
        if t >= 0.0 && t < best {
            best = t;
        }
    }
    (best * 100.0).min(range_max_cm)
}
