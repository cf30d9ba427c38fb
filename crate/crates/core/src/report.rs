//! Tabulated trajectory and level-line data for CSV export.

use crate::domain::DomainModel;
use crate::dynamics::{angular_impulse, eval_h_w, from_w, VortexConfig, WState};
use crate::error::Result;
use crate::flow::{lift_angles, Trajectory};
use crate::geometry::Point2;
use crate::levelset::LevelOrbit;
use std::io::{self, Write};

/// One row of the trajectory table.
#[derive(Debug, Clone, Copy)]
pub struct TrajRow {
    pub t: f64,
    pub z1: Point2,
    pub z2: Point2,
    pub h: f64,
    pub impulse: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Sampled physical-coordinate table of a transformed-frame trajectory,
/// with energy, angular impulse and the two continuous angle lifts.
pub struct TrajTable {
    pub rows: Vec<TrajRow>,
}

impl TrajTable {
    pub fn from_w_trajectory(
        model: &DomainModel,
        config: &VortexConfig,
        traj: &Trajectory<4>,
        star_center: Point2,
        n_rows: usize,
    ) -> Result<TrajTable> {
        let (fast, slow) = lift_angles(traj, (star_center.x, star_center.y))?;
        let t_end = traj.end_time();
        let n = n_rows.max(2);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let t = t_end * i as f64 / (n - 1) as f64;
            let y = traj.sample(t);
            let w = WState::from_array(&y);
            let state = from_w(config, &w);
            let theta1 = fast.value_at(t, w.w1.angle());
            let theta2 = slow.value_at(t, (w.w2 - star_center).angle());
            rows.push(TrajRow {
                t,
                z1: state.z1,
                z2: state.z2,
                h: eval_h_w(model, config, &w)?,
                impulse: angular_impulse(config, &state),
                theta1,
                theta2,
            });
        }
        Ok(TrajTable { rows })
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "t,z1x,z1y,z2x,z2y,H,I,theta1,theta2")?;
        for r in &self.rows {
            writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.t, r.z1.x, r.z1.y, r.z2.x, r.z2.y, r.h, r.impulse, r.theta1, r.theta2
            )?;
        }
        Ok(())
    }
}

/// Write the `(theta, r)` polyline of a traced level.
pub fn write_level_csv<W: Write>(orbit: &LevelOrbit, out: &mut W) -> io::Result<()> {
    writeln!(out, "theta,r")?;
    for (theta, r) in orbit.angles.iter().zip(&orbit.radii) {
        writeln!(out, "{:.17e},{:.17e}", theta, r)?;
    }
    Ok(())
}
