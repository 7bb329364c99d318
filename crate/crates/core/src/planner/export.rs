use std::io;
use std::path::Path;

use nalgebra::Vector2;

use super::footsteps::{Footstep, Side};
use super::references::ReferenceTrajectories;

pub const PLAN_CSV_HEADER: [&str; 20] = [
    "t", "xi_x", "xi_y", "xi_dot_x", "xi_dot_y", "zmp_x", "zmp_y", "com_x", "com_y", "com_vel_x", "com_vel_y",
    "lf_x", "lf_y", "lf_z", "lf_yaw", "rf_x", "rf_y", "rf_z", "rf_yaw", "phase",
];

fn csv_err(path: &Path, e: csv::Error) -> io::Error {
    io::Error::other(format!("{}: {e}", path.display()))
}

/// One row per reference sample.
pub fn write_plan_csv(refs: &ReferenceTrajectories, path: &Path) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(PLAN_CSV_HEADER).map_err(|e| csv_err(path, e))?;
    for s in &refs.samples {
        let mut row: Vec<String> = [
            s.t,
            s.dcm.x,
            s.dcm.y,
            s.dcm_rate.x,
            s.dcm_rate.y,
            s.zmp.x,
            s.zmp.y,
            s.com.x,
            s.com.y,
            s.com_velocity.x,
            s.com_velocity.y,
            s.left.position.x,
            s.left.position.y,
            s.left.position.z,
            s.left.yaw,
            s.right.position.x,
            s.right.position.y,
            s.right.position.z,
            s.right.yaw,
        ]
        .iter()
        .map(|v| v.to_string())
        .collect();
        row.push(s.phase.as_str().to_string());
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()
}

/// Whitespace-separated footstep list with a commented header.
pub fn format_footsteps(steps: &[Footstep]) -> String {
    let mut out = String::from("# footsteps v1\n# side x y yaw impact_time step_duration\n");
    for s in steps {
        out.push_str(&format!(
            "{} {} {} {} {} {}\n",
            s.side.as_str(),
            s.position.x,
            s.position.y,
            s.yaw,
            s.impact_time,
            s.step_duration
        ));
    }
    out
}

pub fn parse_footsteps(text: &str) -> Result<Vec<Footstep>, String> {
    let mut steps = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(format!("line {}: expected 6 fields, found {}", i + 1, f.len()));
        }
        let side = match f[0] {
            "left" => Side::Left,
            "right" => Side::Right,
            other => return Err(format!("line {}: unknown side '{other}'", i + 1)),
        };
        let num = |k: usize| f[k].parse::<f64>().map_err(|e| format!("line {}: {e}", i + 1));
        steps.push(Footstep {
            side,
            position: Vector2::new(num(1)?, num(2)?),
            yaw: num(3)?,
            impact_time: num(4)?,
            step_duration: num(5)?,
        });
    }
    Ok(steps)
}

pub fn write_footsteps(steps: &[Footstep], path: &Path) -> io::Result<()> {
    std::fs::write(path, format_footsteps(steps)).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn footsteps_round_trip() {
        let steps = vec![Footstep {
            side: Side::Right,
            position: Vector2::new(0.1, -0.08),
            yaw: 0.3,
            impact_time: 1.0,
            step_duration: 0.1 + 0.2,
        }];
        assert_eq!(parse_footsteps(&format_footsteps(&steps)).unwrap(), steps);
    }
}
