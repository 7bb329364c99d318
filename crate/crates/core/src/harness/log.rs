use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Bumped whenever a column is added, removed or reordered.
pub const LOG_SCHEMA_VERSION: u32 = 1;

/// One control tick. Column order is the field order. Positions are in the
/// inertial frame (m), yaws in rad, power in W.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TickRow {
    pub t: f64,
    pub phase: String,
    pub dcm_ref_x: f64,
    pub dcm_ref_y: f64,
    pub dcm_x: f64,
    pub dcm_y: f64,
    pub zmp_ref_x: f64,
    pub zmp_ref_y: f64,
    pub zmp_cmd_x: f64,
    pub zmp_cmd_y: f64,
    pub zmp_x: f64,
    pub zmp_y: f64,
    /// Signed distance of the commanded ZMP to the planned support polygon
    /// (negative inside).
    pub zmp_cmd_margin: f64,
    pub com_ref_x: f64,
    pub com_ref_y: f64,
    pub com_x: f64,
    pub com_y: f64,
    pub com_z: f64,
    pub com_vel_cmd_x: f64,
    pub com_vel_cmd_y: f64,
    pub left_ref_x: f64,
    pub left_ref_y: f64,
    pub left_ref_z: f64,
    pub left_x: f64,
    pub left_y: f64,
    pub left_z: f64,
    pub left_yaw: f64,
    pub right_ref_x: f64,
    pub right_ref_y: f64,
    pub right_ref_z: f64,
    pub right_x: f64,
    pub right_y: f64,
    pub right_z: f64,
    pub right_yaw: f64,
    pub dcm_integral_x: f64,
    pub dcm_integral_y: f64,
    pub simplified_status: String,
    pub simplified_iterations: usize,
    pub wbc_status: String,
    pub wbc_iterations: usize,
    pub torque_status: String,
    pub torque_iterations: usize,
    pub torque_dynamics_residual: f64,
    pub torque_zmp_projected: bool,
    pub fixed_foot: String,
    pub base_est_x: f64,
    pub base_est_y: f64,
    pub base_est_z: f64,
    pub base_x: f64,
    pub base_y: f64,
    pub base_z: f64,
    /// `sum_i max(tau_i s_dot_i, 0)` of this tick.
    pub joint_power: f64,
    /// `|`-separated notes on errors and fallbacks; empty when none.
    pub flags: String,
}

fn header_line() -> String {
    format!("# dcmwalk tick log v{LOG_SCHEMA_VERSION}")
}

pub fn write_log<W: Write>(rows: &[TickRow], out: W) -> Result<(), HarnessError> {
    let mut out = out;
    writeln!(out, "{}", header_line()).map_err(|e| HarnessError::Csv(e.to_string()))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(column_names()).map_err(|e| HarnessError::Csv(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::Csv(e.to_string()))
}

pub fn read_log<R: BufRead>(input: R) -> Result<Vec<TickRow>, HarnessError> {
    let mut input = input;
    let mut first = String::new();
    input.read_line(&mut first).map_err(|e| HarnessError::Csv(e.to_string()))?;
    if first.trim_end() != header_line() {
        return Err(HarnessError::Csv(format!(
            "unsupported log version line `{}` (expected `{}`)",
            first.trim_end(),
            header_line()
        )));
    }
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(|e| HarnessError::Csv(e.to_string()))?.clone();
    if headers.iter().ne(column_names()) {
        return Err(HarnessError::Csv("log columns do not match the schema".into()));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| HarnessError::Csv(e.to_string())))
        .collect()
}

pub fn write_log_file(rows: &[TickRow], path: &Path) -> Result<(), HarnessError> {
    let f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_log(rows, std::io::BufWriter::new(f)).map_err(|e| e.at(path))
}

pub fn read_log_file(path: &Path) -> Result<Vec<TickRow>, HarnessError> {
    let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_log(BufReader::new(f)).map_err(|e| e.at(path))
}

/// Column names in schema order.
pub fn column_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        // A header-writing serializer keeps this in sync with the struct.
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(TickRow::default()).expect("in-memory write");
        let text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        text.lines().next().expect("header").split(',').map(String::from).collect()
    })
}
