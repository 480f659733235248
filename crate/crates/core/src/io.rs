//! The JSON network-spec file format and trajectory/CSV emitters.
//!
//! A network file is UTF-8 JSON with 1-based ids:
//!
//! ```json
//! {
//!   "stations": 2,
//!   "classes": [
//!     {"id": 1, "station": 1, "arrival_rate": 1.0, "mean_service": 0.2, "priority_rank": 4},
//!     ...
//!   ],
//!   "routing": [[1, 2, 1.0], [3, 4, 1.0]]
//! }
//! ```
//!
//! Routing pairs not listed are zero.

use crate::error::ModelError;
use crate::fluid::FluidTrajectory;
use crate::format::fmt_sig;
use crate::model::NetworkSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version of the network-file schema.
pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid network file: {0}")]
    BadFile(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub stations: usize,
    pub classes: Vec<ClassEntry>,
    #[serde(default)]
    pub routing: Vec<RoutingEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEntry {
    pub id: usize,
    pub station: usize,
    pub arrival_rate: f64,
    pub mean_service: f64,
    pub priority_rank: usize,
}

/// `[from_class, to_class, probability]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoutingEntry(pub usize, pub usize, pub f64);

pub fn parse_network(json: &str) -> Result<NetworkSpec, IoError> {
    let file: NetworkFile = serde_json::from_str(json)?;
    network_from_file(&file)
}

pub fn network_from_file(file: &NetworkFile) -> Result<NetworkSpec, IoError> {
    let k = file.classes.len();
    if k == 0 {
        return Err(IoError::BadFile("no classes".into()));
    }
    let mut seen = vec![false; k];
    let mut alpha = vec![0.0; k];
    let mut m = vec![0.0; k];
    let mut station_of = vec![0usize; k];
    let mut rank = vec![0usize; k];
    for entry in &file.classes {
        if entry.id == 0 || entry.id > k {
            return Err(IoError::BadFile(format!(
                "class id {} out of range 1..{k}",
                entry.id
            )));
        }
        let idx = entry.id - 1;
        if seen[idx] {
            return Err(IoError::BadFile(format!("duplicate class id {}", entry.id)));
        }
        seen[idx] = true;
        if entry.station == 0 || entry.station > file.stations {
            return Err(IoError::BadFile(format!(
                "class {} references station {} (have {})",
                entry.id, entry.station, file.stations
            )));
        }
        alpha[idx] = entry.arrival_rate;
        m[idx] = entry.mean_service;
        station_of[idx] = entry.station - 1;
        rank[idx] = entry.priority_rank;
    }
    let mut routing = vec![vec![0.0; k]; k];
    for RoutingEntry(from, to, p) in &file.routing {
        if *from == 0 || *from > k || *to == 0 || *to > k {
            return Err(IoError::BadFile(format!(
                "routing entry [{from}, {to}, {p}] references an unknown class"
            )));
        }
        if routing[from - 1][to - 1] != 0.0 {
            return Err(IoError::BadFile(format!(
                "duplicate routing entry for classes {from} -> {to}"
            )));
        }
        routing[from - 1][to - 1] = *p;
    }
    Ok(NetworkSpec::new(
        file.stations,
        alpha,
        m,
        station_of,
        routing,
        rank,
    )?)
}

pub fn file_from_network(spec: &NetworkSpec) -> NetworkFile {
    let k = spec.num_classes();
    let classes = (0..k)
        .map(|i| ClassEntry {
            id: i + 1,
            station: spec.station_of(i) + 1,
            arrival_rate: spec.arrival_rates()[i],
            mean_service: spec.mean_service()[i],
            priority_rank: spec.priority_rank()[i],
        })
        .collect();
    let mut routing = Vec::new();
    for from in 0..k {
        for to in 0..k {
            let p = spec.routing_prob(from, to);
            if p != 0.0 {
                routing.push(RoutingEntry(from + 1, to + 1, p));
            }
        }
    }
    NetworkFile {
        stations: spec.num_stations(),
        classes,
        routing,
    }
}

pub fn network_to_json(spec: &NetworkSpec) -> String {
    serde_json::to_string_pretty(&file_from_network(spec)).expect("network serializes")
}

/// Writes a trajectory as CSV: `t, q_1..q_K, u_1..u_K, event`, one row per
/// breakpoint.
pub fn write_trajectory_csv<W: std::io::Write>(
    w: &mut W,
    trajectory: &FluidTrajectory,
) -> std::io::Result<()> {
    let k = trajectory.breakpoints[0].state.levels.len();
    let mut header = String::from("t");
    for i in 1..=k {
        header.push_str(&format!(",q_{i}"));
    }
    for i in 1..=k {
        header.push_str(&format!(",u_{i}"));
    }
    header.push_str(",event");
    writeln!(w, "{header}")?;
    for bp in &trajectory.breakpoints {
        let mut row = fmt_sig(bp.state.time);
        for &q in &bp.state.levels {
            row.push(',');
            row.push_str(&fmt_sig(q));
        }
        for &u in &bp.rates.rates {
            row.push(',');
            row.push_str(&fmt_sig(u));
        }
        row.push(',');
        row.push_str(&bp.reason.label());
        writeln!(w, "{row}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{builtin_network, Builtin, BuiltinParams};

    #[test]
    fn round_trip_builtin() {
        let spec = builtin_network(Builtin::ModifiedKrss, &BuiltinParams::default()).unwrap();
        let json = network_to_json(&spec);
        let back = parse_network(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let json = r#"{"stations": 1, "classes": [], "routing": [], "extra": 1}"#;
        assert!(matches!(parse_network(json), Err(IoError::Json(_))));
    }

    #[test]
    fn duplicate_routing_is_rejected() {
        let spec = builtin_network(Builtin::Krss, &BuiltinParams::default()).unwrap();
        let mut file = file_from_network(&spec);
        file.routing.push(RoutingEntry(1, 2, 0.5));
        assert!(matches!(
            network_from_file(&file),
            Err(IoError::BadFile(_))
        ));
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let spec = builtin_network(Builtin::Krss, &BuiltinParams::default()).unwrap();
        let mut file = file_from_network(&spec);
        file.classes[0].id = 9;
        assert!(matches!(network_from_file(&file), Err(IoError::BadFile(_))));
    }

    #[test]
    fn trajectory_csv_shape() {
        let spec = builtin_network(Builtin::Krss, &BuiltinParams::default()).unwrap();
        let traj = crate::fluid::fluid_solve(&spec, &[0.0, 1e-3, 0.0, 1e-3], 100.0).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,q_1,q_2,q_3,q_4,u_1,u_2,u_3,u_4,event");
        assert!(text.lines().count() > 2);
        assert!(text.lines().nth(1).unwrap().ends_with("start"));
    }
}
