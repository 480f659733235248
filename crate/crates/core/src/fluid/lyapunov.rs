//! Numerical audit of the phase/Lyapunov structure behind the
//! modified-KRSS stability argument.
//!
//! On a stable trajectory the dynamics settle in phases: first the
//! high-priority throttle classes 7 and 8 drain for good (`tau1`), then
//! the virtual-station classes 2 and 4 (`tau2`), and from there a family
//! of weighted workloads decreases whenever the owning station still
//! holds fluid. The auditor recomputes all of it from a solved trajectory
//! and reports which checks hold.

use super::{FluidTrajectory, TerminalVerdict, EPS_ZERO};
use crate::builtins::{require_family, Builtin};
use crate::error::ModelError;
use crate::model::NetworkSpec;

/// One failed drift check: the workload function of `station` (1-based)
/// failed to decrease on the segment starting at `segment_start`.
#[derive(Debug, Clone)]
pub struct DriftViolation {
    pub station: usize,
    pub segment_start: f64,
    pub slope: f64,
}

/// Observed value of one of the printed boundary comparisons; reported
/// without a pass/fail judgment.
#[derive(Debug, Clone)]
pub struct BoundaryObservation {
    pub name: &'static str,
    /// Largest observed left-minus-right value (<= 0 means the comparison
    /// held everywhere it applied).
    pub max_excess: f64,
    pub points_checked: usize,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    /// First time after which classes 7 and 8 stay empty.
    pub tau1: Option<f64>,
    /// First time after which classes 2 and 4 stay empty.
    pub tau2: Option<f64>,
    /// The proof's bound on tau1 for unit-mass starts:
    /// `max(1/(mu7 - alpha7), 1/(mu8 - alpha8))`.
    pub tau1_bound: f64,
    /// Station-indexed drift failures (the reading used for pass/fail).
    pub station_drift_violations: Vec<DriftViolation>,
    pub station_segments_checked: usize,
    /// Failures under the alternative class-indexed reading of the drift
    /// condition; informational only.
    pub class_drift_violations: usize,
    pub class_segments_checked: usize,
    pub boundary_observations: Vec<BoundaryObservation>,
}

impl AuditReport {
    /// Both phase times were reached, `tau1` respects its bound, and every
    /// station-indexed drift check after `tau2` passed.
    pub fn passes(&self) -> bool {
        match (self.tau1, self.tau2) {
            (Some(t1), Some(_)) => {
                t1 <= self.tau1_bound * (1.0 + 1e-9) + 1e-12
                    && self.station_drift_violations.is_empty()
            }
            _ => false,
        }
    }
}

const W_STATIONS: usize = 4;

/// Weighted immediate workloads and their Lyapunov scalings, in canonical
/// modified-KRSS class numbering.
fn lyapunov_values(m: &[f64], q: &[f64]) -> [f64; W_STATIONS] {
    let w1 = m[0] * q[0] + m[3] * (q[2] + q[5]);
    let w2 = m[2] * q[2] + m[1] * (q[0] + q[4]);
    let w3 = m[4] * (q[0] + q[4]);
    let w4 = m[5] * (q[2] + q[5]);
    [m[5] * w1, m[4] * w2, m[1] * w3, m[3] * w4]
}

/// First breakpoint time after which every class in `classes` stays below
/// [`EPS_ZERO`]. `None` when that cannot be certified on this trajectory.
fn permanent_zero_time(
    trajectory: &FluidTrajectory,
    classes: &[usize],
    emptied: bool,
) -> Option<f64> {
    let bps = &trajectory.breakpoints;
    let mut last_positive = None;
    for (i, bp) in bps.iter().enumerate() {
        if classes.iter().any(|&k| bp.state.levels[k] > EPS_ZERO) {
            last_positive = Some(i);
        }
    }
    match last_positive {
        None => Some(bps[0].state.time),
        Some(i) if i + 1 < bps.len() && emptied => Some(bps[i + 1].state.time),
        Some(_) => None,
    }
}

/// Audits a trajectory of a modified-KRSS-family network.
pub fn lyapunov_audit(
    spec: &NetworkSpec,
    trajectory: &FluidTrajectory,
) -> Result<AuditReport, ModelError> {
    let detected = crate::builtins::detect_family(spec)
        .filter(|d| d.family == Builtin::ModifiedKrss)
        .ok_or(ModelError::TopologyMismatch {
            expected: Builtin::ModifiedKrss.name(),
        })?;
    let canonical = require_family(spec, Builtin::ModifiedKrss)?;
    let to_actual = &detected.canonical_to_actual;
    let m = canonical.mean_service();
    let a = canonical.arrival_rates();
    let mu7 = 1.0 / m[6];
    let mu8 = 1.0 / m[7];
    let tau1_bound = {
        let b7 = if mu7 > a[6] { 1.0 / (mu7 - a[6]) } else { f64::INFINITY };
        let b8 = if mu8 > a[7] { 1.0 / (mu8 - a[7]) } else { f64::INFINITY };
        b7.max(b8)
    };

    // Levels of breakpoint `i` in canonical order.
    let levels = |i: usize| -> Vec<f64> {
        to_actual
            .iter()
            .map(|&actual| trajectory.breakpoints[i].state.levels[actual])
            .collect()
    };
    let emptied = matches!(trajectory.verdict, TerminalVerdict::Emptied(_));

    let tau1 = permanent_zero_time(
        trajectory,
        &[to_actual[6], to_actual[7]],
        emptied,
    );
    let tau2 = permanent_zero_time(
        trajectory,
        &[to_actual[1], to_actual[3]],
        emptied,
    );

    let mut station_drift_violations = Vec::new();
    let mut station_segments_checked = 0;
    let mut class_drift_violations = 0;
    let mut class_segments_checked = 0;
    let mut boundary = [
        BoundaryObservation { name: "f1 <= f4 when Q1 = 0", max_excess: f64::NEG_INFINITY, points_checked: 0 },
        BoundaryObservation { name: "f2 <= f3 when Q3 = 0", max_excess: f64::NEG_INFINITY, points_checked: 0 },
        BoundaryObservation { name: "f3 <= f2 when Q5 = 0", max_excess: f64::NEG_INFINITY, points_checked: 0 },
        BoundaryObservation { name: "f4 <= f4 when Q6 = 0 (as printed)", max_excess: f64::NEG_INFINITY, points_checked: 0 },
    ];

    // The drift and boundary properties hold once BOTH phases are over:
    // classes 7/8 empty (so the throttles run at their nominal rates) and
    // classes 2/4 empty. The observed tau2 can precede tau1 when 2 and 4
    // happen to drain first, so the audit window starts at the later one.
    let phase_start = match (tau1, tau2) {
        (Some(t1), Some(t2)) => Some(t1.max(t2)),
        _ => None,
    };
    if let Some(t2) = phase_start {
        let bps = &trajectory.breakpoints;
        for i in 0..bps.len().saturating_sub(1) {
            let t_start = bps[i].state.time;
            if t_start + 1e-12 < t2 {
                continue;
            }
            let dt = bps[i + 1].state.time - t_start;
            if dt <= 0.0 {
                continue;
            }
            let q_start = levels(i);
            let q_end = levels(i + 1);
            let f_start = lyapunov_values(m, &q_start);
            let f_end = lyapunov_values(m, &q_end);
            for s in 0..W_STATIONS {
                let slope = (f_end[s] - f_start[s]) / dt;
                let station_busy = canonical
                    .classes_at(s)
                    .iter()
                    .any(|&k| q_start[k] > EPS_ZERO);
                if station_busy {
                    station_segments_checked += 1;
                    if slope >= -1e-10 {
                        station_drift_violations.push(DriftViolation {
                            station: s + 1,
                            segment_start: t_start,
                            slope,
                        });
                    }
                }
                // Alternative reading: trigger on the level of class s+1.
                if q_start[s] > EPS_ZERO {
                    class_segments_checked += 1;
                    if slope >= -1e-10 {
                        class_drift_violations += 1;
                    }
                }
            }
        }
        // Boundary comparisons at breakpoints after the phase window opens.
        for i in 0..bps.len() {
            if bps[i].state.time + 1e-12 < t2 {
                continue;
            }
            let q = levels(i);
            let f = lyapunov_values(m, &q);
            let cases = [
                (q[0], f[0] - f[3]),
                (q[2], f[1] - f[2]),
                (q[4], f[2] - f[1]),
                (q[5], f[3] - f[3]),
            ];
            for (slot, (level, excess)) in cases.iter().enumerate() {
                if *level <= EPS_ZERO {
                    boundary[slot].points_checked += 1;
                    boundary[slot].max_excess = boundary[slot].max_excess.max(*excess);
                }
            }
        }
    }

    Ok(AuditReport {
        tau1,
        tau2,
        tau1_bound,
        station_drift_violations,
        station_segments_checked,
        class_drift_violations,
        class_segments_checked,
        boundary_observations: boundary.to_vec(),
    })
}
