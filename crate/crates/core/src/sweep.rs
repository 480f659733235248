//! Admission-rate sweeps combining the classifier, the fluid probe, and
//! the simulator, with reproducible CSV output.

use crate::builtins::{builtin_network, Builtin, BuiltinParams};
use crate::classify::{classify_modified_krss, classify_modified_lk, Verdict};
use crate::error::ModelError;
use crate::exec;
use crate::fluid::stability_probe;
use crate::format::fmt_sig;
use crate::model::{traffic_solve, BOUNDARY_TOL};
use crate::sim::{aggregate_replications, run_replications, SimConfig};

/// Families with a controllable admission rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFamily {
    ModifiedKrss,
    ModifiedLk,
}

impl SweepFamily {
    pub fn name(&self) -> &'static str {
        match self {
            SweepFamily::ModifiedKrss => "modified-krss",
            SweepFamily::ModifiedLk => "modified-lk",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ModelError> {
        match name {
            "modified-krss" => Ok(SweepFamily::ModifiedKrss),
            "modified-lk" => Ok(SweepFamily::ModifiedLk),
            other => Err(ModelError::UnknownBuiltin(other.to_string())),
        }
    }

    fn builtin(&self) -> Builtin {
        match self {
            SweepFamily::ModifiedKrss => Builtin::ModifiedKrss,
            SweepFamily::ModifiedLk => Builtin::ModifiedLk,
        }
    }

    fn classify(&self, spec: &crate::model::NetworkSpec) -> Result<Verdict, ModelError> {
        Ok(match self {
            SweepFamily::ModifiedKrss => classify_modified_krss(spec)?.verdict,
            SweepFamily::ModifiedLk => classify_modified_lk(spec)?.verdict,
        })
    }
}

/// One grid point's aggregate results.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub param: f64,
    /// Mean over replications; infinite when the point was skipped for
    /// having a station intensity >= 1.
    pub mean_total_queue: f64,
    pub ci_halfwidth: f64,
    pub diverged: bool,
    pub classifier: String,
    pub fluid_verdict: String,
    pub horizon: f64,
    pub seed: u64,
}

/// Knobs shared by every grid point.
#[derive(Debug, Clone, Copy)]
pub struct SweepSettings {
    pub sim: SimConfig,
    pub replications: usize,
    pub probe_samples: usize,
    pub probe_horizon: f64,
}

impl SweepSettings {
    /// The default experiment scale: horizon 2e6, warmup 2e5,
    /// 8 replications.
    pub fn standard(seed: u64) -> Self {
        SweepSettings {
            sim: SimConfig::new(2e6, 2e5, seed).expect("valid config"),
            replications: 8,
            probe_samples: 20,
            probe_horizon: 2e3,
        }
    }
}

/// Sweeps the family's admission rate over `grid` (sorted ascending in the
/// output). Every point gets the classifier verdict, the fluid-probe
/// verdict, and, unless some station intensity is >= 1, a simulation
/// aggregate over the configured replications. Engine failures at one
/// point are recorded in that record and do not stop the sweep.
pub fn sweep_admission(
    family: SweepFamily,
    grid: &[f64],
    settings: &SweepSettings,
) -> Vec<SweepRecord> {
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("grid values are comparable"));
    exec::map(&sorted, |&param| sweep_point(family, param, settings))
}

fn sweep_point(family: SweepFamily, param: f64, settings: &SweepSettings) -> SweepRecord {
    let spec = builtin_network(family.builtin(), &BuiltinParams::admitted(param))
        .expect("builtin families construct");
    let classifier = match family.classify(&spec) {
        Ok(v) => v.to_string(),
        Err(e) => format!("error: {e}"),
    };
    let fluid_verdict = match stability_probe(
        &spec,
        settings.probe_samples,
        settings.probe_horizon,
        settings.sim.seed(),
    ) {
        Ok(report) => report.verdict.to_string(),
        Err(e) => format!("error: {e}"),
    };

    let overloaded = match traffic_solve(&spec) {
        Ok(t) => t.rho.iter().any(|&r| r >= 1.0 - BOUNDARY_TOL),
        Err(_) => true,
    };
    let (mean_total_queue, ci_halfwidth, diverged) = if overloaded {
        (f64::INFINITY, f64::NAN, true)
    } else {
        let stats = run_replications(&spec, &settings.sim, settings.replications);
        aggregate_replications(&stats)
    };
    SweepRecord {
        param,
        mean_total_queue,
        ci_halfwidth,
        diverged,
        classifier,
        fluid_verdict,
        horizon: settings.sim.horizon(),
        seed: settings.sim.seed(),
    }
}

/// The default admission grid for the modified-KRSS demonstration: coarse
/// steps over [0.3, 0.8] and 0.01 steps over [0.84, 0.89].
pub fn figure3_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (3..=8).map(|i| i as f64 / 10.0).collect();
    for i in 84..=89 {
        grid.push(i as f64 / 100.0);
    }
    grid
}

/// Runs the modified-KRSS admission sweep over [`figure3_grid`].
pub fn reproduce_figure3(settings: &SweepSettings) -> Vec<SweepRecord> {
    sweep_admission(SweepFamily::ModifiedKrss, &figure3_grid(), settings)
}

pub const SWEEP_CSV_HEADER: &str =
    "param,mean_total_queue,ci_halfwidth,diverged,classifier,fluid_verdict,horizon,seed";

pub fn write_sweep_csv<W: std::io::Write>(
    w: &mut W,
    records: &[SweepRecord],
) -> std::io::Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt_sig(r.param),
            fmt_sig(r.mean_total_queue),
            fmt_sig(r.ci_halfwidth),
            r.diverged,
            r.classifier,
            r.fluid_verdict,
            fmt_sig(r.horizon),
            r.seed
        )?;
    }
    Ok(())
}

/// Convenience used by tests and the CLI: sweep to a CSV string.
pub fn sweep_to_csv(family: SweepFamily, grid: &[f64], settings: &SweepSettings) -> String {
    let records = sweep_admission(family, grid, settings);
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &records).expect("write to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_settings(seed: u64) -> SweepSettings {
        SweepSettings {
            sim: SimConfig::new(2e4, 2e3, seed).unwrap(),
            replications: 2,
            probe_samples: 5,
            probe_horizon: 2e3,
        }
    }

    #[test]
    fn theorem_branch_grid_points() {
        let records = sweep_admission(
            SweepFamily::ModifiedKrss,
            &[8.0 / 9.0, 1.0 / 3.0],
            &quick_settings(5),
        );
        assert_eq!(records.len(), 2);
        // Sorted ascending: 1/3 first.
        assert!(records[0].param < records[1].param);
        assert_eq!(records[0].classifier, "Unstable");
        assert!(records[0].diverged);
        assert_eq!(records[1].classifier, "Stable");
        assert_eq!(records[1].fluid_verdict, "Stable");
        assert!(!records[1].diverged);
        assert!(records[1].mean_total_queue.is_finite());
    }

    #[test]
    fn overloaded_point_is_flagged_without_simulation() {
        let records = sweep_admission(SweepFamily::ModifiedKrss, &[1.0], &quick_settings(5));
        assert!(records[0].diverged);
        assert!(records[0].mean_total_queue.is_infinite());
        assert_eq!(records[0].fluid_verdict, "Diverging");
    }

    #[test]
    fn csv_is_byte_identical_across_runs() {
        let grid = [0.86, 0.5];
        let a = sweep_to_csv(SweepFamily::ModifiedKrss, &grid, &quick_settings(9));
        let b = sweep_to_csv(SweepFamily::ModifiedKrss, &grid, &quick_settings(9));
        assert_eq!(a, b);
        assert!(a.starts_with(SWEEP_CSV_HEADER));
        assert_eq!(a.lines().count(), 3);
    }

    #[test]
    fn single_point_grid() {
        let csv = sweep_to_csv(SweepFamily::ModifiedLk, &[1.37], &quick_settings(3));
        assert_eq!(csv.lines().count(), 2);
        let row = csv.lines().nth(1).unwrap();
        assert!(row.starts_with("1.37,"));
    }
}
