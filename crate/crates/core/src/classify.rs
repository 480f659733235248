//! Closed-form stability conditions for the builtin families.

use crate::builtins::{require_family, Builtin};
use crate::error::ModelError;
use crate::model::{traffic_solve, NetworkSpec, BOUNDARY_TOL};

/// Three-way stability verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "Stable",
            Verdict::Unstable => "Unstable",
            Verdict::Indeterminate => "Indeterminate",
        })
    }
}

/// A verdict plus the condition that produced it and the numbers behind it.
#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub reason: String,
    pub witness_values: Vec<(String, f64)>,
}

impl StabilityVerdict {
    fn new(verdict: Verdict, reason: &str, witness_values: Vec<(String, f64)>) -> Self {
        StabilityVerdict {
            verdict,
            reason: reason.to_string(),
            witness_values,
        }
    }
}

/// Strict comparison with an explicit boundary band of width [`BOUNDARY_TOL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Less,
    Boundary,
    Greater,
}

fn cmp(x: f64, y: f64) -> Cmp {
    if (x - y).abs() <= BOUNDARY_TOL {
        Cmp::Boundary
    } else if x < y {
        Cmp::Less
    } else {
        Cmp::Greater
    }
}

/// The nominal load of the KRSS virtual station: `alpha_1 m_2 + alpha_3 m_4`.
/// Accepts any KRSS-family instance (krss or modified-krss).
pub fn virtual_station_intensity(spec: &NetworkSpec) -> Result<f64, ModelError> {
    let canonical = require_family(spec, Builtin::Krss)
        .or_else(|_| require_family(spec, Builtin::ModifiedKrss))
        .map_err(|_| ModelError::TopologyMismatch {
            expected: "krss or modified-krss",
        })?;
    let a = canonical.arrival_rates();
    let m = canonical.mean_service();
    Ok(a[0] * m[1] + a[2] * m[3])
}

/// The exact KRSS condition: stable iff `rho < e` and the virtual-station
/// intensity is below 1. Values on the boundary yield Indeterminate.
pub fn classify_krss(spec: &NetworkSpec) -> Result<StabilityVerdict, ModelError> {
    let canonical = require_family(spec, Builtin::Krss)?;
    let traffic = traffic_solve(&canonical)?;
    let a = canonical.arrival_rates();
    let m = canonical.mean_service();
    let virtual_load = a[0] * m[1] + a[2] * m[3];

    let mut witness: Vec<(String, f64)> = traffic
        .rho
        .iter()
        .enumerate()
        .map(|(j, &r)| (format!("rho_{}", j + 1), r))
        .collect();
    witness.push(("virtual_station_intensity".into(), virtual_load));

    let rho_cmps: Vec<Cmp> = traffic.rho.iter().map(|&r| cmp(r, 1.0)).collect();
    let v_cmp = cmp(virtual_load, 1.0);
    if rho_cmps.iter().any(|&c| c == Cmp::Greater) {
        return Ok(StabilityVerdict::new(
            Verdict::Unstable,
            "station intensity >= 1",
            witness,
        ));
    }
    if v_cmp == Cmp::Greater {
        return Ok(StabilityVerdict::new(
            Verdict::Unstable,
            "virtual-station intensity > 1",
            witness,
        ));
    }
    if rho_cmps.iter().any(|&c| c == Cmp::Boundary) || v_cmp == Cmp::Boundary {
        return Ok(StabilityVerdict::new(
            Verdict::Indeterminate,
            "boundary",
            witness,
        ));
    }
    Ok(StabilityVerdict::new(
        Verdict::Stable,
        "rho < e and virtual-station intensity < 1",
        witness,
    ))
}

/// The two branches of the modified-KRSS stability theorem. Requires
/// `rho < e` and virtual-station intensity above 1; anything else is
/// outside the hypothesis.
pub fn classify_modified_krss(spec: &NetworkSpec) -> Result<StabilityVerdict, ModelError> {
    let canonical = require_family(spec, Builtin::ModifiedKrss)?;
    let traffic = traffic_solve(&canonical)?;
    let a = canonical.arrival_rates();
    let m = canonical.mean_service();
    let virtual_load = a[0] * m[1] + a[2] * m[3];
    let ratio7 = m[4] / (1.0 - a[6] * m[6]);
    let ratio8 = m[5] / (1.0 - a[7] * m[7]);

    let mut witness: Vec<(String, f64)> = traffic
        .rho
        .iter()
        .enumerate()
        .map(|(j, &r)| (format!("rho_{}", j + 1), r))
        .collect();
    witness.push(("virtual_station_intensity".into(), virtual_load));
    witness.push(("m5/(1-a7*m7)".into(), ratio7));
    witness.push(("m6/(1-a8*m8)".into(), ratio8));

    let rho_cmps: Vec<Cmp> = traffic.rho.iter().map(|&r| cmp(r, 1.0)).collect();
    if rho_cmps.iter().any(|&c| c == Cmp::Greater) {
        return Ok(StabilityVerdict::new(
            Verdict::Unstable,
            "station intensity >= 1",
            witness,
        ));
    }
    if rho_cmps.iter().any(|&c| c == Cmp::Boundary) {
        return Ok(StabilityVerdict::new(
            Verdict::Indeterminate,
            "boundary",
            witness,
        ));
    }
    match cmp(virtual_load, 1.0) {
        Cmp::Less => {
            return Ok(StabilityVerdict::new(
                Verdict::Indeterminate,
                "outside Theorem 1 hypothesis",
                witness,
            ))
        }
        Cmp::Boundary => {
            return Ok(StabilityVerdict::new(
                Verdict::Indeterminate,
                "boundary",
                witness,
            ))
        }
        Cmp::Greater => {}
    }

    let c7_stable = cmp(ratio7, m[1]);
    let c8_stable = cmp(ratio8, m[3]);
    let c7_unstable = cmp(ratio7, m[0]);
    let c8_unstable = cmp(ratio8, m[2]);
    if c7_stable == Cmp::Greater && c8_stable == Cmp::Greater {
        return Ok(StabilityVerdict::new(
            Verdict::Stable,
            "Theorem 1(1)",
            witness,
        ));
    }
    if c7_unstable == Cmp::Less && c8_unstable == Cmp::Less {
        return Ok(StabilityVerdict::new(
            Verdict::Unstable,
            "Theorem 1(2)",
            witness,
        ));
    }
    let any_boundary = [c7_stable, c8_stable, c7_unstable, c8_unstable]
        .iter()
        .any(|&c| c == Cmp::Boundary);
    Ok(StabilityVerdict::new(
        Verdict::Indeterminate,
        if any_boundary {
            "boundary"
        } else {
            "neither Theorem 1 branch applies"
        },
        witness,
    ))
}

const MODIFIED_LK_M: [f64; 6] = [0.1, 0.6, 0.1, 0.6, 0.7, 0.027];

/// The modified-LK theorem covers exactly two printed instances; everything
/// else is deliberately left Indeterminate.
pub fn classify_modified_lk(spec: &NetworkSpec) -> Result<StabilityVerdict, ModelError> {
    let canonical = require_family(spec, Builtin::ModifiedLk)?;
    let m = canonical.mean_service();
    let alpha6 = canonical.arrival_rates()[5];
    let witness = vec![
        ("alpha_6".into(), alpha6),
        ("m5".into(), m[4]),
        ("m6".into(), m[5]),
    ];
    let m_matches = m
        .iter()
        .zip(MODIFIED_LK_M.iter())
        .all(|(&got, &want)| (got - want).abs() <= BOUNDARY_TOL);
    if m_matches {
        if (alpha6 - 1.37).abs() <= BOUNDARY_TOL {
            return Ok(StabilityVerdict::new(
                Verdict::Stable,
                "Theorem 2(1)",
                witness,
            ));
        }
        if (alpha6 - 1.0).abs() <= BOUNDARY_TOL {
            return Ok(StabilityVerdict::new(
                Verdict::Unstable,
                "Theorem 2(2)",
                witness,
            ));
        }
    }
    Ok(StabilityVerdict::new(
        Verdict::Indeterminate,
        "outside Theorem 2 instances",
        witness,
    ))
}

/// The admission-rate boundaries of the two modified-KRSS theorem branches
/// for one throttle class: stable for rates above `stable_above`, unstable
/// below `unstable_below`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateThresholds {
    pub stable_above: f64,
    pub unstable_below: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Thresholds {
    pub class7: RateThresholds,
    pub class8: RateThresholds,
}

/// Boundaries of the theorem's conditions as functions of the throttle
/// rates: class 7 gets `((1 - m5/m2)/m7, (1 - m5/m1)/m7)` and class 8 the
/// analogous pair.
pub fn theorem1_thresholds(spec: &NetworkSpec) -> Result<Theorem1Thresholds, ModelError> {
    let canonical = require_family(spec, Builtin::ModifiedKrss)?;
    let m = canonical.mean_service();
    for class in [6, 7] {
        if m[class] == 0.0 {
            return Err(ModelError::Dimension(format!(
                "threshold undefined: mean service of class {} is zero",
                class + 1
            )));
        }
    }
    Ok(Theorem1Thresholds {
        class7: RateThresholds {
            stable_above: (1.0 - m[4] / m[1]) / m[6],
            unstable_below: (1.0 - m[4] / m[0]) / m[6],
        },
        class8: RateThresholds {
            stable_above: (1.0 - m[5] / m[3]) / m[7],
            unstable_below: (1.0 - m[5] / m[2]) / m[7],
        },
    })
}

/// Classifies an arbitrary network: family-specific conditions when the
/// topology is recognized, otherwise only the necessary condition
/// `rho < e` can decide.
pub fn classify_network(spec: &NetworkSpec) -> Result<StabilityVerdict, ModelError> {
    use crate::builtins::detect_family;
    if let Some(d) = detect_family(spec) {
        return match d.family {
            Builtin::Krss => classify_krss(spec),
            Builtin::ModifiedKrss => classify_modified_krss(spec),
            Builtin::ModifiedLk => classify_modified_lk(spec),
            Builtin::Lk => {
                // No theorem for the plain LK builtin in this toolkit; fall
                // through to the necessary condition below.
                generic_necessary_condition(spec)
            }
        };
    }
    generic_necessary_condition(spec)
}

fn generic_necessary_condition(spec: &NetworkSpec) -> Result<StabilityVerdict, ModelError> {
    let traffic = traffic_solve(spec)?;
    let witness: Vec<(String, f64)> = traffic
        .rho
        .iter()
        .enumerate()
        .map(|(j, &r)| (format!("rho_{}", j + 1), r))
        .collect();
    if traffic.rho.iter().any(|&r| cmp(r, 1.0) == Cmp::Greater) {
        return Ok(StabilityVerdict::new(
            Verdict::Unstable,
            "station intensity >= 1",
            witness,
        ));
    }
    Ok(StabilityVerdict::new(
        Verdict::Indeterminate,
        "no closed-form condition for this topology",
        witness,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{builtin_network, BuiltinParams};
    use approx::assert_abs_diff_eq;

    fn krss_with_m(m: Vec<f64>) -> NetworkSpec {
        builtin_network(
            Builtin::Krss,
            &BuiltinParams {
                mean_service: Some(m),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn virtual_station_examples() {
        let spec = builtin_network(Builtin::Krss, &BuiltinParams::default()).unwrap();
        assert_abs_diff_eq!(virtual_station_intensity(&spec).unwrap(), 1.2, epsilon = 1e-12);

        let spec = krss_with_m(vec![0.2, 0.4, 0.2, 0.4]);
        assert_abs_diff_eq!(virtual_station_intensity(&spec).unwrap(), 0.8, epsilon = 1e-12);

        let spec = builtin_network(
            Builtin::Krss,
            &BuiltinParams {
                alpha: Some(vec![0.0; 4]),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(virtual_station_intensity(&spec).unwrap(), 0.0);

        let lk = builtin_network(Builtin::Lk, &BuiltinParams::default()).unwrap();
        assert!(virtual_station_intensity(&lk).is_err());
    }

    #[test]
    fn krss_stable_when_virtual_below_one() {
        let v = classify_krss(&krss_with_m(vec![0.2, 0.4, 0.2, 0.4])).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        let rho1 = v.witness_values.iter().find(|w| w.0 == "rho_1").unwrap().1;
        assert_abs_diff_eq!(rho1, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn krss_unstable_at_paper_family() {
        let v = classify_krss(&krss_with_m(vec![0.2, 0.6, 0.2, 0.6])).unwrap();
        assert_eq!(v.verdict, Verdict::Unstable);
        assert_eq!(v.reason, "virtual-station intensity > 1");
    }

    #[test]
    fn krss_unstable_when_station_overloaded() {
        // alpha_1 m_1 + alpha_3 m_4 = 1.3 >= 1.
        let v = classify_krss(&krss_with_m(vec![1.0, 0.3, 0.2, 0.3])).unwrap();
        assert_eq!(v.verdict, Verdict::Unstable);
        assert_eq!(v.reason, "station intensity >= 1");
    }

    #[test]
    fn krss_boundary_yields_indeterminate() {
        // virtual = 0.5 + 0.5 = 1 exactly.
        let v = classify_krss(&krss_with_m(vec![0.2, 0.5, 0.2, 0.5])).unwrap();
        assert_eq!(v.verdict, Verdict::Indeterminate);
        assert_eq!(v.reason, "boundary");
    }

    #[test]
    fn modified_krss_branches() {
        let stable = builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(8.0 / 9.0))
            .unwrap();
        let v = classify_modified_krss(&stable).unwrap();
        assert_eq!(v.verdict, Verdict::Stable);
        assert_eq!(v.reason, "Theorem 1(1)");
        let r7 = v
            .witness_values
            .iter()
            .find(|w| w.0.starts_with("m5/"))
            .unwrap()
            .1;
        assert_abs_diff_eq!(r7, 0.9, epsilon = 1e-12);

        let unstable =
            builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(1.0 / 3.0)).unwrap();
        let v = classify_modified_krss(&unstable).unwrap();
        assert_eq!(v.verdict, Verdict::Unstable);
        assert_eq!(v.reason, "Theorem 1(2)");

        let neither =
            builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(0.6)).unwrap();
        let v = classify_modified_krss(&neither).unwrap();
        assert_eq!(v.verdict, Verdict::Indeterminate);
        assert_eq!(v.reason, "neither Theorem 1 branch applies");
    }

    #[test]
    fn modified_krss_outside_hypothesis() {
        // Small m2/m4 push the virtual-station intensity below 1.
        let spec = builtin_network(
            Builtin::ModifiedKrss,
            &BuiltinParams {
                mean_service: Some(vec![0.2, 0.4, 0.2, 0.4, 0.1, 0.1, 1.0, 1.0]),
                admitted_rate: Some(0.5),
                ..Default::default()
            },
        )
        .unwrap();
        let v = classify_modified_krss(&spec).unwrap();
        assert_eq!(v.verdict, Verdict::Indeterminate);
        assert_eq!(v.reason, "outside Theorem 1 hypothesis");
    }

    #[test]
    fn modified_lk_instances() {
        let stable = builtin_network(Builtin::ModifiedLk, &BuiltinParams::admitted(1.37)).unwrap();
        assert_eq!(classify_modified_lk(&stable).unwrap().verdict, Verdict::Stable);

        let unstable = builtin_network(Builtin::ModifiedLk, &BuiltinParams::admitted(1.0)).unwrap();
        assert_eq!(
            classify_modified_lk(&unstable).unwrap().verdict,
            Verdict::Unstable
        );

        let other = builtin_network(Builtin::ModifiedLk, &BuiltinParams::admitted(1.2)).unwrap();
        let v = classify_modified_lk(&other).unwrap();
        assert_eq!(v.verdict, Verdict::Indeterminate);
        assert_eq!(v.reason, "outside Theorem 2 instances");
    }

    #[test]
    fn theorem1_threshold_values() {
        let spec = builtin_network(Builtin::ModifiedKrss, &BuiltinParams::default()).unwrap();
        let t = theorem1_thresholds(&spec).unwrap();
        assert_abs_diff_eq!(t.class7.stable_above, 1.0 - 0.1 / 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(t.class7.stable_above, 5.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.class7.unstable_below, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.class8.stable_above, 5.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.class8.unstable_below, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn theorem1_threshold_degenerate_cases() {
        // m5 = m2: stable-above threshold collapses to 0.
        let spec = builtin_network(
            Builtin::ModifiedKrss,
            &BuiltinParams {
                mean_service: Some(vec![0.2, 0.6, 0.2, 0.6, 0.6, 0.1, 1.0, 1.0]),
                ..Default::default()
            },
        )
        .unwrap();
        let t = theorem1_thresholds(&spec).unwrap();
        assert_abs_diff_eq!(t.class7.stable_above, 0.0, epsilon = 1e-12);

        // m5 > m1: unstable-below threshold is negative, so condition (4)
        // cannot hold for any nonnegative rate.
        let spec = builtin_network(
            Builtin::ModifiedKrss,
            &BuiltinParams {
                mean_service: Some(vec![0.2, 0.6, 0.2, 0.6, 0.3, 0.1, 1.0, 1.0]),
                ..Default::default()
            },
        )
        .unwrap();
        let t = theorem1_thresholds(&spec).unwrap();
        assert!(t.class7.unstable_below < 0.0);
    }

    #[test]
    fn verdicts_invariant_under_relabeling() {
        for rate in [8.0 / 9.0, 0.6, 1.0 / 3.0] {
            let spec =
                builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(rate)).unwrap();
            let base = classify_modified_krss(&spec).unwrap();
            let perm: Vec<usize> = vec![3, 5, 7, 1, 0, 2, 4, 6];
            let relabeled = spec.relabeled(&perm).unwrap();
            let v = classify_modified_krss(&relabeled).unwrap();
            assert_eq!(v.verdict, base.verdict);
            assert_eq!(v.reason, base.reason);
        }
    }

    #[test]
    fn classify_never_stable_with_overloaded_station() {
        // Grid over m2, m4 with alpha_1 = alpha_3 = 1.
        for i in 1..=10 {
            for j in 1..=10 {
                let m2 = 0.1 * i as f64;
                let m4 = 0.1 * j as f64;
                let spec = krss_with_m(vec![0.2, m2, 0.2, m4]);
                let t = traffic_solve(&spec).unwrap();
                let v = classify_krss(&spec).unwrap();
                if t.rho.iter().any(|&r| r >= 1.0) {
                    assert_ne!(v.verdict, Verdict::Stable);
                }
            }
        }
    }

    #[test]
    fn topology_mismatch_errors() {
        let krss = builtin_network(Builtin::Krss, &BuiltinParams::default()).unwrap();
        assert!(matches!(
            classify_modified_krss(&krss),
            Err(ModelError::TopologyMismatch { .. })
        ));
        assert!(matches!(
            classify_modified_lk(&krss),
            Err(ModelError::TopologyMismatch { .. })
        ));
    }
}
