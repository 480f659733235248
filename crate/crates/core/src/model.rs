//! Network model: instance description, validation, and the traffic equations.

use crate::error::ModelError;
use nalgebra::{DMatrix, DVector};

/// Tolerance used when comparing traffic quantities against 1.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Relative tolerance on the traffic-equation residual.
pub const TRAFFIC_RESIDUAL_TOL: f64 = 1e-10;

/// An open multiclass queueing network with preemptive priorities.
///
/// Stations and classes are indexed from 0 internally; the JSON file format
/// uses 1-based ids. A class `k` is served at station `station_of[k]`,
/// arrives externally at rate `arrival_rates[k]`, takes `mean_service[k]`
/// time units per job on average, and on completion turns into class `l`
/// with probability `routing[k][l]` (leaving the network with the residual
/// probability). `priority_rank[k]` orders classes within a station: a
/// smaller rank preempts a larger one.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    num_stations: usize,
    arrival_rates: Vec<f64>,
    mean_service: Vec<f64>,
    station_of: Vec<usize>,
    routing: Vec<Vec<f64>>,
    priority_rank: Vec<usize>,
    /// Classes of each station, sorted by ascending rank (highest priority first).
    station_classes: Vec<Vec<usize>>,
}

impl NetworkSpec {
    /// Builds a spec from raw parts, checking shape only. Semantic rules
    /// (nonnegative rates, substochastic routing, ...) are the job of
    /// [`validate_network`].
    pub fn new(
        num_stations: usize,
        arrival_rates: Vec<f64>,
        mean_service: Vec<f64>,
        station_of: Vec<usize>,
        routing: Vec<Vec<f64>>,
        priority_rank: Vec<usize>,
    ) -> Result<Self, ModelError> {
        let k = arrival_rates.len();
        if k == 0 {
            return Err(ModelError::Dimension("at least one class is required".into()));
        }
        if num_stations == 0 {
            return Err(ModelError::Dimension("at least one station is required".into()));
        }
        for (name, len) in [
            ("mean_service", mean_service.len()),
            ("station_of", station_of.len()),
            ("priority_rank", priority_rank.len()),
            ("routing rows", routing.len()),
        ] {
            if len != k {
                return Err(ModelError::Dimension(format!(
                    "{name} has length {len}, expected {k}"
                )));
            }
        }
        for (i, row) in routing.iter().enumerate() {
            if row.len() != k {
                return Err(ModelError::Dimension(format!(
                    "routing row {i} has length {}, expected {k}",
                    row.len()
                )));
            }
        }
        for (class, &station) in station_of.iter().enumerate() {
            if station >= num_stations {
                return Err(ModelError::StationOutOfRange {
                    class,
                    station,
                    stations: num_stations,
                });
            }
        }
        let mut station_classes = vec![Vec::new(); num_stations];
        for (class, &station) in station_of.iter().enumerate() {
            station_classes[station].push(class);
        }
        for classes in &mut station_classes {
            classes.sort_by_key(|&c| priority_rank[c]);
        }
        Ok(Self {
            num_stations,
            arrival_rates,
            mean_service,
            station_of,
            routing,
            priority_rank,
            station_classes,
        })
    }

    pub fn num_stations(&self) -> usize {
        self.num_stations
    }

    pub fn num_classes(&self) -> usize {
        self.arrival_rates.len()
    }

    pub fn arrival_rates(&self) -> &[f64] {
        &self.arrival_rates
    }

    pub fn mean_service(&self) -> &[f64] {
        &self.mean_service
    }

    /// Service rate of class `k`, `mu_k = 1 / m_k`.
    pub fn service_rate(&self, k: usize) -> f64 {
        1.0 / self.mean_service[k]
    }

    pub fn station_of(&self, k: usize) -> usize {
        self.station_of[k]
    }

    pub fn routing(&self) -> &[Vec<f64>] {
        &self.routing
    }

    pub fn routing_prob(&self, from: usize, to: usize) -> f64 {
        self.routing[from][to]
    }

    pub fn priority_rank(&self) -> &[usize] {
        &self.priority_rank
    }

    /// Classes served at station `j`, highest priority first.
    pub fn classes_at(&self, j: usize) -> &[usize] {
        &self.station_classes[j]
    }

    /// The constituency matrix C (J x K): `c[j][k] = 1` iff class k is
    /// served at station j. Derived, never stored.
    pub fn constituency_matrix(&self) -> Vec<Vec<f64>> {
        let mut c = vec![vec![0.0; self.num_classes()]; self.num_stations];
        for (k, &j) in self.station_of.iter().enumerate() {
            c[j][k] = 1.0;
        }
        c
    }

    /// Returns a copy with the given external arrival rates.
    pub fn with_arrival_rates(&self, alpha: Vec<f64>) -> Result<Self, ModelError> {
        if alpha.len() != self.num_classes() {
            return Err(ModelError::OverrideLength {
                expected: self.num_classes(),
                got: alpha.len(),
            });
        }
        let mut out = self.clone();
        out.arrival_rates = alpha;
        Ok(out)
    }

    /// Returns a copy with classes relabeled: new class `i` is old class
    /// `perm[i]`. Stations are relabeled to match the order in which they
    /// first appear along the new class order.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self, ModelError> {
        let k = self.num_classes();
        if perm.len() != k {
            return Err(ModelError::OverrideLength {
                expected: k,
                got: perm.len(),
            });
        }
        let mut station_map = vec![usize::MAX; self.num_stations];
        let mut next = 0;
        for &old in perm {
            let s = self.station_of[old];
            if station_map[s] == usize::MAX {
                station_map[s] = next;
                next += 1;
            }
        }
        if next != self.num_stations {
            return Err(ModelError::Dimension(
                "relabeling permutation does not cover all stations".into(),
            ));
        }
        let mut routing = vec![vec![0.0; k]; k];
        for (i, &oi) in perm.iter().enumerate() {
            for (j, &oj) in perm.iter().enumerate() {
                routing[i][j] = self.routing[oi][oj];
            }
        }
        NetworkSpec::new(
            self.num_stations,
            perm.iter().map(|&o| self.arrival_rates[o]).collect(),
            perm.iter().map(|&o| self.mean_service[o]).collect(),
            perm.iter().map(|&o| station_map[self.station_of[o]]).collect(),
            routing,
            perm.iter().map(|&o| self.priority_rank[o]).collect(),
        )
    }
}

/// Solved traffic quantities: nominal total arrival rates `lambda`,
/// per-class intensities `beta = M lambda`, per-station intensities
/// `rho = C beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSummary {
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    pub rho: Vec<f64>,
}

impl TrafficSummary {
    /// True when every station intensity is strictly below 1 by more than
    /// the boundary tolerance.
    pub fn subcritical(&self) -> bool {
        self.rho.iter().all(|&r| r < 1.0 - BOUNDARY_TOL)
    }
}

/// One violated validation rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

/// Outcome of [`validate_network`]: `ok` iff no rule fired.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: &'static str, detail: String) {
        self.violations.push(Violation { rule, detail });
    }
}

/// Checks every semantic invariant of a [`NetworkSpec`] and reports all
/// violations instead of failing on the first.
pub fn validate_network(spec: &NetworkSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    let k = spec.num_classes();

    for (i, &a) in spec.arrival_rates().iter().enumerate() {
        if !(a >= 0.0) || !a.is_finite() {
            report.push(
                "arrival-rate-nonnegative",
                format!("class {} has arrival rate {}", i + 1, a),
            );
        }
    }
    for (i, &m) in spec.mean_service().iter().enumerate() {
        if !(m > 0.0) || !m.is_finite() {
            report.push(
                "mean-service-positive",
                format!("class {} has mean service {}", i + 1, m),
            );
        }
    }
    for (i, row) in spec.routing().iter().enumerate() {
        let mut sum = 0.0;
        for (j, &p) in row.iter().enumerate() {
            if !(p >= 0.0) || !p.is_finite() || p > 1.0 + BOUNDARY_TOL {
                report.push(
                    "routing-entry-invalid",
                    format!("p[{}][{}] = {}", i + 1, j + 1, p),
                );
            }
            sum += p;
        }
        if sum > 1.0 + BOUNDARY_TOL {
            report.push(
                "substochastic",
                format!("routing row {} sums to {}", i + 1, sum),
            );
        }
    }
    if !neumann_series_converges(spec.routing()) {
        report.push(
            "neumann-divergent",
            "Neumann series I + P + P^2 + ... does not converge (spectral radius >= 1)".into(),
        );
    }
    for j in 0..spec.num_stations() {
        let classes = spec.classes_at(j);
        for w in classes.windows(2) {
            if spec.priority_rank()[w[0]] == spec.priority_rank()[w[1]] {
                report.push(
                    "priority-order",
                    format!(
                        "classes {} and {} share rank {} at station {}",
                        w[0] + 1,
                        w[1] + 1,
                        spec.priority_rank()[w[0]],
                        j + 1
                    ),
                );
            }
        }
    }
    let _ = k;
    report
}

/// Checks convergence of `I + P + P^2 + ...` by iterated squaring: P is
/// squared until every entry falls below 1e-15 (convergent) or 64
/// squarings have been performed (treated as divergent). Entries are
/// also monitored for blow-up so a clearly divergent matrix exits early.
fn neumann_series_converges(routing: &[Vec<f64>]) -> bool {
    let k = routing.len();
    let mut a: Vec<f64> = routing.iter().flatten().copied().collect();
    let max_entry = |m: &[f64]| m.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    for _ in 0..=64 {
        let m = max_entry(&a);
        if !m.is_finite() || m > 1e100 {
            return false;
        }
        if m < 1e-15 {
            return true;
        }
        let mut sq = vec![0.0; k * k];
        for i in 0..k {
            for l in 0..k {
                let v = a[i * k + l];
                if v == 0.0 {
                    continue;
                }
                for j in 0..k {
                    sq[i * k + j] += v * a[l * k + j];
                }
            }
        }
        a = sq;
    }
    false
}

/// Solves the traffic equation `lambda = alpha + P' lambda` by a direct
/// linear solve of `(I - P') lambda = alpha` and derives `beta` and `rho`.
pub fn traffic_solve(spec: &NetworkSpec) -> Result<TrafficSummary, ModelError> {
    let k = spec.num_classes();
    // I - P' (note the transpose: entry (i, j) = delta_ij - p_ji).
    let system = DMatrix::from_fn(k, k, |i, j| {
        let p = spec.routing_prob(j, i);
        if i == j {
            1.0 - p
        } else {
            -p
        }
    });
    let alpha = DVector::from_column_slice(spec.arrival_rates());
    let lambda = system
        .lu()
        .solve(&alpha)
        .ok_or(ModelError::SingularTraffic)?;

    let lambda: Vec<f64> = lambda.iter().copied().collect();
    let mut residual = 0.0f64;
    let mut lambda_max = 0.0f64;
    for i in 0..k {
        let mut inflow = spec.arrival_rates()[i];
        for j in 0..k {
            inflow += spec.routing_prob(j, i) * lambda[j];
        }
        residual = residual.max((lambda[i] - inflow).abs());
        lambda_max = lambda_max.max(lambda[i].abs());
    }
    let tolerance = TRAFFIC_RESIDUAL_TOL * (1.0 + lambda_max);
    if !(residual <= tolerance) {
        return Err(ModelError::ResidualTooLarge {
            residual,
            tolerance,
        });
    }

    let beta: Vec<f64> = (0..k).map(|i| spec.mean_service()[i] * lambda[i]).collect();
    let mut rho = vec![0.0; spec.num_stations()];
    for i in 0..k {
        rho[spec.station_of(i)] += beta[i];
    }
    Ok(TrafficSummary { lambda, beta, rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{builtin_network, Builtin, BuiltinParams};
    use approx::assert_abs_diff_eq;

    fn mm1(alpha: f64, m: f64) -> NetworkSpec {
        NetworkSpec::new(1, vec![alpha], vec![m], vec![0], vec![vec![0.0]], vec![1]).unwrap()
    }

    #[test]
    fn krss_paper_spec_validates() {
        let spec = builtin_network(Builtin::Krss, &BuiltinParams::default()).unwrap();
        let report = validate_network(&spec);
        assert!(report.ok(), "unexpected violations: {:?}", report.violations);
    }

    #[test]
    fn superstochastic_row_is_reported() {
        let mut routing = vec![vec![0.0; 2]; 2];
        routing[0][0] = 0.6;
        routing[0][1] = 0.6;
        let spec =
            NetworkSpec::new(1, vec![1.0, 0.0], vec![1.0, 1.0], vec![0, 0], routing, vec![1, 2])
                .unwrap();
        let report = validate_network(&spec);
        assert!(report.violations.iter().any(|v| v.rule == "substochastic"));
    }

    #[test]
    fn identity_routing_is_divergent() {
        let routing = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let spec =
            NetworkSpec::new(1, vec![1.0, 0.0], vec![1.0, 1.0], vec![0, 0], routing, vec![1, 2])
                .unwrap();
        let report = validate_network(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| v.rule == "neumann-divergent"));
    }

    #[test]
    fn duplicate_rank_within_station_is_reported() {
        let spec = NetworkSpec::new(
            1,
            vec![0.5, 0.5],
            vec![1.0, 1.0],
            vec![0, 0],
            vec![vec![0.0; 2]; 2],
            vec![3, 3],
        )
        .unwrap();
        let report = validate_network(&spec);
        assert!(report.violations.iter().any(|v| v.rule == "priority-order"));
    }

    #[test]
    fn traffic_modified_krss_paper_family() {
        let spec = builtin_network(Builtin::ModifiedKrss, &BuiltinParams::default()).unwrap();
        let t = traffic_solve(&spec).unwrap();
        assert_abs_diff_eq!(t.rho[0], 0.8, epsilon = 1e-10);
        assert_abs_diff_eq!(t.rho[1], 0.8, epsilon = 1e-10);
        assert_abs_diff_eq!(t.rho[2], 0.1 + 8.0 / 9.0, epsilon = 1e-10);
        assert_abs_diff_eq!(t.rho[3], 0.1 + 8.0 / 9.0, epsilon = 1e-10);
    }

    #[test]
    fn traffic_zero_arrivals() {
        let spec = builtin_network(
            Builtin::Krss,
            &BuiltinParams {
                alpha: Some(vec![0.0; 4]),
                ..Default::default()
            },
        )
        .unwrap();
        let t = traffic_solve(&spec).unwrap();
        assert!(t.lambda.iter().all(|&x| x == 0.0));
        assert!(t.rho.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn traffic_single_class_no_feedback() {
        let t = traffic_solve(&mm1(0.5, 1.0)).unwrap();
        assert_abs_diff_eq!(t.lambda[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rho[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn traffic_residual_bound_on_builtins() {
        for b in [
            Builtin::Krss,
            Builtin::ModifiedKrss,
            Builtin::Lk,
            Builtin::ModifiedLk,
        ] {
            let spec = builtin_network(b, &BuiltinParams::default()).unwrap();
            let t = traffic_solve(&spec).unwrap();
            let k = spec.num_classes();
            let mut residual = 0.0f64;
            for i in 0..k {
                let mut inflow = spec.arrival_rates()[i];
                for j in 0..k {
                    inflow += spec.routing_prob(j, i) * t.lambda[j];
                }
                residual = residual.max((t.lambda[i] - inflow).abs());
            }
            let lmax = t.lambda.iter().fold(0.0f64, |a, &x| a.max(x));
            assert!(residual <= 1e-10 * (1.0 + lmax));
        }
    }

    #[test]
    fn traffic_is_homogeneous_in_alpha() {
        let spec = builtin_network(Builtin::ModifiedKrss, &BuiltinParams::default()).unwrap();
        let base = traffic_solve(&spec).unwrap();
        let c = 3.7;
        let scaled_spec = spec
            .with_arrival_rates(spec.arrival_rates().iter().map(|a| a * c).collect())
            .unwrap();
        let scaled = traffic_solve(&scaled_spec).unwrap();
        for i in 0..spec.num_classes() {
            assert_abs_diff_eq!(scaled.lambda[i], c * base.lambda[i], epsilon = 1e-9);
            assert_abs_diff_eq!(scaled.beta[i], c * base.beta[i], epsilon = 1e-9);
        }
        for j in 0..spec.num_stations() {
            assert_abs_diff_eq!(scaled.rho[j], c * base.rho[j], epsilon = 1e-9);
        }
    }

    #[test]
    fn constituency_matrix_recovers_station_map() {
        let spec = builtin_network(Builtin::ModifiedLk, &BuiltinParams::default()).unwrap();
        let c = spec.constituency_matrix();
        for col in 0..spec.num_classes() {
            let ones: Vec<usize> = (0..spec.num_stations())
                .filter(|&row| c[row][col] == 1.0)
                .collect();
            assert_eq!(ones.len(), 1);
            assert_eq!(ones[0], spec.station_of(col));
        }
    }

    #[test]
    fn singular_system_is_an_error() {
        // Row sums to exactly 1 with a closed loop: (I - P') is singular.
        let routing = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let spec =
            NetworkSpec::new(1, vec![1.0, 0.0], vec![1.0, 1.0], vec![0, 0], routing, vec![1, 2])
                .unwrap();
        assert!(matches!(
            traffic_solve(&spec),
            Err(ModelError::SingularTraffic) | Err(ModelError::ResidualTooLarge { .. })
        ));
    }
}
