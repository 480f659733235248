//! Priority fluid network dynamics.
//!
//! The fluid analogue of the queueing network is a piecewise-linear
//! dynamical system: between events, every class drains or fills at a
//! constant rate determined by a work-conserving preemptive-priority
//! allocation. The solver computes the allocation at the current state,
//! advances to the next event (a level hitting zero, the divergence
//! threshold, or the horizon), and repeats.

pub mod lyapunov;

use crate::error::FluidError;
use crate::exec;
use crate::model::NetworkSpec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Levels within this distance of zero are treated as empty and clamped.
pub const EPS_ZERO: f64 = 1e-12;
/// Convergence tolerance for the allocation fixed point.
pub const RATE_TOL: f64 = 1e-12;
/// Derivatives smaller than this magnitude count as zero when deciding
/// that a trajectory has settled.
pub const EPS_DERIV: f64 = 1e-9;
/// Sweep budget for the allocation fixed point.
pub const MAX_SWEEPS: usize = 10_000;
/// Breakpoint budget per solve.
pub const BREAKPOINT_BUDGET: usize = 1_000_000;

/// Instantaneous service allocation: `rates[k]` is the fraction of
/// station `sigma(k)`'s capacity devoted to class `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateAllocation {
    pub rates: Vec<f64>,
    pub station_residual: Vec<f64>,
}

/// A point on the fluid trajectory: levels plus cumulative allocations.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub time: f64,
    pub levels: Vec<f64>,
    /// Cumulative allocation T(t); satisfies the flow-balance identity
    /// `Q(t) = Q(0) + alpha t - (I - P') diag(mu) T(t)`.
    pub cumulative_allocation: Vec<f64>,
}

impl FluidState {
    pub fn initial(levels: Vec<f64>) -> Self {
        let k = levels.len();
        FluidState {
            time: 0.0,
            levels,
            cumulative_allocation: vec![0.0; k],
        }
    }

    pub fn total(&self) -> f64 {
        self.levels.iter().sum()
    }
}

/// Why a segment ended at this breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakReason {
    Start,
    /// The given class (0-based) drained to zero.
    LevelEmptied(usize),
    DivergenceThreshold,
    Horizon,
}

impl BreakReason {
    pub fn label(&self) -> String {
        match self {
            BreakReason::Start => "start".into(),
            BreakReason::LevelEmptied(k) => format!("zero:{}", k + 1),
            BreakReason::DivergenceThreshold => "diverging".into(),
            BreakReason::Horizon => "horizon".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Breakpoint {
    pub state: FluidState,
    /// Allocation on the segment starting at this breakpoint (for the
    /// terminal breakpoint: the allocation at the final state).
    pub rates: RateAllocation,
    pub reason: BreakReason,
}

/// Terminal classification of a solved trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TerminalVerdict {
    /// All levels reached zero with zero derivatives at the given time.
    Emptied(f64),
    /// Total mass crossed ten times the initial mass.
    Diverging,
    HorizonReached,
}

#[derive(Debug, Clone)]
pub struct FluidTrajectory {
    pub breakpoints: Vec<Breakpoint>,
    pub verdict: TerminalVerdict,
}

impl FluidTrajectory {
    pub fn final_state(&self) -> &FluidState {
        &self.breakpoints.last().expect("trajectory is nonempty").state
    }
}

/// Precomputed dynamics of one network: service rates and inflow edges.
struct Dynamics<'a> {
    spec: &'a NetworkSpec,
    mu: Vec<f64>,
    /// For each class k, the classes feeding it: (source, probability).
    inflow_edges: Vec<Vec<(usize, f64)>>,
}

impl<'a> Dynamics<'a> {
    fn new(spec: &'a NetworkSpec) -> Self {
        let k = spec.num_classes();
        let mu = (0..k).map(|i| spec.service_rate(i)).collect();
        let mut inflow_edges = vec![Vec::new(); k];
        for from in 0..k {
            for to in 0..k {
                let p = spec.routing_prob(from, to);
                if p > 0.0 {
                    inflow_edges[to].push((from, p));
                }
            }
        }
        Dynamics {
            spec,
            mu,
            inflow_edges,
        }
    }

    fn inflow(&self, k: usize, u: &[f64]) -> f64 {
        let mut iota = self.spec.arrival_rates()[k];
        for &(from, p) in &self.inflow_edges[k] {
            iota += p * self.mu[from] * u[from];
        }
        iota
    }

    /// One Gauss-Seidel sweep of the allocation map: stations in index
    /// order, classes in priority order, inflows read from the working
    /// iterate as it updates. Returns the largest per-class change.
    fn sweep(&self, q: &[f64], forced: Option<usize>, u: &mut [f64]) -> f64 {
        let mut max_delta = 0.0f64;
        for j in 0..self.spec.num_stations() {
            let mut residual = 1.0f64;
            for &k in self.spec.classes_at(j) {
                let new_u = if q[k] > EPS_ZERO || forced == Some(k) {
                    residual
                } else {
                    (self.inflow(k, u) * self.spec.mean_service()[k]).min(residual)
                };
                max_delta = max_delta.max((new_u - u[k]).abs());
                u[k] = new_u;
                residual = (residual - new_u).max(0.0);
            }
        }
        max_delta
    }

    /// Iterates the sweep to a fixed point. Oscillation (a repeated
    /// iterate) aborts early so the caller can try a lift-off resolution.
    fn iterate(&self, q: &[f64], forced: Option<usize>, u: &mut Vec<f64>) -> bool {
        let k = u.len();
        let mut prev = vec![0.0; k];
        let mut prev2 = vec![f64::NAN; k];
        for sweep_idx in 0..MAX_SWEEPS {
            prev2.copy_from_slice(&prev);
            prev.copy_from_slice(u);
            let delta = self.sweep(q, forced, u);
            if delta <= RATE_TOL {
                return true;
            }
            // Exact period-2 cycle: no fixed point along this iteration.
            if sweep_idx >= 1 && u.iter().zip(&prev2).all(|(a, b)| (a - b).abs() <= 1e-15) {
                return false;
            }
        }
        false
    }

    /// Computes the allocation at levels `q`.
    ///
    /// The plain iteration can cycle at degenerate states where several
    /// empty classes could consistently either stay empty or start
    /// accumulating (the fixed point is not unique there). In that case
    /// each empty class is tried in deterministic order as the one that
    /// lifts off; a candidate is accepted only if the result is a genuine
    /// fixed point of the unforced map.
    fn rates(&self, q: &[f64]) -> Result<RateAllocation, FluidError> {
        let k = q.len();
        let mut u = vec![0.0; k];
        if self.iterate(q, None, &mut u) {
            return Ok(self.finish(u));
        }
        for j in 0..self.spec.num_stations() {
            for &cand in self.spec.classes_at(j) {
                if q[cand] > EPS_ZERO {
                    continue;
                }
                let mut forced_u = vec![0.0; k];
                if !self.iterate(q, Some(cand), &mut forced_u) {
                    continue;
                }
                // Verify against the unforced map.
                let mut check = forced_u.clone();
                let delta = self.sweep(q, None, &mut check);
                if delta <= 1e-10 {
                    return Ok(self.finish(check));
                }
            }
        }
        let mut last = vec![0.0; k];
        let _ = self.iterate(q, None, &mut last);
        Err(FluidError::RateFixedPointInconclusive {
            sweeps: MAX_SWEEPS,
            last,
        })
    }

    fn finish(&self, rates: Vec<f64>) -> RateAllocation {
        let mut station_residual = vec![1.0; self.spec.num_stations()];
        for (k, &u) in rates.iter().enumerate() {
            station_residual[self.spec.station_of(k)] -= u;
        }
        for r in &mut station_residual {
            if r.abs() < 1e-15 {
                *r = 0.0;
            }
        }
        RateAllocation {
            rates,
            station_residual,
        }
    }

    /// Level derivatives under an allocation:
    /// `qdot_k = alpha_k + sum_l p_lk mu_l u_l - mu_k u_k`.
    fn derivatives(&self, alloc: &RateAllocation) -> Vec<f64> {
        (0..self.mu.len())
            .map(|k| self.inflow(k, &alloc.rates) - self.mu[k] * alloc.rates[k])
            .collect()
    }
}

/// Work-conserving preemptive-priority allocation at levels `q`.
pub fn allocation_rates(spec: &NetworkSpec, q: &[f64]) -> Result<RateAllocation, FluidError> {
    check_levels(spec, q)?;
    Dynamics::new(spec).rates(q)
}

/// Level derivatives under an allocation.
pub fn level_derivatives(spec: &NetworkSpec, alloc: &RateAllocation) -> Vec<f64> {
    Dynamics::new(spec).derivatives(alloc)
}

fn check_levels(spec: &NetworkSpec, q: &[f64]) -> Result<(), FluidError> {
    if q.len() != spec.num_classes() {
        return Err(crate::error::ModelError::Dimension(format!(
            "level vector has length {}, expected {}",
            q.len(),
            spec.num_classes()
        ))
        .into());
    }
    for (k, &v) in q.iter().enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(FluidError::NegativeLevel { class: k, value: v });
        }
    }
    Ok(())
}

/// Advances one segment from `state`: computes the allocation, the level
/// derivatives, and the earliest time a strictly positive level drains to
/// zero (capped at `max_dt`). Levels within [`EPS_ZERO`] of zero after the
/// step are clamped to exactly zero.
pub fn fluid_advance(
    spec: &NetworkSpec,
    state: &FluidState,
    max_dt: f64,
) -> Result<(FluidState, RateAllocation), FluidError> {
    let dyn_ = Dynamics::new(spec);
    let alloc = dyn_.rates(&state.levels)?;
    let qdot = dyn_.derivatives(&alloc);
    let (dt, hit) = next_drain_event(&state.levels, &qdot, max_dt);
    let next = step(state, &alloc, &qdot, dt, hit);
    Ok((next, alloc))
}

/// Earliest drain event among strictly positive levels with clearly
/// negative derivatives. Returns the step (capped) and the class that
/// empties, if any.
fn next_drain_event(q: &[f64], qdot: &[f64], max_dt: f64) -> (f64, Option<usize>) {
    let mut dt = max_dt;
    let mut hit = None;
    for k in 0..q.len() {
        if q[k] > EPS_ZERO && qdot[k] < -1e-14 {
            let t = q[k] / -qdot[k];
            if t < dt {
                dt = t;
                hit = Some(k);
            }
        }
    }
    (dt, hit)
}

fn step(
    state: &FluidState,
    alloc: &RateAllocation,
    qdot: &[f64],
    dt: f64,
    hit: Option<usize>,
) -> FluidState {
    let mut levels: Vec<f64> = state
        .levels
        .iter()
        .zip(qdot)
        .map(|(&q, &d)| q + d * dt)
        .collect();
    for (k, q) in levels.iter_mut().enumerate() {
        if hit == Some(k) || q.abs() <= EPS_ZERO {
            *q = 0.0;
        }
        if *q < 0.0 {
            *q = 0.0;
        }
    }
    let cumulative_allocation = state
        .cumulative_allocation
        .iter()
        .zip(&alloc.rates)
        .map(|(&t, &u)| t + u * dt)
        .collect();
    FluidState {
        time: state.time + dt,
        levels,
        cumulative_allocation,
    }
}

/// Solves the fluid dynamics from `q0` until the trajectory settles at
/// zero, crosses ten times its initial mass, or reaches the horizon.
pub fn fluid_solve(
    spec: &NetworkSpec,
    q0: &[f64],
    horizon: f64,
) -> Result<FluidTrajectory, FluidError> {
    check_levels(spec, q0)?;
    let dyn_ = Dynamics::new(spec);
    let threshold = 10.0 * q0.iter().sum::<f64>().max(1.0);
    let mut state = FluidState::initial(q0.to_vec());
    // Clamp tiny inputs so sign tests are exact from the start.
    for q in &mut state.levels {
        if *q <= EPS_ZERO {
            *q = 0.0;
        }
    }
    let mut breakpoints = Vec::new();
    let mut reason = BreakReason::Start;
    loop {
        let alloc = dyn_.rates(&state.levels)?;
        let qdot = dyn_.derivatives(&alloc);
        breakpoints.push(Breakpoint {
            state: state.clone(),
            rates: alloc.clone(),
            reason,
        });
        if breakpoints.len() > BREAKPOINT_BUDGET {
            return Err(FluidError::BudgetExhausted {
                budget: BREAKPOINT_BUDGET,
                at_time: state.time,
            });
        }

        let settled = state.levels.iter().all(|&q| q <= EPS_ZERO)
            && qdot.iter().all(|&d| d.abs() <= EPS_DERIV);
        if settled {
            return Ok(FluidTrajectory {
                breakpoints,
                verdict: TerminalVerdict::Emptied(state.time),
            });
        }
        if state.total() >= threshold {
            return Ok(FluidTrajectory {
                breakpoints,
                verdict: TerminalVerdict::Diverging,
            });
        }
        if state.time >= horizon {
            return Ok(FluidTrajectory {
                breakpoints,
                verdict: TerminalVerdict::HorizonReached,
            });
        }

        let remaining = horizon - state.time;
        let (mut dt, hit) = next_drain_event(&state.levels, &qdot, remaining);
        let mut next_reason = match hit {
            Some(k) => BreakReason::LevelEmptied(k),
            None => BreakReason::Horizon,
        };
        // Cut the segment where total mass crosses the divergence
        // threshold so the verdict is exact.
        let total_rate: f64 = qdot.iter().sum();
        if total_rate > 1e-14 {
            let t_cross = (threshold - state.total()) / total_rate;
            if t_cross < dt {
                dt = t_cross;
                next_reason = BreakReason::DivergenceThreshold;
            }
        }
        state = step(&state, &alloc, &qdot, dt, match next_reason {
            BreakReason::LevelEmptied(k) => Some(k),
            _ => None,
        });
        reason = next_reason;
    }
}

/// Probe verdict over a batch of initial conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluidVerdict {
    /// Every start emptied; carries the largest emptying time.
    Stable { max_tau: f64 },
    Diverging,
    Inconclusive,
}

impl std::fmt::Display for FluidVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FluidVerdict::Stable { .. } => f.write_str("Stable"),
            FluidVerdict::Diverging => f.write_str("Diverging"),
            FluidVerdict::Inconclusive => f.write_str("Inconclusive"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProbeSample {
    pub label: String,
    pub q0: Vec<f64>,
    pub outcome: TerminalVerdict,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub verdict: FluidVerdict,
    pub samples: Vec<ProbeSample>,
}

/// Magnitude of the zero-perturbation starts used by the probe.
pub const PROBE_EPSILON: f64 = 1e-3;

/// Initial conditions probed by [`stability_probe`]: `n_samples` points
/// drawn uniformly on the unit simplex, the unit axis states, midpoints
/// of consecutive axis pairs, and small perturbations of the empty state
/// waking the top-priority class of every station pair.
pub fn probe_starts(spec: &NetworkSpec, n_samples: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
    let k = spec.num_classes();
    let mut starts = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_samples {
        let mut q: Vec<f64> = (0..k)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let total: f64 = q.iter().sum();
        for v in &mut q {
            *v /= total;
        }
        starts.push((format!("simplex:{i}"), q));
    }
    for i in 0..k {
        let mut q = vec![0.0; k];
        q[i] = 1.0;
        starts.push((format!("axis:{}", i + 1), q));
    }
    for i in 0..k {
        let j = (i + 1) % k;
        if j == i {
            break;
        }
        let mut q = vec![0.0; k];
        q[i] = 0.5;
        q[j] = 0.5;
        starts.push((format!("corner:{}+{}", i + 1, j + 1), q));
    }
    let tops: Vec<usize> = (0..spec.num_stations())
        .filter_map(|s| spec.classes_at(s).first().copied())
        .collect();
    for (a, &ta) in tops.iter().enumerate() {
        for &tb in tops.iter().skip(a + 1) {
            let mut q = vec![0.0; k];
            q[ta] = PROBE_EPSILON;
            q[tb] = PROBE_EPSILON;
            starts.push((format!("perturb:{}+{}", ta + 1, tb + 1), q));
        }
    }
    starts
}

/// Solves from the probe start set and classifies: Diverging if any run
/// diverges, Stable if every run empties, Inconclusive otherwise.
pub fn stability_probe(
    spec: &NetworkSpec,
    n_samples: usize,
    horizon: f64,
    seed: u64,
) -> Result<ProbeReport, FluidError> {
    let starts = probe_starts(spec, n_samples, seed);
    let results = exec::map(&starts, |(label, q0)| {
        fluid_solve(spec, q0, horizon).map(|traj| ProbeSample {
            label: label.clone(),
            q0: q0.clone(),
            outcome: traj.verdict,
        })
    });
    let mut samples = Vec::with_capacity(results.len());
    for r in results {
        samples.push(r?);
    }
    let verdict = if samples
        .iter()
        .any(|s| s.outcome == TerminalVerdict::Diverging)
    {
        FluidVerdict::Diverging
    } else if samples
        .iter()
        .all(|s| matches!(s.outcome, TerminalVerdict::Emptied(_)))
    {
        let max_tau = samples
            .iter()
            .map(|s| match s.outcome {
                TerminalVerdict::Emptied(t) => t,
                _ => 0.0,
            })
            .fold(0.0f64, f64::max);
        FluidVerdict::Stable { max_tau }
    } else {
        FluidVerdict::Inconclusive
    };
    Ok(ProbeReport { verdict, samples })
}

/// Largest flow-balance residual over all breakpoints:
/// `Q(t) - Q(0) - alpha t + (I - P') diag(mu) T(t)`, infinity norm.
pub fn flow_balance_residual(spec: &NetworkSpec, trajectory: &FluidTrajectory) -> f64 {
    let k = spec.num_classes();
    let q0 = &trajectory.breakpoints[0].state.levels;
    let mut worst = 0.0f64;
    for bp in &trajectory.breakpoints {
        let s = &bp.state;
        for i in 0..k {
            let mut served = spec.service_rate(i) * s.cumulative_allocation[i];
            for l in 0..k {
                served -= spec.routing_prob(l, i) * spec.service_rate(l) * s.cumulative_allocation[l];
            }
            let expected = q0[i] + spec.arrival_rates()[i] * s.time - served;
            worst = worst.max((s.levels[i] - expected).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{builtin_network, Builtin, BuiltinParams};
    use approx::assert_abs_diff_eq;

    fn single_class(alpha: f64, m: f64) -> NetworkSpec {
        NetworkSpec::new(1, vec![alpha], vec![m], vec![0], vec![vec![0.0]], vec![1]).unwrap()
    }

    fn two_class_station(alpha: (f64, f64), m: (f64, f64)) -> NetworkSpec {
        NetworkSpec::new(
            1,
            vec![alpha.0, alpha.1],
            vec![m.0, m.1],
            vec![0, 0],
            vec![vec![0.0; 2]; 2],
            vec![1, 2],
        )
        .unwrap()
    }

    #[test]
    fn busy_single_class_gets_full_capacity() {
        let spec = single_class(0.0, 1.0);
        let alloc = allocation_rates(&spec, &[1.0]).unwrap();
        assert_eq!(alloc.rates, vec![1.0]);
        let qdot = level_derivatives(&spec, &alloc);
        assert_abs_diff_eq!(qdot[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn preemptive_priority_starves_low_class() {
        let spec = two_class_station((0.0, 0.0), (1.0, 1.0));
        for q2 in [0.0, 5.0] {
            let alloc = allocation_rates(&spec, &[1.0, q2]).unwrap();
            assert_eq!(alloc.rates, vec![1.0, 0.0]);
        }
    }

    #[test]
    fn modified_krss_regulator_leftover_allocation() {
        let spec = builtin_network(Builtin::ModifiedKrss, &BuiltinParams::default()).unwrap();
        // Q7 = Q8 = 0, Q5 and Q6 positive.
        let q = vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0];
        let alloc = allocation_rates(&spec, &q).unwrap();
        assert_abs_diff_eq!(alloc.rates[6], 8.0 / 9.0, epsilon = 1e-12); // u7 = a7 m7
        assert_abs_diff_eq!(alloc.rates[4], 1.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(alloc.rates[5], 1.0 - 8.0 / 9.0, epsilon = 1e-12); // u6 = 1 - a8 m8
    }

    #[test]
    fn advance_single_class_drains_at_two() {
        let spec = single_class(0.5, 1.0);
        let state = FluidState::initial(vec![1.0]);
        let (next, _alloc) = fluid_advance(&spec, &state, f64::INFINITY).unwrap();
        assert_abs_diff_eq!(next.time, 2.0, epsilon = 1e-12);
        assert_eq!(next.levels, vec![0.0]);
    }

    #[test]
    fn advance_two_class_first_breakpoint() {
        let spec = two_class_station((0.0, 0.0), (0.5, 0.5));
        let state = FluidState::initial(vec![1.0, 1.0]);
        let (next, alloc) = fluid_advance(&spec, &state, f64::INFINITY).unwrap();
        assert_eq!(alloc.rates, vec![1.0, 0.0]);
        assert_abs_diff_eq!(next.time, 0.5, epsilon = 1e-12);
        assert_eq!(next.levels, vec![0.0, 1.0]);
    }

    #[test]
    fn zero_state_with_feasible_traffic_settles_immediately() {
        let spec = single_class(0.5, 1.0);
        let traj = fluid_solve(&spec, &[0.0], 100.0).unwrap();
        assert_eq!(traj.verdict, TerminalVerdict::Emptied(0.0));
        assert_eq!(traj.breakpoints.len(), 1);
    }

    #[test]
    fn modified_krss_stable_family_empties() {
        let spec =
            builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(8.0 / 9.0)).unwrap();
        let q0 = vec![0.125; 8];
        let traj = fluid_solve(&spec, &q0, 1e4).unwrap();
        assert!(matches!(traj.verdict, TerminalVerdict::Emptied(_)));
        assert!(flow_balance_residual(&spec, &traj) <= 1e-9);
    }

    #[test]
    fn modified_krss_unstable_family_diverges_from_perturbation() {
        let spec =
            builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(1.0 / 3.0)).unwrap();
        let mut q0 = vec![0.0; 8];
        q0[1] = 1e-3;
        q0[3] = 1e-3;
        let traj = fluid_solve(&spec, &q0, 1e4).unwrap();
        assert_eq!(traj.verdict, TerminalVerdict::Diverging);
    }

    #[test]
    fn krss_virtual_station_mechanism_diverges() {
        let spec = builtin_network(Builtin::Krss, &BuiltinParams::default()).unwrap();
        for q0 in [
            vec![0.0, 1e-3, 0.0, 1e-3],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.5, 0.25, 0.0, 0.25],
        ] {
            let traj = fluid_solve(&spec, &q0, 1e4).unwrap();
            assert_eq!(traj.verdict, TerminalVerdict::Diverging, "from {:?}", q0);
        }
    }

    #[test]
    fn probe_classifies_theorem_branches() {
        let stable =
            builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(8.0 / 9.0)).unwrap();
        let report = stability_probe(&stable, 10, 1e4, 7).unwrap();
        assert!(matches!(report.verdict, FluidVerdict::Stable { .. }));

        let unstable =
            builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(1.0 / 3.0)).unwrap();
        let report = stability_probe(&unstable, 10, 1e4, 7).unwrap();
        assert_eq!(report.verdict, FluidVerdict::Diverging);
    }

    #[test]
    fn scale_invariance_of_trajectories() {
        let spec =
            builtin_network(Builtin::ModifiedKrss, &BuiltinParams::admitted(8.0 / 9.0)).unwrap();
        let q0 = vec![0.3, 0.1, 0.2, 0.05, 0.1, 0.05, 0.1, 0.1];
        let base = fluid_solve(&spec, &q0, 1e3).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let scaled_q0: Vec<f64> = q0.iter().map(|x| x * c).collect();
            let scaled = fluid_solve(&spec, &scaled_q0, 1e3 * c).unwrap();
            assert_eq!(scaled.breakpoints.len(), base.breakpoints.len());
            for (b, s) in base.breakpoints.iter().zip(&scaled.breakpoints) {
                assert_abs_diff_eq!(s.state.time, c * b.state.time, epsilon = 1e-8 * c.max(1.0));
                for k in 0..q0.len() {
                    assert_abs_diff_eq!(
                        s.state.levels[k],
                        c * b.state.levels[k],
                        epsilon = 1e-8 * c.max(1.0)
                    );
                }
            }
        }
    }

    #[test]
    fn probe_starts_are_deterministic() {
        let spec = builtin_network(Builtin::Krss, &BuiltinParams::default()).unwrap();
        let a = probe_starts(&spec, 5, 99);
        let b = probe_starts(&spec, 5, 99);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.1, y.1);
        }
        // 5 simplex + 4 axis + 4 corners + 1 station-pair perturbation.
        assert_eq!(a.len(), 14);
    }

    #[test]
    fn negative_levels_are_rejected() {
        let spec = single_class(0.1, 1.0);
        assert!(matches!(
            fluid_solve(&spec, &[-0.5], 10.0),
            Err(FluidError::NegativeLevel { .. })
        ));
    }
}
