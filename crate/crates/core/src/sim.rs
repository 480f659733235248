//! Continuous-time Markov chain simulation of the queueing network under
//! preemptive priority.
//!
//! With Poisson arrivals and exponential services the queue-length vector
//! is a CTMC, so the simulator advances jump by jump: at each state the
//! active transitions are the external arrivals and one service completion
//! per busy station (the highest-priority nonempty class there). Preempted
//! work is resampled on resumption, which is distributionally exact by
//! memorylessness. Time averages are integrated as exact rectangle areas
//! between jumps.
//!
//! Randomness comes from ChaCha8 seeded with the run seed; replication
//! `r` uses ChaCha8 stream id `r`, giving independent streams under one
//! seed.

use crate::error::SimError;
use crate::exec;
use crate::model::NetworkSpec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Minimum number of batches accepted by [`divergence_test`].
pub const DIVERGENCE_MIN_BATCHES: usize = 10;
/// Divergence is flagged when the batch-mean slope has a t-statistic above
/// this and the last batch mean exceeds [`DIVERGENCE_RATIO`] times the first.
pub const DIVERGENCE_T_STAT: f64 = 3.0;
pub const DIVERGENCE_RATIO: f64 = 5.0;

/// Run-length parameters of one simulation run.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    horizon: f64,
    warmup: f64,
    seed: u64,
    batches: usize,
}

impl SimConfig {
    pub fn new(horizon: f64, warmup: f64, seed: u64) -> Result<Self, SimError> {
        if !(warmup < horizon) {
            return Err(SimError::WarmupExceedsHorizon { warmup, horizon });
        }
        Ok(SimConfig {
            horizon,
            warmup,
            seed,
            batches: 20,
        })
    }

    pub fn with_batches(mut self, batches: usize) -> Result<Self, SimError> {
        if batches < 2 {
            return Err(SimError::TooFewBatches(batches));
        }
        self.batches = batches;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn warmup(&self) -> f64 {
        self.warmup
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn batches(&self) -> usize {
        self.batches
    }
}

/// Output statistics of one replication.
#[derive(Debug, Clone)]
pub struct SimStats {
    /// Time average of the total queue length over [warmup, horizon].
    pub mean_total_queue: f64,
    pub per_class_means: Vec<f64>,
    /// 95% batch-means confidence half-width for the total queue.
    pub ci_halfwidth: f64,
    pub diverged: bool,
    pub final_queue: Vec<u64>,
    /// Batch means of the total queue (length = configured batches).
    pub batch_means: Vec<f64>,
    pub events: u64,
    /// The stream id actually used (replication index).
    pub stream: u64,
}

/// The class a station serves at queue state `q`: its highest-priority
/// nonempty class.
pub fn serving_class(spec: &NetworkSpec, q: &[u64], station: usize) -> Option<usize> {
    spec.classes_at(station).iter().copied().find(|&k| q[k] > 0)
}

struct Accumulators {
    warmup: f64,
    horizon: f64,
    batch_len: f64,
    batch_area: Vec<f64>,
    class_area: Vec<f64>,
}

impl Accumulators {
    fn new(config: &SimConfig, classes: usize) -> Self {
        Accumulators {
            warmup: config.warmup,
            horizon: config.horizon,
            batch_len: (config.horizon - config.warmup) / config.batches as f64,
            batch_area: vec![0.0; config.batches],
            class_area: vec![0.0; classes],
        }
    }

    /// Adds the rectangle [from, to) x q, splitting it across the warmup
    /// boundary and batch boundaries.
    fn add(&mut self, from: f64, to: f64, q: &[u64]) {
        let mut t = from.max(self.warmup);
        let to = to.min(self.horizon);
        if t >= to {
            return;
        }
        let total: u64 = q.iter().sum();
        for (k, &qk) in q.iter().enumerate() {
            self.class_area[k] += qk as f64 * (to - t);
        }
        while t < to {
            let idx = (((t - self.warmup) / self.batch_len) as usize).min(self.batch_area.len() - 1);
            let batch_end = self.warmup + (idx + 1) as f64 * self.batch_len;
            let seg_end = batch_end.min(to);
            self.batch_area[idx] += total as f64 * (seg_end - t);
            t = seg_end;
        }
    }
}

/// Runs one replication from an empty initial state.
pub fn simulate(spec: &NetworkSpec, config: &SimConfig) -> SimStats {
    simulate_from(spec, config, &vec![0; spec.num_classes()], 0, &[]).0
}

/// Runs one replication on the given ChaCha8 stream.
pub fn simulate_stream(spec: &NetworkSpec, config: &SimConfig, stream: u64) -> SimStats {
    simulate_from(spec, config, &vec![0; spec.num_classes()], stream, &[]).0
}

/// Runs one replication from an arbitrary initial state, additionally
/// recording the queue vector at each of the (sorted) `sample_times`.
pub fn simulate_from(
    spec: &NetworkSpec,
    config: &SimConfig,
    initial_queue: &[u64],
    stream: u64,
    sample_times: &[f64],
) -> (SimStats, Vec<Vec<u64>>) {
    let k = spec.num_classes();
    assert_eq!(initial_queue.len(), k, "initial queue length mismatch");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);

    let arrivals: Vec<(usize, f64)> = (0..k)
        .filter(|&c| spec.arrival_rates()[c] > 0.0)
        .map(|c| (c, spec.arrival_rates()[c]))
        .collect();
    let total_arrival_rate: f64 = arrivals.iter().map(|a| a.1).sum();
    let mu: Vec<f64> = (0..k).map(|c| spec.service_rate(c)).collect();

    let mut q = initial_queue.to_vec();
    let mut t = 0.0f64;
    let mut acc = Accumulators::new(config, k);
    let mut events = 0u64;
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;

    loop {
        // Active service completions.
        let mut total_rate = total_arrival_rate;
        let mut busy: [Option<usize>; 64] = [None; 64];
        debug_assert!(spec.num_stations() <= 64);
        for j in 0..spec.num_stations() {
            if let Some(c) = serving_class(spec, &q, j) {
                busy[j] = Some(c);
                total_rate += mu[c];
            }
        }

        let t_next = if total_rate > 0.0 {
            t + -(1.0 - rng.gen::<f64>()).ln() / total_rate
        } else {
            f64::INFINITY
        };
        let t_stop = t_next.min(config.horizon);
        while next_sample < sample_times.len() && sample_times[next_sample] <= t_stop {
            samples.push(q.clone());
            next_sample += 1;
        }
        acc.add(t, t_stop, &q);
        if t_next >= config.horizon {
            t = config.horizon;
            break;
        }
        t = t_next;
        events += 1;

        // Which transition fired.
        let mut x = rng.gen::<f64>() * total_rate;
        let mut fired = false;
        for &(class, rate) in &arrivals {
            if x < rate {
                q[class] += 1;
                fired = true;
                break;
            }
            x -= rate;
        }
        if !fired {
            for j in 0..spec.num_stations() {
                if let Some(c) = busy[j] {
                    if x < mu[c] {
                        q[c] -= 1;
                        let mut r = rng.gen::<f64>();
                        let mut routed = false;
                        for to in 0..k {
                            let p = spec.routing_prob(c, to);
                            if r < p {
                                q[to] += 1;
                                routed = true;
                                break;
                            }
                            r -= p;
                        }
                        let _ = routed; // residual probability = departure
                        fired = true;
                        break;
                    }
                    x -= mu[c];
                }
            }
        }
        debug_assert!(fired, "no transition selected");
    }

    let window = config.horizon - config.warmup;
    let batch_means: Vec<f64> = acc
        .batch_area
        .iter()
        .map(|a| a / acc.batch_len)
        .collect();
    let per_class_means: Vec<f64> = acc.class_area.iter().map(|a| a / window).collect();
    let mean_total_queue = acc.batch_area.iter().sum::<f64>() / window;
    let ci_halfwidth = batch_ci_halfwidth(&batch_means);
    let diverged = if batch_means.len() >= DIVERGENCE_MIN_BATCHES {
        divergence_test(&batch_means).unwrap_or(false)
    } else {
        false
    };
    let stats = SimStats {
        mean_total_queue,
        per_class_means,
        ci_halfwidth,
        diverged,
        final_queue: q,
        batch_means,
        events,
        stream,
    };
    let _ = t;
    (stats, samples)
}

/// 95% half-width from batch means (Student t).
pub fn batch_ci_halfwidth(batch_means: &[f64]) -> f64 {
    let n = batch_means.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = batch_means.iter().sum::<f64>() / n as f64;
    let var = batch_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var == 0.0 {
        return 0.0;
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid dof")
        .inverse_cdf(0.975);
    t * (var / n as f64).sqrt()
}

/// Flags divergence from a sequence of batch means: the least-squares
/// slope over batch index must be positive with t-statistic above
/// [`DIVERGENCE_T_STAT`] and the last batch mean must exceed
/// [`DIVERGENCE_RATIO`] times the first.
pub fn divergence_test(batch_means: &[f64]) -> Result<bool, SimError> {
    let n = batch_means.len();
    if n < DIVERGENCE_MIN_BATCHES {
        return Err(SimError::InsufficientBatches {
            needed: DIVERGENCE_MIN_BATCHES,
            got: n,
        });
    }
    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = batch_means.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, &y) in batch_means.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let slope = sxy / sxx;
    let rss: f64 = batch_means
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let fit = y_mean + slope * (i as f64 - x_mean);
            (y - fit).powi(2)
        })
        .sum();
    let se2 = rss / (nf - 2.0) / sxx;
    let t_stat = if se2 > 0.0 {
        slope / se2.sqrt()
    } else if slope > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let ratio_ok = *batch_means.last().unwrap() > DIVERGENCE_RATIO * batch_means[0];
    Ok(slope > 0.0 && t_stat > DIVERGENCE_T_STAT && ratio_ok)
}

/// Runs `replications` independent replications (streams `0..replications`
/// under the configured seed), in input order.
pub fn run_replications(spec: &NetworkSpec, config: &SimConfig, replications: usize) -> Vec<SimStats> {
    let streams: Vec<u64> = (0..replications as u64).collect();
    exec::map(&streams, |&s| simulate_stream(spec, config, s))
}

/// Mean of replication means and a 95% half-width across replications.
pub fn aggregate_replications(stats: &[SimStats]) -> (f64, f64, bool) {
    let means: Vec<f64> = stats.iter().map(|s| s.mean_total_queue).collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let hw = batch_ci_halfwidth(&means);
    let diverged = stats.iter().any(|s| s.diverged);
    (mean, hw, diverged)
}
