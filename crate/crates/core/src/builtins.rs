//! Built-in network topologies and structural family detection.
//!
//! The four families share a common shape: deterministic routing chains
//! plus, for the modified variants, extra stations holding a regulator
//! class and a high-priority class that throttles it. Detection works on
//! structure alone (chains, station grouping, within-station priority
//! order), so a consistently relabeled instance is recognized and mapped
//! back to canonical class numbering.

use crate::error::ModelError;
use crate::model::NetworkSpec;

const DETECT_TOL: f64 = 1e-12;

/// The named example networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Krss,
    ModifiedKrss,
    Lk,
    ModifiedLk,
}

impl Builtin {
    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Krss => "krss",
            Builtin::ModifiedKrss => "modified-krss",
            Builtin::Lk => "lk",
            Builtin::ModifiedLk => "modified-lk",
        }
    }

    pub fn parse(name: &str) -> Result<Self, ModelError> {
        match name {
            "krss" => Ok(Builtin::Krss),
            "modified-krss" => Ok(Builtin::ModifiedKrss),
            "lk" => Ok(Builtin::Lk),
            "modified-lk" => Ok(Builtin::ModifiedLk),
            other => Err(ModelError::UnknownBuiltin(other.to_string())),
        }
    }
}

/// Overrides applied on top of a builtin's default parameterization.
#[derive(Debug, Clone, Default)]
pub struct BuiltinParams {
    /// Full replacement for the arrival-rate vector.
    pub alpha: Option<Vec<f64>>,
    /// Full replacement for the mean-service vector.
    pub mean_service: Option<Vec<f64>>,
    /// Convenience knob for the family's controllable admission rate:
    /// alpha_1 = alpha_3 for krss, alpha_7 = alpha_8 for modified-krss,
    /// alpha_1 for lk, alpha_6 for modified-lk.
    pub admitted_rate: Option<f64>,
}

impl BuiltinParams {
    pub fn admitted(rate: f64) -> Self {
        BuiltinParams {
            admitted_rate: Some(rate),
            ..Default::default()
        }
    }
}

struct FamilyTable {
    stations: usize,
    station_of: &'static [usize],
    /// (from, to) pairs with probability 1; every other entry is 0.
    edges: &'static [(usize, usize)],
    priority_rank: &'static [usize],
    default_alpha: &'static [f64],
    default_m: &'static [f64],
    /// Classes set by `admitted_rate`.
    admitted_classes: &'static [usize],
}

fn table(which: Builtin) -> FamilyTable {
    match which {
        // Two stations, two 2-step chains 1->2 and 3->4; class 4 preempts 1
        // at station 1, class 2 preempts 3 at station 2; pi = (4,1,2,3).
        Builtin::Krss => FamilyTable {
            stations: 2,
            station_of: &[0, 1, 1, 0],
            edges: &[(0, 1), (2, 3)],
            priority_rank: &[4, 1, 2, 3],
            default_alpha: &[1.0, 0.0, 1.0, 0.0],
            default_m: &[0.2, 0.6, 0.2, 0.6],
            admitted_classes: &[0, 2],
        },
        // KRSS plus regulator stations: chains 1->5->2 and 3->6->4, with
        // class 7 preempting 5 at station 3 and class 8 preempting 6 at
        // station 4.
        Builtin::ModifiedKrss => FamilyTable {
            stations: 4,
            station_of: &[0, 1, 1, 0, 2, 3, 2, 3],
            edges: &[(0, 4), (4, 1), (2, 5), (5, 3)],
            priority_rank: &[4, 1, 2, 3, 6, 8, 5, 7],
            default_alpha: &[1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 8.0 / 9.0, 8.0 / 9.0],
            default_m: &[0.2, 0.6, 0.2, 0.6, 0.1, 0.1, 1.0, 1.0],
            admitted_classes: &[6, 7],
        },
        // Single chain 1->2->3->4 re-entering both stations.
        Builtin::Lk => FamilyTable {
            stations: 2,
            station_of: &[0, 1, 1, 0],
            edges: &[(0, 1), (1, 2), (2, 3)],
            priority_rank: &[4, 1, 2, 3],
            default_alpha: &[1.0, 0.0, 0.0, 0.0],
            default_m: &[0.2, 0.6, 0.2, 0.6],
            admitted_classes: &[0],
        },
        // LK plus a regulator station: chain 6->1->5->2->3->4 with class 6
        // (the only external arrival) preempting regulator 5 at station 3.
        Builtin::ModifiedLk => FamilyTable {
            stations: 3,
            station_of: &[0, 1, 1, 0, 2, 2],
            edges: &[(5, 0), (0, 4), (4, 1), (1, 2), (2, 3)],
            priority_rank: &[4, 1, 2, 3, 6, 5],
            default_alpha: &[0.0, 0.0, 0.0, 0.0, 0.0, 1.37],
            default_m: &[0.1, 0.6, 0.1, 0.6, 0.7, 0.027],
            admitted_classes: &[5],
        },
    }
}

/// Constructs the named builtin with the paper's default parameters,
/// applying any overrides.
pub fn builtin_network(which: Builtin, params: &BuiltinParams) -> Result<NetworkSpec, ModelError> {
    let t = table(which);
    let k = t.station_of.len();
    let mut alpha = match &params.alpha {
        Some(a) => {
            if a.len() != k {
                return Err(ModelError::OverrideLength {
                    expected: k,
                    got: a.len(),
                });
            }
            a.clone()
        }
        None => t.default_alpha.to_vec(),
    };
    let m = match &params.mean_service {
        Some(m) => {
            if m.len() != k {
                return Err(ModelError::OverrideLength {
                    expected: k,
                    got: m.len(),
                });
            }
            m.clone()
        }
        None => t.default_m.to_vec(),
    };
    if let Some(rate) = params.admitted_rate {
        for &c in t.admitted_classes {
            alpha[c] = rate;
        }
    }
    let mut routing = vec![vec![0.0; k]; k];
    for &(from, to) in t.edges {
        routing[from][to] = 1.0;
    }
    NetworkSpec::new(
        t.stations,
        alpha,
        m,
        t.station_of.to_vec(),
        routing,
        t.priority_rank.to_vec(),
    )
}

/// A successful structural match: `canonical_to_actual[i]` is the actual
/// class index playing the role of canonical class `i`.
#[derive(Debug, Clone)]
pub struct DetectedFamily {
    pub family: Builtin,
    pub canonical_to_actual: Vec<usize>,
}

impl DetectedFamily {
    /// Rewrites the spec into canonical class (and station) numbering.
    pub fn to_canonical(&self, spec: &NetworkSpec) -> NetworkSpec {
        spec.relabeled(&self.canonical_to_actual)
            .expect("detected permutation is valid")
    }
}

/// Routing successor/predecessor structure for deterministic 0/1 routing.
struct Chains {
    chains: Vec<Vec<usize>>,
}

fn chain_structure(spec: &NetworkSpec) -> Option<Chains> {
    let k = spec.num_classes();
    let mut succ = vec![None; k];
    let mut pred = vec![None; k];
    for i in 0..k {
        for j in 0..k {
            let p = spec.routing_prob(i, j);
            if p.abs() <= DETECT_TOL {
                continue;
            }
            if (p - 1.0).abs() > DETECT_TOL {
                return None; // probabilistic routing: not one of the families
            }
            if succ[i].is_some() || pred[j].is_some() {
                return None; // branching or merging
            }
            succ[i] = Some(j);
            pred[j] = Some(i);
        }
    }
    let mut chains = Vec::new();
    let mut seen = vec![false; k];
    for head in 0..k {
        if pred[head].is_some() {
            continue;
        }
        let mut chain = vec![head];
        seen[head] = true;
        let mut cur = head;
        while let Some(next) = succ[cur] {
            if seen[next] {
                return None;
            }
            seen[next] = true;
            chain.push(next);
            cur = next;
        }
        chains.push(chain);
    }
    if seen.iter().all(|&s| s) {
        Some(Chains { chains })
    } else {
        None // a cycle remains
    }
}

fn outranks(spec: &NetworkSpec, a: usize, b: usize) -> bool {
    spec.station_of(a) == spec.station_of(b)
        && spec.priority_rank()[a] < spec.priority_rank()[b]
}

fn alpha_zero(spec: &NetworkSpec, classes: &[usize]) -> bool {
    classes
        .iter()
        .all(|&c| spec.arrival_rates()[c].abs() <= DETECT_TOL)
}

/// Attempts to recognize the spec as one of the four builtin families,
/// returning the canonical relabeling on success.
pub fn detect_family(spec: &NetworkSpec) -> Option<DetectedFamily> {
    let chains = chain_structure(spec)?;
    let mut lens: Vec<usize> = chains.chains.iter().map(|c| c.len()).collect();
    lens.sort_unstable();
    let (k, j) = (spec.num_classes(), spec.num_stations());
    match (k, j, lens.as_slice()) {
        (4, 2, [2, 2]) => detect_krss(spec, &chains),
        (8, 4, [1, 1, 3, 3]) => detect_modified_krss(spec, &chains),
        (4, 2, [4]) => detect_lk(spec, &chains),
        (6, 3, [6]) => detect_modified_lk(spec, &chains),
        _ => None,
    }
}

fn detect_krss(spec: &NetworkSpec, chains: &Chains) -> Option<DetectedFamily> {
    let (a, b) = (&chains.chains[0], &chains.chains[1]);
    for (ca, cb) in [(a, b), (b, a)] {
        let (h1, t1, h2, t2) = (ca[0], ca[1], cb[0], cb[1]);
        let ok = spec.station_of(h1) == spec.station_of(t2)
            && spec.station_of(h2) == spec.station_of(t1)
            && spec.station_of(h1) != spec.station_of(t1)
            && outranks(spec, t2, h1)
            && outranks(spec, t1, h2)
            && alpha_zero(spec, &[t1, t2]);
        if ok {
            return Some(DetectedFamily {
                family: Builtin::Krss,
                canonical_to_actual: vec![h1, t1, h2, t2],
            });
        }
    }
    None
}

fn detect_modified_krss(spec: &NetworkSpec, chains: &Chains) -> Option<DetectedFamily> {
    let threes: Vec<&Vec<usize>> = chains.chains.iter().filter(|c| c.len() == 3).collect();
    let ones: Vec<usize> = chains
        .chains
        .iter()
        .filter(|c| c.len() == 1)
        .map(|c| c[0])
        .collect();
    for (ca, cb) in [(threes[0], threes[1]), (threes[1], threes[0])] {
        let (h1, m1, t1) = (ca[0], ca[1], ca[2]);
        let (h2, m2, t2) = (cb[0], cb[1], cb[2]);
        for (s7, s8) in [(ones[0], ones[1]), (ones[1], ones[0])] {
            let stations_distinct = {
                let mut s = vec![
                    spec.station_of(h1),
                    spec.station_of(t1),
                    spec.station_of(m1),
                    spec.station_of(m2),
                ];
                s.sort_unstable();
                s.dedup();
                s.len() == 4
            };
            let ok = stations_distinct
                && spec.station_of(h1) == spec.station_of(t2)
                && spec.station_of(h2) == spec.station_of(t1)
                && spec.station_of(s7) == spec.station_of(m1)
                && spec.station_of(s8) == spec.station_of(m2)
                && outranks(spec, t2, h1)
                && outranks(spec, t1, h2)
                && outranks(spec, s7, m1)
                && outranks(spec, s8, m2)
                && alpha_zero(spec, &[t1, t2, m1, m2]);
            if ok {
                return Some(DetectedFamily {
                    family: Builtin::ModifiedKrss,
                    canonical_to_actual: vec![h1, t1, h2, t2, m1, m2, s7, s8],
                });
            }
        }
    }
    None
}

fn detect_lk(spec: &NetworkSpec, chains: &Chains) -> Option<DetectedFamily> {
    let c = &chains.chains[0];
    let (a, b, cc, d) = (c[0], c[1], c[2], c[3]);
    let ok = spec.station_of(a) == spec.station_of(d)
        && spec.station_of(b) == spec.station_of(cc)
        && spec.station_of(a) != spec.station_of(b)
        && outranks(spec, d, a)
        && outranks(spec, b, cc)
        && alpha_zero(spec, &[b, cc, d]);
    ok.then(|| DetectedFamily {
        family: Builtin::Lk,
        canonical_to_actual: vec![a, b, cc, d],
    })
}

fn detect_modified_lk(spec: &NetworkSpec, chains: &Chains) -> Option<DetectedFamily> {
    let c = &chains.chains[0];
    // Chain order is 6 -> 1 -> 5 -> 2 -> 3 -> 4.
    let (f, a, x, b, cc, d) = (c[0], c[1], c[2], c[3], c[4], c[5]);
    let stations_distinct = {
        let mut s = vec![spec.station_of(a), spec.station_of(b), spec.station_of(x)];
        s.sort_unstable();
        s.dedup();
        s.len() == 3
    };
    let ok = stations_distinct
        && spec.station_of(a) == spec.station_of(d)
        && spec.station_of(b) == spec.station_of(cc)
        && spec.station_of(x) == spec.station_of(f)
        && outranks(spec, d, a)
        && outranks(spec, b, cc)
        && outranks(spec, f, x)
        && alpha_zero(spec, &[a, x, b, cc, d]);
    ok.then(|| DetectedFamily {
        family: Builtin::ModifiedLk,
        canonical_to_actual: vec![a, b, cc, d, x, f],
    })
}

/// Detects the family and returns the spec in canonical numbering, or an
/// error naming the expected topology.
pub fn require_family(spec: &NetworkSpec, expected: Builtin) -> Result<NetworkSpec, ModelError> {
    match detect_family(spec) {
        Some(d) if d.family == expected => Ok(d.to_canonical(spec)),
        _ => Err(ModelError::TopologyMismatch {
            expected: expected.name(),
        }),
    }
}
