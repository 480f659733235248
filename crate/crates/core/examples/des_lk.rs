use mcqn::builtins::{builtin_network, Builtin, BuiltinParams};
use mcqn::sim::{simulate, SimConfig};

fn main() {
    for rate in [1.37, 1.3, 1.2, 1.1, 1.0, 0.9] {
        let spec = builtin_network(Builtin::ModifiedLk, &BuiltinParams::admitted(rate)).unwrap();
        let config = SimConfig::new(1e6, 1e5, 42).unwrap();
        let stats = simulate(&spec, &config);
        let total_final: u64 = stats.final_queue.iter().sum();
        println!(
            "alpha6={rate:4}: mean={:9.2} ci={:7.2} diverged={} final_total={:6} first_batch={:8.2} last_batch={:9.2} events={}",
            stats.mean_total_queue, stats.ci_halfwidth, stats.diverged, total_final,
            stats.batch_means[0], stats.batch_means.last().unwrap(), stats.events
        );
    }
}
