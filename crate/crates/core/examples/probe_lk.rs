use mcqn::builtins::{builtin_network, Builtin, BuiltinParams};
use mcqn::fluid::{stability_probe, fluid_solve, TerminalVerdict};

fn main() {
    for rate in [1.37, 1.0, 1.2, 0.8] {
        let spec = builtin_network(Builtin::ModifiedLk, &BuiltinParams::admitted(rate)).unwrap();
        match stability_probe(&spec, 50, 1e4, 12345) {
            Ok(r) => {
                let n_div = r.samples.iter().filter(|s| s.outcome == TerminalVerdict::Diverging).count();
                let n_hor = r.samples.iter().filter(|s| s.outcome == TerminalVerdict::HorizonReached).count();
                let max_tau = r.samples.iter().filter_map(|s| match s.outcome { TerminalVerdict::Emptied(t) => Some(t), _ => None }).fold(0.0f64, f64::max);
                println!("alpha6={rate}: verdict={:?} diverging={n_div} horizon={n_hor} max_tau={max_tau:.2}", r.verdict);
                for s in &r.samples {
                    if s.outcome != TerminalVerdict::Diverging { continue; }
                    println!("   diverging start: {} {:?}", s.label, s.q0);
                }
            }
            Err(e) => println!("alpha6={rate}: ERROR {e}"),
        }
    }
    // Also the epsilon-pair state directly
    let spec = builtin_network(Builtin::ModifiedLk, &BuiltinParams::admitted(1.0)).unwrap();
    let mut q0 = vec![0.0; 6];
    q0[1] = 1e-3; q0[3] = 1e-3;
    let t = fluid_solve(&spec, &q0, 1e4).unwrap();
    println!("alpha6=1 from eps(e2+e4): {:?}, breakpoints={}, final t={:.3}", t.verdict, t.breakpoints.len(), t.final_state().time);
}
