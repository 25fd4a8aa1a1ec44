//! Runs one simulation cell and prints the summary metrics.
//!
//! `cargo run --release --example study_cell -- [reps] [rho_x] [sparse]`

use csaqr::predictor::CsaSettings;
use csaqr::simulate::{run_study, Signal, SimDesign};
use csaqr::{MethodSpec, SolverOptions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let reps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let rho = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.9);
    let design = if args.get(3).map(String::as_str) == Some("sparse") {
        SimDesign::correct(Signal::Sparse, 50, 15, reps)
    } else {
        SimDesign::misspecified(50, 0.5, 0.5, rho, reps)
    };
    let methods = [MethodSpec::Csa(CsaSettings::default()), MethodSpec::Jma];
    let start = std::time::Instant::now();
    let res = run_study(&design, &methods, 20240601, 0, &SolverOptions::default()).unwrap();
    for s in &res.stats {
        println!(
            "{:5} fpe {:.4} sd {:.4} win {:.3} loss_to_csa {:?} k_hat {:?}",
            s.method,
            s.avg_fpe.unwrap_or(f64::NAN),
            s.sd.unwrap_or(f64::NAN),
            s.winning_ratio.unwrap_or(f64::NAN),
            s.loss_to_csa,
            s.mean_k_hat
        );
    }
    println!(
        "failures {} elapsed {:.1?}",
        res.failures.len(),
        start.elapsed()
    );
}
