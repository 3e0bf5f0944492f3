// Scratch: seed sweep over one builtin while calibrating.
use swarmsim_core::engine::{run_with_variant, run};
use swarmsim_core::metrics::compute_metrics;
use swarmsim_core::scenario::{builtins, load_scenario, ControllerVariant};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sec41_straight".into());
    let variant = std::env::args().nth(2);
    let cfg = load_scenario(builtins::get(&name).expect("builtin")).unwrap();
    let mut settled = 0;
    let mut medians = Vec::new();
    let mut rms_all = Vec::new();
    for seed in 0..30u64 {
        let log = match variant.as_deref() {
            Some("tanh") => run_with_variant(&cfg, seed, ControllerVariant::Tanh),
            _ => run(&cfg, seed),
        };
        let m = compute_metrics(&log, &cfg).unwrap();
        for (id, fm) in &m.followers {
            let s = fm.settling_time;
            if s.is_some() {
                settled += 1;
            }
            medians.push(fm.median_distance_to_leader);
            rms_all.push(fm.steady_rms_error);
            println!(
                "seed {seed:2} f{id}: settle={:>6} rms={:6.1} medDL={:6.1} meanDL={:6.1} vis={:.2} hv={:.2} depBL={:.2}",
                s.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into()),
                fm.steady_rms_error,
                fm.median_distance_to_leader,
                fm.mean_distance_to_leader,
                fm.visibility_fraction,
                fm.heading_valid_fraction,
                fm.depth_deviation_max_bl,
            );
        }
    }
    let n = medians.len();
    medians.sort_by(f64::total_cmp);
    rms_all.sort_by(f64::total_cmp);
    println!(
        "\nsettled {settled}/{n}  medDL range [{:.0}, {:.0}]  rms median {:.1}",
        medians[0],
        medians[n - 1],
        rms_all[n / 2]
    );
}
