// Scratch diagnostics while calibrating built-in scenarios.
use swarmsim_core::engine::run;
use swarmsim_core::geometry::world_to_pqr;
use swarmsim_core::metrics::compute_metrics;
use swarmsim_core::scenario::{builtins, load_scenario};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sec41_straight".into());
    let seed: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = load_scenario(builtins::get(&name).expect("builtin")).unwrap();
    let log = run(&cfg, seed);
    let m = compute_metrics(&log, &cfg).unwrap();

    for (id, fm) in &m.followers {
        println!(
            "follower {id}: settle={:?} rms={:.1} meanDL={:.1} medianDL={:.1} vis={:.2} hv={:.2} depthBL={:.2}",
            fm.settling_time,
            fm.steady_rms_error,
            fm.mean_distance_to_leader,
            fm.median_distance_to_leader,
            fm.visibility_fraction,
            fm.heading_valid_fraction,
            fm.depth_deviation_max_bl
        );
    }

    println!("\n  t     dL     dT   zone      u_f   cau  pl   pr   bear   rel_q   rel_p  hv");
    let fid = log.roles.iter().position(|r| matches!(r, swarmsim_core::scenario::Role::Follower)).unwrap();
    for tick in log.ticks.iter().step_by(10) {
        let f = &tick.agents[fid];
        let l = &tick.agents[0];
        let fm = &m.followers[&fid];
        let idx = (tick.t / 0.2).round() as usize;
        let rel = world_to_pqr(&l.state.pose, f.state.pose.position);
        println!(
            "{:5.1} {:6.1} {:6.1} {:8} {:6.1} {:4.2} {:4.2} {:4.2} {:6.1} {:7.1} {:7.1} {:?}",
            tick.t,
            fm.distance_to_leader[idx],
            fm.distance_to_target[idx],
            f.zone.map(|z| z.as_str()).unwrap_or("-"),
            f.state.surge,
            f.cmd.caudal_freq,
            f.cmd.pectoral_left_freq,
            f.cmd.pectoral_right_freq,
            f.estimate.map(|e| e.bearing.to_degrees()).unwrap_or(f64::NAN),
            rel.q,
            rel.p,
            f.estimate.map(|e| e.heading_valid).unwrap_or(false),
        );
    }
}
