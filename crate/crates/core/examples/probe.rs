// scratch probe: paired comparison on a configurable scene
use vortiflow::sceneio::load_scene;
use vortiflow::sim::{Simulation, SolverKind};

fn main() {
    let scene = std::env::args().nth(1).unwrap();
    let steps: u64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(600);
    let mask = std::env::args().nth(3).unwrap_or_else(|| "0".into());
    std::env::set_var("VORTIFLOW_PROBE_MASK", &mask);
    let mut results = Vec::new();
    for kind in [SolverKind::Baseline, SolverKind::Vr] {
        let config = load_scene(std::path::Path::new(&scene)).unwrap();
        let mut sim = Simulation::from_scene(&config, kind).unwrap();
        let t0 = std::time::Instant::now();
        let mut failed = None;
        for s in 0..steps {
            if let Err(e) = sim.step() { failed = Some((s, e.to_string())); break; }
        }
        println!("{kind:?}: {:.0} ms/step {}", t0.elapsed().as_secs_f64() * 1000.0 / sim.steps_done().max(1) as f64,
            if let Some(f) = &failed { format!("FAILED {f:?}") } else { "OK".into() });
        results.push(sim.records().to_vec());
    }
    let d = &vortiflow::diagnostics::integrated_enstrophy_ratio;
    let n = results[0].len().min(results[1].len());
    let (a, b) = (&results[1][..n].to_vec(), &results[0][..n].to_vec());
    println!("mask={mask}: enstrophy full={:.4} active[10,70]={:.4} fifths: {:.3} {:.3} {:.3} {:.3} {:.3}",
        d(a, b, (0.0, 1.0)), d(a, b, (0.1, 0.7)),
        d(a, b, (0.0, 0.2)), d(a, b, (0.2, 0.4)), d(a, b, (0.4, 0.6)), d(a, b, (0.6, 0.8)), d(a, b, (0.8, 1.0)));
    if let Ok(cmp) = vortiflow::diagnostics::compare_runs(a, b) {
        println!("final-window energy ratio: {:.4}", cmp.final_window_energy_ratio);
    }
}
