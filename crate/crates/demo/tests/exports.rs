use poseamm_demo::{noise_sweep_points, rotation_trace_steps, solve_scene_report};

#[test]
fn noiseless_scene_is_recovered() {
    for (problem, solver) in [
        ("absolute-central", "amm-upnp"),
        ("absolute-noncentral", "amm-gpnp"),
        ("relative-noncentral", "amm-gec"),
    ] {
        let r = solve_scene_report(problem, solver, 30, 0.0, 4, "linear").unwrap();
        assert!(r.rot_err < 1e-6 && r.trans_err < 1e-6, "{problem}: {} {}", r.rot_err, r.trans_err);
        assert_eq!(r.objective_trace.len(), r.iterations);
        assert!(r.converged);
    }
}

#[test]
fn trace_never_rises() {
    let r = solve_scene_report("absolute-noncentral", "amm-gpnp", 20, 3.0, 1, "identity").unwrap();
    for w in r.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "{w:?}");
    }
}

#[test]
fn bad_names_are_errors() {
    assert!(solve_scene_report("sideways", "amm-gpnp", 20, 0.0, 0, "linear").is_err());
    assert!(solve_scene_report("absolute-central", "amm-gec", 20, 0.0, 0, "linear").is_err());
    assert!(solve_scene_report("absolute-central", "amm-gpnp", 20, 0.0, 0, "random").is_err());
    assert!(noise_sweep_points("absolute-central", 3, 4.0, 1, 0).is_err());
}

#[test]
fn sweep_has_one_point_per_level_and_solver() {
    let pts = noise_sweep_points("absolute-central", 5, 6.0, 4, 2).unwrap();
    assert_eq!(pts.len(), 4 * 2);
    let levels: Vec<f64> = pts.iter().filter(|p| p.solver == "amm-upnp").map(|p| p.noise).collect();
    assert_eq!(levels, vec![0.0, 2.0, 4.0, 6.0]);
    let zero = pts.iter().find(|p| p.noise == 0.0).unwrap();
    assert!(zero.mean_rot_err < 1e-6);
}

#[test]
fn rotation_trace_descends_toward_the_truth() {
    let tr = rotation_trace_steps("absolute-noncentral", 20, 0.0, 3, 400).unwrap();
    assert_eq!(tr.values.len(), tr.angles.len());
    assert!(tr.values.windows(2).all(|w| w[1] <= w[0]));
    assert!(tr.angles.last().unwrap() < &1e-4, "{:?}", tr.angles.last());
}

#[test]
fn json_is_well_formed() {
    let text = poseamm_demo::solve_scene("absolute-central", "amm-gpnp", 12, 1.0, 0, "linear").unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["estimate"]["rotation"].as_array().unwrap().len(), 9);
    assert_eq!(v["solver"], "amm-gpnp");
}
