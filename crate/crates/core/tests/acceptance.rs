//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use fracpoincare::capacity::{
    capacity_inequality_check, dense_capacity_oracle, projected_gradient_capacity, random_target_rectangles,
    sp_constant_estimate, CapacityProblem, RayleighSettings, SolverSettings,
};
use fracpoincare::chains::{build_chain_in_tree, verify_chain};
use fracpoincare::experiments::{fit_exponents, sharpness_sweep, verdict, SweepOptions, Verdict};
use fracpoincare::exponents::{mushroom_energy_exponent, qhbc_factor};
use fracpoincare::geometry::{sample_interior, sample_window};
use fracpoincare::quasihyperbolic::{estimate_qhbc_beta, qh_distance, shadow_scaling_fit, shadows, QhGraph};
use fracpoincare::seminorm::{riesz_at, truncation_bounds_check, weak_type_ratio, GridFunction};
use fracpoincare::whitney::decompose;
use fracpoincare::{Domain, ExponentParams, MushroomSpec, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let t = start.elapsed();
    if t > limit {
        o.pass = false;
    }
    o.detail = format!("{}; runtime {:.2} s (limit {} s)", o.detail, t.as_secs_f64(), limit.as_secs());
    o
}

fn params(p: f64, q: f64, delta: f64) -> ExponentParams {
    ExponentParams::new(2, p, q, delta, 0.5).unwrap()
}

fn two_mushrooms() -> Domain {
    Domain::mushroom(&MushroomSpec { side: 2.0, radii: vec![0.25, 0.125], sigma: 1.5, h: 1.0, positions: None }).unwrap()
}

fn whitney_soundness() -> Outcome {
    timed(Duration::from_secs(10), || {
        let mut pass = true;
        let mut parts = Vec::new();
        for (name, domain) in [("square", Domain::unit_square()), ("disk", Domain::unit_disk()), ("2-mushroom", two_mushrooms())] {
            let rep = decompose(&domain, 10).unwrap().verify(&domain);
            pass &= rep.violations == 0 && rep.overlaps == 0 && rep.coverage_deficit_fraction < 0.01;
            parts.push(format!(
                "{name}: {} cubes, {} violations, {} overlaps, deficit {:.3}%",
                rep.cube_count,
                rep.violations,
                rep.overlaps,
                100.0 * rep.coverage_deficit_fraction
            ));
        }
        Outcome { pass, detail: parts.join("; ") }
    })
}

fn qh_exactness() -> Outcome {
    timed(Duration::from_secs(60), || {
        let domain = Domain::clipped_half_plane();
        let exact = 10f64.ln();
        let (x, y) = (Point::new(0.0, 0.1), Point::new(0.0, 1.0));
        let k7 = qh_distance(&domain, x, y, 2f64.powi(-7)).unwrap();
        let k8 = qh_distance(&domain, x, y, 2f64.powi(-8)).unwrap();
        let (e7, e8) = ((k7 - exact).abs() / exact, (k8 - exact).abs() / exact);
        Outcome {
            pass: e7 < 0.03 && e8 < 0.015,
            detail: format!("k = {k7:.6} (err {:.3}%) at 2^-7, {k8:.6} (err {:.3}%) at 2^-8", 100.0 * e7, 100.0 * e8),
        }
    })
}

fn example_one() -> Outcome {
    timed(Duration::from_secs(300), || {
        let spec = MushroomSpec { side: 2.0, radii: (2..=6).map(|k| 2f64.powi(-k)).collect(), sigma: 1.5, h: 1.0, positions: None };
        let radii = spec.radii.clone();
        let mut pass = true;
        let mut parts = Vec::new();
        for (q, want) in [(3.0, Some(Verdict::Violated)), (2.0, None), (1.5, Some(Verdict::NotViolated))] {
            let pq = params(2.0, q, 0.5);
            let res = sharpness_sweep(&spec, &pq, &radii, SweepOptions::default()).unwrap();
            let fit = fit_exponents(&res).unwrap();
            let v = verdict(&pq, spec.sigma, spec.h, &fit);
            pass &= (fit.energy.slope - 2.0).abs() <= 0.2 && (fit.lhs.slope - 2.0).abs() <= 0.15;
            if let Some(w) = want {
                pass &= v.verdict == w;
            }
            parts.push(format!(
                "q={q}: energy slope {:.4}, lhs slope {:.4}, verdict {:?}",
                fit.energy.slope, fit.lhs.slope, v.verdict
            ));
        }
        Outcome { pass, detail: parts.join("; ") }
    })
}

fn example_two() -> Outcome {
    timed(Duration::from_secs(600), || {
        let spec = MushroomSpec {
            side: 2.0,
            radii: (2..=6).map(|k| 2f64.powi(-k)).collect(),
            sigma: 2.0,
            h: 2.0,
            positions: None,
        };
        let pq = params(2.0, 2.0, 0.5);
        let predicted = mushroom_energy_exponent(&pq, 2.0, 2.0);
        let res = sharpness_sweep(&spec, &pq, &spec.radii, SweepOptions::default()).unwrap();
        let slope = fit_exponents(&res).unwrap().energy.slope;
        let bd = Domain::mushroom(&MushroomSpec { side: 3.0, radii: vec![0.5, 0.25, 0.125], sigma: 2.0, h: 2.0, positions: None })
            .unwrap();
        let h_grid = 2f64.powi(-8);
        let beta = estimate_qhbc_beta(&bd, h_grid, 50_000).unwrap().beta_hat;
        let dec = decompose(&bd, 8).unwrap();
        let sh = shadows(&dec, &bd, h_grid).unwrap();
        let shadow_slope = shadow_scaling_fit(&sh, &dec, &bd).unwrap().fit.slope;
        let threshold = qhbc_factor(1.0 / 3.0) - 0.1;
        Outcome {
            pass: (slope - 2.0).abs() <= 0.2 && (predicted - 2.0).abs() < 1e-12 && beta >= 1.0 / 3.0 - 0.05 && shadow_slope >= threshold,
            detail: format!("energy slope {slope:.4} (predicted {predicted}); beta_hat {beta:.4}; shadow slope {shadow_slope:.4} (>= {threshold:.2})"),
        }
    })
}

fn capacity_consistency() -> Outcome {
    timed(Duration::from_secs(120), || {
        let domain = Domain::unit_square();
        let h = 1.0 / 32.0;
        let nodes = Arc::new(sample_window(&domain, h, Point::new(h / 2.0, h / 2.0), &domain.bbox(), |_| true).unwrap());
        let pq = params(2.0, 2.0, 0.5);
        let x0 = domain.x0();
        let r0 = domain.dist_to_boundary(x0) / 8.0;
        let mut solver = SolverSettings::with_seed(42);
        solver.tol = 1e-12;
        let targets = random_target_rectangles(&nodes, x0, r0, 5, 4, 12, 42).unwrap();
        let mut worst: f64 = 0.0;
        for a in &targets {
            let prob = CapacityProblem::new(Arc::clone(&nodes), pq, x0, r0, a.clone(), solver).unwrap();
            let pg = projected_gradient_capacity(&prob).unwrap().value;
            let exact = dense_capacity_oracle(&prob).unwrap();
            worst = worst.max((pg - exact).abs() / exact);
        }
        let prob = CapacityProblem::new(Arc::clone(&nodes), pq, x0, r0, targets[0].clone(), solver).unwrap();
        let c_cap = capacity_inequality_check(&prob, &targets).unwrap().constant;
        let cands = vec![
            GridFunction::from_fn(Arc::clone(&nodes), |p| p.x),
            GridFunction::from_fn(Arc::clone(&nodes), |p| p.y),
        ];
        let c_sp = sp_constant_estimate(&nodes, &pq, &cands, Some(RayleighSettings::with_seed(42))).unwrap().value;
        let base_area = std::f64::consts::PI * r0 * r0;
        let factor = 2f64.powf(pq.q) * domain.measure() / base_area;
        let ratio = (c_cap / c_sp).max(c_sp / c_cap);
        Outcome {
            pass: nodes.len() == 1024 && worst <= 1e-6 && ratio <= factor,
            detail: format!(
                "{} nodes; PG vs linear solve max rel err {worst:.2e}; C_cap {c_cap:.4}, C_sp {c_sp:.4}, ratio {ratio:.2} <= {factor:.1} \
                 (discrete |B0| {:.5} would give {:.1})",
                nodes.len(),
                prob.base_measure(),
                2f64.powf(pq.q) * domain.measure() / prob.base_measure()
            ),
        }
    })
}

/// Linear interpolation on a triangulated coarse grid with random dyadic-scale vertex values.
fn random_piecewise_linear(nodes: &Arc<fracpoincare::NodeSet>, seed: u64) -> GridFunction {
    const M: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..(M + 1) * (M + 1)).map(|_| rng.gen_range(-8.0f64..8.0).exp2()).collect();
    let at = |i: usize, j: usize| vals[j * (M + 1) + i];
    GridFunction::from_fn(Arc::clone(nodes), |p| {
        let (sx, sy) = (p.x * M as f64, p.y * M as f64);
        let (i, j) = ((sx.floor() as usize).min(M - 1), (sy.floor() as usize).min(M - 1));
        let (fx, fy) = (sx - i as f64, sy - j as f64);
        if fx >= fy {
            at(i, j) + fx * (at(i + 1, j) - at(i, j)) + fy * (at(i + 1, j + 1) - at(i + 1, j))
        } else {
            at(i, j) + fy * (at(i, j + 1) - at(i, j)) + fx * (at(i + 1, j + 1) - at(i, j + 1))
        }
    })
}

fn truncation_suite() -> Outcome {
    timed(Duration::from_secs(10), || {
        let nodes = Arc::new(sample_interior(&Domain::unit_square(), 1.0 / 128.0).unwrap());
        let v = random_piecewise_linear(&nodes, 6);
        let rep = truncation_bounds_check(&v, 10_000, 6).unwrap();
        Outcome {
            pass: rep.trials == 10_000 && rep.violations() == 0,
            detail: format!(
                "{} trials: contraction {}, separation {}, level bound {}, partition {}",
                rep.trials, rep.contraction, rep.separation, rep.level_bound, rep.partition
            ),
        }
    })
}

fn riesz_checks() -> Outcome {
    timed(Duration::from_secs(120), || {
        let mut pass = true;
        let mut parts = Vec::new();
        let disk = Domain::unit_disk();
        let nodes = Arc::new(sample_interior(&disk, 1.0 / 128.0).unwrap());
        let centre = nodes.nearest(disk.x0());
        let one = GridFunction::from_fn(Arc::clone(&nodes), |p| if p.dist(Point::new(0.0, 0.0)) < 1.0 { 1.0 } else { 0.0 });
        for delta in [0.5, 1.0] {
            let got = riesz_at(&one, delta, centre).unwrap();
            let want = 2.0 * std::f64::consts::PI / delta;
            let err = (got - want).abs() / want;
            pass &= err < 0.01;
            parts.push(format!("delta {delta}: {got:.5} vs {want:.5} (err {:.3}%)", 100.0 * err));
        }
        let grid = Arc::new(sample_interior(&Domain::unit_square(), 1.0 / 64.0).unwrap());
        let mut ratios: Vec<f64> = (0..20u64)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let bumps: Vec<(Point, f64, f64)> = (0..rng.gen_range(1..=5))
                    .map(|_| {
                        let c = Point::new(rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
                        (c, rng.gen_range(0.02..0.3), rng.gen_range(0.1..10.0))
                    })
                    .collect();
                let f = GridFunction::from_fn(Arc::clone(&grid), |p| {
                    bumps.iter().map(|&(c, w, a)| a * (-(p.dist(c) / w).powi(2)).exp()).sum()
                });
                weak_type_ratio(&f, 1.0).unwrap()
            })
            .collect();
        ratios.sort_by(f64::total_cmp);
        let median = 0.5 * (ratios[9] + ratios[10]);
        let spread = ratios[19] / median;
        pass &= spread < 10.0;
        parts.push(format!("weak-type ratio over 20 f: median {median:.4}, max {:.4}, max/median {spread:.3}", ratios[19]));
        Outcome { pass, detail: parts.join("; ") }
    })
}

fn chain_properties() -> Outcome {
    timed(Duration::from_secs(120), || {
        let m = 2.0;
        let mut pass = true;

        let disk = Domain::unit_disk();
        let h = 1.0 / 128.0;
        let graph = QhGraph::new(&disk, h).unwrap();
        let tree = graph.tree(disk.x0()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut disk_clearance = f64::INFINITY;
        let mut disk_valid = 0;
        while disk_valid < 20 {
            let p = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if disk.dist_to_boundary(p) <= 4.0 * h {
                continue;
            }
            let rep = verify_chain(&build_chain_in_tree(&disk, &tree, p, 1.0, m).unwrap(), 1.0, m);
            pass &= rep.valid && rep.boundary_clearance >= m && finite(&rep);
            disk_clearance = disk_clearance.min(rep.boundary_clearance);
            disk_valid += 1;
        }

        let md = Domain::mushroom(&MushroomSpec {
            side: 2.0,
            radii: vec![0.25, 0.125, 0.0625],
            sigma: 1.5,
            h: 1.0,
            positions: None,
        })
        .unwrap();
        let graph = QhGraph::new(&md, 1.0 / 512.0).unwrap();
        let tree = graph.tree(md.x0()).unwrap();
        let s = 1.5;
        let mut c: f64 = 0.0;
        let mut counts_ok = true;
        let caps: Vec<Point> = md.mushrooms().unwrap().mushrooms.iter().map(|m| m.cap_center).collect();
        let mut cap_clearance = f64::INFINITY;
        let mut reports = Vec::new();
        for &x in &caps {
            let rep = verify_chain(&build_chain_in_tree(&md, &tree, x, s, m).unwrap(), s, m);
            pass &= rep.valid && rep.boundary_clearance >= m && finite(&rep);
            cap_clearance = cap_clearance.min(rep.boundary_clearance);
            match rep.radius_count {
                Some(v) if v.is_finite() => c = c.max(v),
                _ => counts_ok = false,
            }
            reports.push(rep);
        }
        // One constant must bound every (r, count) pair of every chain.
        for rep in &reports {
            for &(r, n) in &rep.radius_counts {
                counts_ok &= n as f64 <= c * r.powf((1.0 - s) / s) * (1.0 + 1e-12);
            }
        }
        pass &= counts_ok;
        Outcome {
            pass,
            detail: format!(
                "disk: 20 chains, min clearance {disk_clearance:.4}; mushroom: {} cap chains, min clearance {cap_clearance:.4}, \
                 radius-count constant c = {c:.3}",
                caps.len()
            ),
        }
    })
}

fn finite(rep: &fracpoincare::chains::ChainReport) -> bool {
    rep.union_over_intersection.is_finite() && rep.distance_to_ball.is_finite() && rep.center_distance.is_finite() && rep.terminal_identity
}

const DETERMINISM_CONFIGS: &[(&str, &str)] = &[
    ("whitney", r#"{"domain": {"kind": "unit-disk"}, "grid": {"j_max": 7}}"#),
    ("qh-dist", r#"{"domain": {"kind": "half-plane"}, "grid": {"h_grid": 0.015625}, "options": {"pairs": [[0, 0.1, 0, 1]]}}"#),
    ("qh-beta", r#"{"domain": {"kind": "unit-square"}, "grid": {"h_grid": 0.015625}, "options": {"samples": 500}}"#),
    ("shadows", r#"{"domain": {"kind": "unit-square"}, "grid": {"h_grid": 0.015625, "j_max": 6}}"#),
    (
        "chain",
        r#"{"domain": {"kind": "unit-disk"}, "geometry": {"s": 1}, "grid": {"h_grid": 0.015625},
            "solver": {"seed": 9}, "options": {"random_targets": 4}}"#,
    ),
    (
        "energy",
        r#"{"domain": {"kind": "unit-square"}, "exponents": {"p": 2, "q": 2, "delta": 0.5, "tau": 0.5},
            "grid": {"h_grid": 0.03125}, "options": {"function": {"kind": "coordinate", "axis": 0}}}"#,
    ),
    (
        "capacity",
        r#"{"domain": {"kind": "unit-square"}, "exponents": {"p": 1.5, "q": 2, "delta": 0.5, "tau": 0.5},
            "grid": {"h_grid": 0.0625}, "solver": {"seed": 4}, "options": {"targets": {"count": 2}}}"#,
    ),
    (
        "best-constant",
        r#"{"domain": {"kind": "unit-square"}, "exponents": {"p": 2, "q": 2, "delta": 0.5, "tau": 0.5},
            "grid": {"h_grid": 0.0625}, "solver": {"seed": 5}}"#,
    ),
    (
        "sharpness-sjohn",
        r#"{"domain": {"kind": "mushroom", "side": 2, "radii": [0.25, 0.125, 0.0625], "sigma": 1.5, "h": 1},
            "exponents": {"p": 2, "q": 2, "delta": 0.5, "tau": 0.5}}"#,
    ),
    (
        "sharpness-qhbc",
        r#"{"domain": {"kind": "mushroom", "side": 2, "radii": [0.25, 0.125, 0.0625], "sigma": 2, "h": 2},
            "exponents": {"p": 2, "q": 2, "delta": 0.5, "tau": 0.5}, "grid": {"h_grid": 0.0078125, "j_max": 7},
            "options": {"beta_samples": 2000}}"#,
    ),
    (
        "potential-check",
        r#"{"domain": {"kind": "unit-square"}, "exponents": {"p": 2, "q": 2, "delta": 0.5, "tau": 0.5},
            "grid": {"h_grid": 0.0625}, "options": {"function": {"kind": "coordinate", "axis": 1}}}"#,
    ),
    ("report", r#"{"exponents": {"p": 2, "q": 3, "delta": 0.5, "tau": 0.5}, "geometry": {"s": 1.5, "beta": 0.5}}"#),
];

fn csv_artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut pass = true;
    let mut failed = Vec::new();
    let mut files = 0;
    for (cmd, cfg) in DETERMINISM_CONFIGS {
        let cfg_path = tmp.path().join(format!("{cmd}.json"));
        fs::write(&cfg_path, cfg).unwrap();
        let mut runs = Vec::new();
        for k in 0..2 {
            let out = tmp.path().join(format!("{cmd}_{k}"));
            let code = fracpoincare::cli::main_with_args([
                "fracpoincare".as_ref(),
                cmd.as_ref(),
                cfg_path.as_os_str(),
                "--output-dir".as_ref(),
                out.as_os_str(),
            ]);
            if code != 0 {
                failed.push(format!("{cmd} exited {code}"));
            }
            runs.push(csv_artifacts(&out));
        }
        if runs[0].is_empty() || runs[0] != runs[1] {
            failed.push(format!("{cmd} CSV differs or is missing"));
        }
        files += runs[0].len();
    }
    pass &= failed.is_empty();
    Outcome {
        pass,
        detail: if failed.is_empty() {
            format!("{} commands, {files} CSV artifacts byte-identical across reruns", DETERMINISM_CONFIGS.len())
        } else {
            failed.join("; ")
        },
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("whitney soundness", whitney_soundness),
        ("quasihyperbolic exactness", qh_exactness),
        ("s-John sharpness scaling", example_one),
        ("QHBC sharpness scaling", example_two),
        ("capacity consistency", capacity_consistency),
        ("truncation suite", truncation_suite),
        ("Riesz potential checks", riesz_checks),
        ("chain verification", chain_properties),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Outcome { pass: false, detail: format!("panicked: {:?}", e.downcast_ref::<String>()) });
        if !o.pass {
            failures += 1;
        }
        println!("{} criterion {} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    if failures > 0 {
        std::process::exit(1);
    }
}
