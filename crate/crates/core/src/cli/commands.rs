use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::{CliError, Command, Config, Output};
use crate::capacity::{
    capacity_inequality_check, dense_capacity_oracle, random_target_rectangles, relative_capacity, sp_constant_estimate,
    CapacityProblem, RayleighSettings, SolverSettings,
};
use crate::chains::{build_chain_in_tree, verify_chain};
use crate::error::Error;
use crate::experiments::{fit_exponents, mushroom_window_nodes, pointwise_potential_check, sharpness_sweep, verdict, SweepOptions};
use crate::exponents::{
    admissible_p_range_qhbc, critical_q_qhbc, critical_q_sjohn, mushroom_energy_exponent, mushroom_qhbc_beta, qhbc_factor,
    ExponentParams,
};
use crate::geometry::{sample_interior, Domain, NodeSet, Point};
use crate::quasihyperbolic::{estimate_qhbc_beta, fit_envelope, qhbc_samples, shadow_scaling_fit, shadow_sum_check, shadows, QhGraph};
use crate::seminorm::{fractional_energy, lq_deviation, GridFunction};
use crate::whitney::decompose;

type Outcome = Result<Value, CliError>;

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn schema(path: &str, message: impl Into<String>) -> CliError {
    CliError::Schema { path: path.into(), message: message.into() }
}

pub fn dispatch(cmd: Command, cfg: &mut Config, seed_override: Option<u64>, out: &mut Output) -> Outcome {
    match cmd {
        Command::Whitney => whitney(cfg, out),
        Command::QhDist => qh_dist(cfg, out),
        Command::QhBeta => qh_beta(cfg, out),
        Command::Shadows => shadows_cmd(cfg, out),
        Command::Chain => chain(cfg, seed_override, out),
        Command::Energy => energy(cfg, out),
        Command::Capacity => capacity(cfg, seed_override, out),
        Command::BestConstant => best_constant(cfg, seed_override, out),
        Command::SharpnessSjohn => sharpness(cfg, out, false),
        Command::SharpnessQhbc => sharpness(cfg, out, true),
        Command::PotentialCheck => potential(cfg, out),
        Command::Report => report(cfg, out),
    }
}

fn seed(cfg: &mut Config, seed_override: Option<u64>) -> Result<u64, CliError> {
    match seed_override {
        Some(s) => Ok(s),
        None => cfg.u64("solver.seed"),
    }
}

fn j_max(cfg: &mut Config) -> Result<i32, CliError> {
    let j = cfg.i64("grid.j_max")?;
    i32::try_from(j).map_err(|_| schema("grid.j_max", "out of range"))
}

fn grid(cfg: &mut Config, domain: &Domain) -> Result<Arc<NodeSet>, CliError> {
    let h = cfg.f64("grid.h_grid")?;
    if cfg.has("options.window_mushroom") {
        let i = cfg.u64("options.window_mushroom")? as usize;
        return Ok(Arc::new(mushroom_window_nodes(domain, i, h)?));
    }
    Ok(Arc::new(sample_interior(domain, h)?))
}

/// Grid function described by `options.function`.
fn function(cfg: &mut Config, domain: &Domain, nodes: &Arc<NodeSet>) -> Result<GridFunction, CliError> {
    let kind = cfg.string_or("options.function.kind", "coordinate")?;
    match kind.as_str() {
        "coordinate" => {
            let axis = cfg.u64_or("options.function.axis", 0)?;
            match axis {
                0 => Ok(GridFunction::from_fn(Arc::clone(nodes), |p| p.x)),
                1 => Ok(GridFunction::from_fn(Arc::clone(nodes), |p| p.y)),
                _ => Err(schema("options.function.axis", "axis must be 0 or 1")),
            }
        }
        "mushroom" => {
            let i = cfg.u64("options.function.index")? as usize;
            Ok(crate::seminorm::mushroom_test_function(domain, i, Arc::clone(nodes))?)
        }
        "csv" => {
            let path = cfg.string("options.function.path")?;
            let file = std::fs::File::open(&path).map_err(|e| schema("options.function.path", format!("{path}: {e}")))?;
            Ok(GridFunction::read_csv(Arc::clone(nodes), std::io::BufReader::new(file))?)
        }
        other => Err(schema("options.function.kind", format!("unknown function kind '{other}'"))),
    }
}

fn whitney(cfg: &mut Config, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let dec = decompose(&domain, j_max(cfg)?)?;
    let rep = dec.verify(&domain);
    out.csv("whitney.csv", |w| dec.write_csv(w))?;
    let v = to_json(&rep);
    out.json("whitney_report.json", &v)?;
    Ok(v)
}

fn qh_dist(cfg: &mut Config, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let h = cfg.f64("grid.h_grid")?;
    let pairs = cfg.tuples("options.pairs", 4)?;
    let graph = QhGraph::new(&domain, h)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for (i, t) in pairs.iter().enumerate() {
        let (x, y) = (Point::new(t[0], t[1]), Point::new(t[2], t[3]));
        let g = graph.geodesic(x, y)?;
        out.csv(&format!("geodesic_{i}.csv"), |w| {
            writeln!(w, "x,y")?;
            for p in &g.points {
                writeln!(w, "{:.16e},{:.16e}", p.x, p.y)?;
            }
            Ok(())
        })?;
        rows.push((t.clone(), g.length, g.points.len()));
    }
    out.csv("qh_dist.csv", |w| {
        writeln!(w, "x1,y1,x2,y2,k,path_points")?;
        for (t, k, n) in &rows {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{n}", t[0], t[1], t[2], t[3], k)?;
        }
        Ok(())
    })?;
    Ok(json!({"distances": rows.iter().map(|r| r.1).collect::<Vec<_>>()}))
}

fn qh_beta(cfg: &mut Config, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let h = cfg.f64("grid.h_grid")?;
    let samples = cfg.u64_or("options.samples", 4000)? as usize;
    let scatter = qhbc_samples(&domain, h, samples)?;
    out.csv("qh_beta_samples.csv", |w| {
        writeln!(w, "log_ratio,k")?;
        for (l, k) in &scatter {
            writeln!(w, "{l:.16e},{k:.16e}")?;
        }
        Ok(())
    })?;
    let v = to_json(&fit_envelope(&scatter)?);
    out.json("qh_beta.json", &v)?;
    Ok(v)
}

fn shadows_cmd(cfg: &mut Config, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let dec = decompose(&domain, j_max(cfg)?)?;
    let h = cfg.f64("grid.h_grid")?;
    let sh = shadows(&dec, &domain, h)?;
    out.csv("shadows.csv", |w| sh.write_csv(&dec, w))?;
    let eps = cfg.f64_or("options.eps", 0.1)?;
    let fit = match shadow_scaling_fit(&sh, &dec, &domain) {
        Ok(f) => to_json(&f),
        Err(e) => json!({"error": e.kind(), "message": e.to_string()}),
    };
    let mut summary = json!({
        "cubes": dec.len(),
        "flagged": sh.flagged_count(),
        "past_sum_max": sh.past_sum_max(&dec, eps),
        "scaling_fit": fit,
    });
    if cfg.has("options.e_box") {
        let b = cfg.f64_list("options.e_box")?;
        if b.len() != 4 {
            return Err(schema("options.e_box", "expected [xmin, ymin, xmax, ymax]"));
        }
        let params = cfg.exponents()?;
        let e: Vec<usize> = (0..dec.len())
            .filter(|&k| {
                let c = dec.cubes[k].center;
                c.x >= b[0] && c.y >= b[1] && c.x <= b[2] && c.y <= b[3]
            })
            .collect();
        summary["shadow_sum_ratio"] = json!(shadow_sum_check(&dec, &sh, &e, &params)?);
        summary["e_cubes"] = json!(e.len());
    }
    out.json("shadows.json", &summary)?;
    Ok(summary)
}

fn chain(cfg: &mut Config, seed_override: Option<u64>, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let s = cfg.f64_or("geometry.s", 1.0)?;
    let m = cfg.f64_or("options.m", 2.0)?;
    let h = cfg.f64("grid.h_grid")?;
    let mut targets: Vec<Point> = Vec::new();
    if cfg.has("options.targets") {
        targets.extend(cfg.tuples("options.targets", 2)?.iter().map(|t| Point::new(t[0], t[1])));
    }
    let random = cfg.u64_or("options.random_targets", 0)? as usize;
    if random > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed(cfg, seed_override)?);
        let b = domain.bbox();
        let mut drawn = 0;
        while drawn < random {
            let p = Point::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
            if domain.dist_to_boundary(p) > 4.0 * h {
                targets.push(p);
                drawn += 1;
            }
        }
    }
    if cfg.bool_or("options.cap_centers", false)? {
        let md = domain.mushrooms().ok_or_else(|| schema("options.cap_centers", "domain has no mushrooms"))?;
        targets.extend(md.mushrooms.iter().map(|m| m.cap_center));
    }
    if targets.is_empty() {
        return Err(schema("options.targets", "no chain targets given"));
    }
    let graph = QhGraph::new(&domain, h)?;
    let tree = graph.tree(domain.x0())?;
    let mut reports = Vec::with_capacity(targets.len());
    for (i, &x) in targets.iter().enumerate() {
        let chain = build_chain_in_tree(&domain, &tree, x, s, m)?;
        out.csv(&format!("chain_{i}.csv"), |w| chain.write_csv(w))?;
        reports.push((x, chain.len(), verify_chain(&chain, s, m)));
    }
    out.csv("chains.csv", |w| {
        writeln!(w, "i,x,y,balls,union_over_intersection,distance_to_ball,boundary_clearance,max_overlap,center_distance,terminal_identity,radius_count")?;
        for (i, (x, n, r)) in reports.iter().enumerate() {
            writeln!(
                w,
                "{i},{:.16e},{:.16e},{n},{:.16e},{:.16e},{:.16e},{},{:.16e},{},{}",
                x.x,
                x.y,
                r.union_over_intersection,
                r.distance_to_ball,
                r.boundary_clearance,
                r.max_overlap,
                r.center_distance,
                r.terminal_identity,
                r.radius_count.map_or(String::new(), |c| format!("{c:.16e}"))
            )?;
        }
        Ok(())
    })?;
    let all_valid = reports.iter().all(|r| r.2.valid);
    let radius_constant = reports.iter().filter_map(|r| r.2.radius_count).fold(None, |a: Option<f64>, c| Some(a.map_or(c, |a| a.max(c))));
    let summary = json!({
        "chains": reports.len(),
        "all_valid": all_valid,
        "min_boundary_clearance": reports.iter().map(|r| r.2.boundary_clearance).fold(f64::INFINITY, f64::min),
        "max_overlap": reports.iter().map(|r| r.2.max_overlap).max(),
        "radius_constant": radius_constant,
        "reports": reports.iter().map(|r| to_json(&r.2)).collect::<Vec<_>>(),
    });
    out.json("chains.json", &summary)?;
    Ok(summary)
}

fn energy(cfg: &mut Config, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let params = cfg.exponents()?;
    let nodes = grid(cfg, &domain)?;
    let u = function(cfg, &domain, &nodes)?;
    let e = fractional_energy(&u, &params);
    out.csv("energy.csv", |w| {
        writeln!(w, "x,y,u,g")?;
        for (k, p) in nodes.points().iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", p.x, p.y, u.values[k], e.g[k])?;
        }
        Ok(())
    })?;
    let summary = json!({
        "nodes": nodes.len(),
        "energy": e.total,
        "correction": e.correction,
        "correction_share": e.correction_share,
        "lq_deviation": lq_deviation(&u, params.q)?,
    });
    out.json("energy.json", &summary)?;
    Ok(summary)
}

fn solver(cfg: &mut Config, seed_override: Option<u64>) -> Result<SolverSettings, CliError> {
    Ok(SolverSettings {
        tol: cfg.f64_or("solver.tol", 1e-8)?,
        max_iter: cfg.u64_or("solver.max_iter", 100_000)? as usize,
        seed: seed(cfg, seed_override)?,
    })
}

fn base_ball(cfg: &mut Config, domain: &Domain) -> Result<(Point, f64), CliError> {
    let x0 = domain.x0();
    let r = cfg.f64_or("options.base_radius", domain.dist_to_boundary(x0) / 8.0)?;
    Ok((x0, r))
}

fn capacity(cfg: &mut Config, seed_override: Option<u64>, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let params = cfg.exponents()?;
    let nodes = grid(cfg, &domain)?;
    let solver = solver(cfg, seed_override)?;
    let (center, radius) = base_ball(cfg, &domain)?;
    let count = cfg.u64_or("options.targets.count", 5)? as usize;
    let min_cells = cfg.u64_or("options.targets.min_cells", 4)? as usize;
    let max_cells = cfg.u64_or("options.targets.max_cells", 12)? as usize;
    let targets = random_target_rectangles(&nodes, center, radius, count, min_cells, max_cells, solver.seed)?;
    let prob = CapacityProblem::new(Arc::clone(&nodes), params, center, radius, targets[0].clone(), solver)?;
    let table = capacity_inequality_check(&prob, &targets)?;
    out.csv("capacity.csv", |w| {
        writeln!(w, "i,target_size,measure,capacity,ratio")?;
        for (i, r) in table.rows.iter().enumerate() {
            writeln!(w, "{i},{},{:.16e},{:.16e},{:.16e}", r.target_size, r.measure, r.capacity, r.ratio)?;
        }
        Ok(())
    })?;
    let first = relative_capacity(&prob)?;
    out.csv("minimizer.csv", |w| first.minimizer.write_csv(w))?;
    let mut summary = json!({
        "base_center": [center.x, center.y],
        "base_radius": radius,
        "base_nodes": prob.base.len(),
        "table": to_json(&table),
        "first": to_json(&first),
    });
    if cfg.bool_or("options.oracle", false)? {
        summary["oracle"] = json!(dense_capacity_oracle(&prob)?);
    }
    out.json("capacity.json", &summary)?;
    Ok(summary)
}

fn candidates(domain: &Domain, nodes: &Arc<NodeSet>) -> Vec<(String, GridFunction)> {
    let mut c = vec![
        ("x".to_string(), GridFunction::from_fn(Arc::clone(nodes), |p| p.x)),
        ("y".to_string(), GridFunction::from_fn(Arc::clone(nodes), |p| p.y)),
    ];
    if let Some(md) = domain.mushrooms() {
        for (i, m) in md.mushrooms.iter().enumerate() {
            c.push((format!("mushroom_{i}"), GridFunction::from_fn(Arc::clone(nodes), |p| m.test_value(p))));
        }
    }
    c
}

fn best_constant(cfg: &mut Config, seed_override: Option<u64>, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let params = cfg.exponents()?;
    let nodes = grid(cfg, &domain)?;
    let cands = candidates(&domain, &nodes);
    let rayleigh = if params.p == 2.0 && params.q == 2.0 {
        let mut s = RayleighSettings::with_seed(seed(cfg, seed_override)?);
        s.starts = cfg.u64_or("options.rayleigh_starts", s.starts as u64)? as usize;
        s.max_iter = cfg.u64_or("options.rayleigh_max_iter", s.max_iter as u64)? as usize;
        Some(s)
    } else {
        None
    };
    let fns: Vec<GridFunction> = cands.iter().map(|c| c.1.clone()).collect();
    let est = sp_constant_estimate(&nodes, &params, &fns, rayleigh)?;
    let mut quotients = Vec::with_capacity(cands.len());
    for (label, u) in &cands {
        let e = fractional_energy(u, &params).total;
        let l = lq_deviation(u, params.q)?;
        quotients.push((label.clone(), if e > 0.0 { l / e.powf(params.q / params.p) } else { f64::NAN }));
    }
    out.csv("candidates.csv", |w| {
        writeln!(w, "label,quotient")?;
        for (l, q) in &quotients {
            writeln!(w, "{l},{q:.16e}")?;
        }
        Ok(())
    })?;
    let v = to_json(&est);
    out.json("best_constant.json", &v)?;
    Ok(v)
}

fn sharpness(cfg: &mut Config, out: &mut Output, qhbc: bool) -> Outcome {
    let kind = cfg.string("domain.kind")?;
    if kind != "mushroom" {
        return Err(schema("domain.kind", "sharpness sweeps need a mushroom domain"));
    }
    let spec = cfg.mushroom_spec("domain")?;
    let domain = Domain::mushroom(&spec).map_err(|e| schema("domain", e.to_string()))?;
    let params = cfg.exponents()?;
    let radii = if cfg.has("options.radii") { cfg.f64_list("options.radii")? } else { spec.radii.clone() };
    let options = SweepOptions { spacing: cfg.f64_or("options.spacing", 0.125)? };
    let q_values = if cfg.has("options.q_values") { cfg.f64_list("options.q_values")? } else { vec![params.q] };
    let mut runs = Vec::with_capacity(q_values.len());
    for (k, &q) in q_values.iter().enumerate() {
        let pq = ExponentParams::new(2, params.p, q, params.delta, params.tau).map_err(|e| schema("options.q_values", e.to_string()))?;
        let res = sharpness_sweep(&spec, &pq, &radii, options)?;
        out.csv(&format!("sweep_{k}.csv"), |w| res.write_csv(w))?;
        let fit = fit_exponents(&res)?;
        let v = verdict(&pq, spec.sigma, spec.h, &fit);
        runs.push(json!({
            "q": q,
            "fit": to_json(&fit),
            "verdict": to_json(&v),
            "means": res.rows.iter().map(|r| r.mean).collect::<Vec<_>>(),
        }));
    }
    let mut summary = json!({
        "predicted_energy_slope": mushroom_energy_exponent(&params, spec.sigma, spec.h),
        "runs": runs,
    });
    if qhbc {
        let beta = mushroom_qhbc_beta(spec.sigma);
        summary["beta"] = json!(beta);
        summary["critical_q"] = to_json(&critical_q_qhbc(&params, beta)?);
        if cfg.bool_or("options.geometry_checks", true)? {
            let bd = if cfg.has("options.beta_domain") { cfg.domain_at("options.beta_domain")? } else { domain.clone() };
            let h = cfg.f64("grid.h_grid")?;
            let samples = cfg.u64_or("options.beta_samples", 4000)? as usize;
            summary["beta_estimate"] = to_json(&estimate_qhbc_beta(&bd, h, samples)?);
            let dec = decompose(&bd, j_max(cfg)?)?;
            let sh = shadows(&dec, &bd, h)?;
            out.csv("shadows.csv", |w| sh.write_csv(&dec, w))?;
            summary["shadow_fit"] = to_json(&shadow_scaling_fit(&sh, &dec, &bd)?);
            summary["shadow_slope_threshold"] = json!(qhbc_factor(beta));
        }
        out.json("sharpness_qhbc.json", &summary)?;
    } else {
        summary["critical_q"] = json!(critical_q_sjohn(&params, spec.sigma)?);
        out.json("sharpness_sjohn.json", &summary)?;
    }
    Ok(summary)
}

fn potential(cfg: &mut Config, out: &mut Output) -> Outcome {
    let domain = cfg.domain()?;
    let params = cfg.exponents()?;
    let nodes = grid(cfg, &domain)?;
    let u = function(cfg, &domain, &nodes)?;
    let (center, radius) = base_ball(cfg, &domain)?;
    let floor = cfg.f64_or("options.floor", 1e-12)?;
    let check = pointwise_potential_check(&u, &params, center, radius, floor)?;
    out.csv("potential.csv", |w| check.ratios.write_csv(w))?;
    let v = to_json(&check);
    out.json("potential.json", &v)?;
    Ok(v)
}

fn report(cfg: &mut Config, out: &mut Output) -> Outcome {
    let params = cfg.exponents()?;
    let g = cfg.geometry()?;
    let wrap = |r: Result<Value, Error>| r.unwrap_or_else(|e| json!({"error": e.kind(), "message": e.to_string()}));
    let summary = json!({
        "critical_q_sjohn": wrap(critical_q_sjohn(&params, g.s).map(|v| json!(v))),
        "critical_q_qhbc": wrap(critical_q_qhbc(&params, g.beta).map(|v| to_json(&v))),
        "admissible_p_qhbc": wrap(admissible_p_range_qhbc(2, params.delta, g.beta).map(|v| to_json(&v))),
        "qhbc_factor": qhbc_factor(g.beta),
        "mushroom_energy_exponent": mushroom_energy_exponent(&params, g.sigma, g.h),
        "mushroom_beta": mushroom_qhbc_beta(g.sigma),
    });
    out.csv("thresholds.csv", |w| {
        writeln!(w, "name,value")?;
        let scalar = |k: &str| summary[k].as_f64();
        for k in ["critical_q_sjohn", "qhbc_factor", "mushroom_energy_exponent", "mushroom_beta"] {
            match scalar(k) {
                Some(v) => writeln!(w, "{k},{v:.16e}")?,
                None => writeln!(w, "{k},")?,
            }
        }
        Ok(())
    })?;
    out.json("report.json", &summary)?;
    Ok(summary)
}
