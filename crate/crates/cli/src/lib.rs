//! Command implementations behind the `rebar` binary. Kept in a library so
//! integration tests can drive them without spawning processes.

pub mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rebar_core::encoder::build_facet_milp;
use rebar_core::lingeo::{facet_directions, Polytope};
use rebar_core::opt::solve_milp;
use rebar_core::oracle::{
    enumerate_milp_oracle, parse_rbpua_csv, sample_rbpua, write_rbpua_csv, GridSpec,
};
use rebar_core::rebar::{
    compute_rbpoa, online_check, verify_multiagent, OnlineVerdict, SafetyReport, Verdict,
};
use rebar_core::scenario::load_scenario;
use rebar_core::{log_info, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSAFE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Runs the full pairwise verification and writes the safety report.
/// Exit 0 when verified safe, 1 when not verified.
pub fn cmd_verify(
    scenario_path: &Path,
    workers: usize,
    tau: Option<usize>,
    facets: Option<usize>,
    out: Option<&Path>,
) -> Result<i32> {
    let scenario = load_scenario(scenario_path)?;
    let tau = tau.unwrap_or(scenario.horizon);
    let n_f = facets.unwrap_or(scenario.facets);
    let system = scenario.build_system()?;
    log_info!(
        "verifying {} agents / {} pairs (tau {tau}, facets {n_f}, workers {workers})",
        system.n_agents,
        system.pairs.len()
    );
    let report = verify_multiagent(&system, tau, n_f, workers, &scenario.solver)?;
    for pair in &report.pairs {
        let status = match (&pair.error, pair.contained) {
            (Some(e), _) => format!("ERROR: {e}"),
            (None, true) => "contained".to_string(),
            (None, false) => "NOT contained".to_string(),
        };
        println!("pair ({}, {}): {status} [{:.1} ms]", pair.i, pair.j, pair.wall_ms);
    }
    println!(
        "verdict: {} ({} pairs, {:.1} ms total)",
        match report.verdict {
            Verdict::VerifiedSafe => "VERIFIED_SAFE",
            Verdict::NotVerified => "NOT_VERIFIED",
        },
        report.pairs.len(),
        report.total_wall_ms
    );
    if let Some(path) = out {
        std::fs::write(path, report.to_json_string())?;
        println!("report written to {}", path.display());
    }
    Ok(match report.verdict {
        Verdict::VerifiedSafe => EXIT_OK,
        Verdict::NotVerified => EXIT_UNSAFE,
    })
}

/// Online safety check of a report against a measurement-uncertainty
/// polytope. Prints one verdict per pair per horizon step; exit 0 only if
/// every check is SAFE.
pub fn cmd_check(
    report_path: &Path,
    uncertainty_path: &Path,
    pair: Option<(usize, usize)>,
    repeat: usize,
) -> Result<i32> {
    let report = SafetyReport::from_json_str(&std::fs::read_to_string(report_path)?)?;
    let uncertainty =
        Polytope::from_json_str(&std::fs::read_to_string(uncertainty_path)?)?;
    let selected: Vec<_> = match pair {
        Some((i, j)) => vec![report
            .pair(i, j)
            .ok_or_else(|| Error::InvalidArgument(format!("report has no pair ({i}, {j})")))?],
        None => report.pairs.iter().collect(),
    };
    if selected.is_empty() {
        return Err(Error::InvalidArgument("report contains no pairs".into()));
    }
    let mut all_safe = true;
    let mut latencies_ms: Vec<f64> = Vec::new();
    for p in selected {
        let (Some(seq), Some(geom)) = (&p.rbpoa, &p.geometry) else {
            return Err(Error::InvalidArgument(format!(
                "pair ({}, {}) carries no backprojection data",
                p.i, p.j
            )));
        };
        if seq.steps.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "pair ({}, {}) has no backprojection steps",
                p.i, p.j
            )));
        }
        // Per-step verdicts for the printout.
        for (k, step) in seq.steps.iter().enumerate().skip(1) {
            let v = online_check(geom, std::slice::from_ref(step), &uncertainty)?;
            println!(
                "pair ({}, {}) step {k}: {}",
                p.i,
                p.j,
                match v {
                    OnlineVerdict::Safe => "SAFE",
                    OnlineVerdict::Unknown => "UNKNOWN",
                }
            );
            if v == OnlineVerdict::Unknown {
                all_safe = false;
            }
        }
        // Latency of the whole-horizon check.
        for _ in 0..repeat.max(1) {
            let t0 = Instant::now();
            let _ = online_check(geom, &seq.steps[1..], &uncertainty)?;
            latencies_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        }
    }
    if repeat > 1 {
        latencies_ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pick = |q: f64| latencies_ms[((latencies_ms.len() - 1) as f64 * q) as usize];
        println!(
            "latency over {} checks: p50 {:.3} ms, p90 {:.3} ms, p99 {:.3} ms",
            latencies_ms.len(),
            pick(0.50),
            pick(0.90),
            pick(0.99)
        );
    }
    Ok(if all_safe { EXIT_OK } else { EXIT_UNSAFE })
}

/// Renders the collision set, backprojection outlines, and optional sampled
/// predecessor points for one pair of the report.
pub fn cmd_plot(
    report_path: &Path,
    pair: Option<(usize, usize)>,
    rbpua_csv: Option<&Path>,
    out: &Path,
) -> Result<i32> {
    let report = SafetyReport::from_json_str(&std::fs::read_to_string(report_path)?)?;
    if report.pairs.is_empty() {
        return Err(Error::InvalidArgument("report contains no pairs".into()));
    }
    let p = match pair {
        Some((i, j)) => report
            .pair(i, j)
            .ok_or_else(|| Error::InvalidArgument(format!("report has no pair ({i}, {j})")))?,
        None => &report.pairs[0],
    };
    let (Some(seq), Some(geom)) = (&p.rbpoa, &p.geometry) else {
        return Err(Error::InvalidArgument(format!(
            "pair ({}, {}) carries no backprojection data",
            p.i, p.j
        )));
    };
    let mut points = match rbpua_csv {
        Some(path) => parse_rbpua_csv(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    // Grid samples repeat the same relative position for many states; one
    // marker per location is enough.
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
    points.dedup();
    // View: the reachable relative-position range, with a small margin.
    let (ilo, ihi) = geom
        .pos_select_i
        .interval_image(&geom.state_box_i.lower, &geom.state_box_i.upper)?;
    let (jlo, jhi) = geom
        .pos_select_j
        .interval_image(&geom.state_box_j.lower, &geom.state_box_j.upper)?;
    let pad = 0.05;
    let w = ((jhi[0] - ilo[0]) - (jlo[0] - ihi[0])).abs().max(1e-6);
    let h = ((jhi[1] - ilo[1]) - (jlo[1] - ihi[1])).abs().max(1e-6);
    let view = [
        jlo[0] - ihi[0] - pad * w,
        jlo[1] - ihi[1] - pad * h,
        jhi[0] - ilo[0] + pad * w,
        jhi[1] - ilo[1] + pad * h,
    ];
    let input = plot::PlotInput {
        collision: &seq.steps[0],
        steps: &seq.steps[1..],
        points: &points,
        view,
        title: format!(
            "pair ({}, {}) | collision set, {} backprojection steps, {} sampled points",
            p.i,
            p.j,
            seq.steps.len() - 1,
            points.len()
        ),
    };
    std::fs::write(out, plot::render_svg(&input))?;
    println!("plot written to {}", out.display());
    Ok(EXIT_OK)
}

fn default_grid_counts(dim: usize, budget: usize) -> Vec<usize> {
    let mut c = 2usize;
    while (c + 1).pow(dim as u32) <= budget && c < 15 {
        c += 1;
    }
    vec![c; dim]
}

/// Ground-truth comparison for one pair: grid-sampled predecessors must all
/// lie inside the computed over-approximation, and the branch-and-bound
/// optimum must match exhaustive enumeration wherever enumeration is
/// tractable. Exit 0 only with zero violations.
pub fn cmd_oracle(
    scenario_path: &Path,
    pair: Option<(usize, usize)>,
    out_csv: Option<&Path>,
) -> Result<i32> {
    let scenario = load_scenario(scenario_path)?;
    let (i, j) = pair.unwrap_or((0, 1));
    let system = scenario.build_pair(i, j)?;
    let cfg = &scenario.solver;

    let (rbpoa, stats) = compute_rbpoa(&system, &system.collision_set, scenario.facets, cfg)?;
    println!(
        "backprojection: {} facets kept, {} dropped, {} nodes",
        stats.facets_kept, stats.facets_dropped, stats.nodes
    );

    let counts = scenario
        .grid_counts
        .clone()
        .unwrap_or_else(|| default_grid_counts(system.stacked_dim(), 1_000_000));
    let grid = GridSpec::over_pair(&system, counts)?;
    let pua = sample_rbpua(&system, &system.collision_set, &grid)?;
    println!("sampled {} predecessors over {} grid points", pua.len(), grid.total_points());

    let mut violations = 0usize;
    if rbpoa.is_empty_marker() {
        violations += pua.len();
        if !pua.is_empty() {
            println!("VIOLATION: predecessors exist but the over-approximation is empty");
        }
    } else {
        for p in &pua {
            for h in &rbpoa.halfspaces {
                let v = h.normal[0] * p[0] + h.normal[1] * p[1];
                let slack = match h.sense {
                    rebar_core::lingeo::Sense::Ge => v - h.offset,
                    rebar_core::lingeo::Sense::Le => h.offset - v,
                };
                if slack < -1e-6 {
                    violations += 1;
                    println!("VIOLATION: point ({}, {}) outside facet by {:.2e}", p[0], p[1], -slack);
                }
            }
        }
    }
    println!("soundness violations: {violations}");

    // Branch-and-bound against exhaustive enumeration, facet by facet.
    let mut compared = 0usize;
    let mut mismatches = 0usize;
    for a in facet_directions(scenario.facets)? {
        let (model, layout) = build_facet_milp(&system, &system.collision_set, &a)?;
        if layout.binary_count() > 16 {
            continue;
        }
        let got = solve_milp(&model, cfg)?;
        let want = enumerate_milp_oracle(&model, cfg)?;
        compared += 1;
        let ok = got.status == want.status
            && match (got.objective, want.objective) {
                (Some(x), Some(y)) => (x - y).abs() <= 1e-6,
                (None, None) => true,
                _ => false,
            };
        if !ok {
            mismatches += 1;
            println!(
                "MISMATCH on facet ({:.3}, {:.3}): {:?} {:?} vs {:?} {:?}",
                a[0], a[1], got.status, got.objective, want.status, want.objective
            );
        }
    }
    println!("solver-vs-enumeration comparisons: {compared}, mismatches: {mismatches}");

    if let Some(path) = out_csv {
        std::fs::write(path, write_rbpua_csv(&pua))?;
        println!("sampled predecessors written to {}", path.display());
    }
    Ok(if violations == 0 && mismatches == 0 { EXIT_OK } else { EXIT_UNSAFE })
}

/// Shared result-to-exit-code plumbing for `main`.
pub fn run_to_exit(result: Result<i32>) -> i32 {
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn path_arg(s: &str) -> PathBuf {
    PathBuf::from(s)
}
