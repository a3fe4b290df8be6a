//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Every check here leans on an oracle that does not share code with the
//! routine under test: exhaustive enumeration, integer geometry, dense grids
//! or textbook closed forms.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ccp_core::bench::{generate_instance, GenOptions};
use ccp_core::minimal::{enumerate_equiprobable, is_minimal, minimal_subsets};
use ccp_core::oracle::{big_m, min_distance_lb, project_ball};
use ccp_core::presolve::{PresolveConfig, Toggles};
use ccp_core::tol::{mass_reaches, rel_close};
use ccp_core::{
    brute_force_solve, project, run_pipeline, solve, verify, IndexSet, Norm, PbpInstance, ProjectionStatus,
    ScenarioSet, SolveResult, SolveStatus, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() -> ExitCode {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("oracle_equivalence", oracle_equivalence),
        ("presolve_neutrality", presolve_neutrality),
        ("minimal_subset_counting", minimal_subset_counting),
        ("square_with_center", square_with_center),
        ("robust_limit", robust_limit),
        ("geometry_suite", geometry_suite),
        ("projection_suite", projection_suite),
        ("bound_soundness", bound_soundness),
        ("inequality_validity", inequality_validity),
        ("performance_smoke", performance_smoke),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| outcome(false, format!("panicked: {}", panic_text(&e))));
        if !result.pass {
            failed += 1;
        }
        println!(
            "{} {:<24} {} [{:.1}s]",
            if result.pass { "PASS" } else { "FAIL" },
            name,
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

fn panic_text(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown".into())
}

// ---------------------------------------------------------------------------
// Seeded suite shared by the equivalence and neutrality checks.

struct Case {
    label: String,
    inst: PbpInstance,
    brute: SolveResult,
}

struct Suite {
    cases: Vec<Case>,
    brute_time: Duration,
}

fn suite_instances() -> Vec<(String, PbpInstance)> {
    let mut out = Vec::new();
    for p in [2usize, 3] {
        for tau in [0.15, 0.3] {
            for random_mass in [false, true] {
                for seed in 0..50u64 {
                    let n = 6 + (seed % 7) as usize;
                    let opts = GenOptions {
                        random_mass,
                        linf: seed % 2 == 1,
                    };
                    let base = 10_000 * p as u64 + if random_mass { 5_000 } else { 0 } + (tau * 100.0) as u64 * 100;
                    let inst = generate_instance(p, n, tau, base + seed, opts);
                    let label = format!("p={p} tau={tau} random_mass={random_mass} seed={seed} n={n}");
                    out.push((label, inst));
                }
            }
        }
    }
    out
}

fn suite() -> &'static Suite {
    static SUITE: OnceLock<Suite> = OnceLock::new();
    SUITE.get_or_init(|| {
        let start = Instant::now();
        let cases = suite_instances()
            .into_iter()
            .map(|(label, inst)| {
                let brute = brute_force_solve(&inst).unwrap_or_else(|e| panic!("brute force on {label}: {e}"));
                Case { label, inst, brute }
            })
            .collect();
        Suite {
            cases,
            brute_time: start.elapsed(),
        }
    })
}

fn same_value(a: &SolveResult, b: &SolveResult) -> bool {
    a.status == b.status && rel_close(a.value, b.value, 1e-6)
}

fn oracle_equivalence() -> Outcome {
    let suite = suite();
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut positive = 0;
    let mut infeasible = 0;
    for case in &suite.cases {
        let direct = match solve(&case.inst, None, &SolverConfig::default()) {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("{}: {e}", case.label));
                continue;
            }
        };
        if !same_value(&direct, &case.brute) {
            bad.push(format!(
                "{}: direct {:?} {} vs brute {:?} {}",
                case.label, direct.status, direct.value, case.brute.status, case.brute.value
            ));
        } else if direct.status == SolveStatus::Optimal && !verify(&case.inst, &direct) {
            bad.push(format!("{}: verify rejected the direct result", case.label));
        }
        match case.brute.status {
            SolveStatus::Optimal if case.brute.value > 1e-9 => positive += 1,
            SolveStatus::Infeasible => infeasible += 1,
            _ => {}
        }
    }
    let total = suite.brute_time + start.elapsed();
    let pass = bad.is_empty() && total < Duration::from_secs(300);
    let mut detail = format!(
        "{} instances, {} mismatches, F*>0 on {positive}, infeasible {infeasible}, {:.1}s total",
        suite.cases.len(),
        bad.len(),
        total.as_secs_f64()
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(pass, detail)
}

fn presolve_neutrality() -> Outcome {
    let suite = suite();
    let mut configs: Vec<(&str, Toggles)> = vec![("all", Toggles::ALL)];
    configs.extend(Toggles::each_alone());
    let mut bad = Vec::new();
    let mut runs = 0;
    for case in &suite.cases {
        for (name, toggles) in &configs {
            runs += 1;
            let config = PresolveConfig {
                separability_time_limit: None,
                toggles: *toggles,
            };
            let res = run_pipeline(&case.inst, &config)
                .and_then(|report| solve(&case.inst, Some(&report), &SolverConfig::default()));
            match res {
                Ok(r) if same_value(&r, &case.brute) => {}
                Ok(r) => bad.push(format!(
                    "{} [{name}]: {:?} {} vs brute {}",
                    case.label, r.status, r.value, case.brute.value
                )),
                Err(e) => bad.push(format!("{} [{name}]: {e}", case.label)),
            }
        }
    }
    let mut detail = format!(
        "{} presolve+solve runs over {} toggle sets, {} mismatches",
        runs,
        configs.len(),
        bad.len()
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(bad.is_empty(), detail)
}

// ---------------------------------------------------------------------------

fn binomial(n: u64, k: u64) -> u128 {
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}

fn minimal_subset_counting() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for n in 1..=12usize {
        for j in 1..=10u64 {
            let tau = j as f64 / 20.0;
            // ceil(n * (20 - j) / 20) in integers
            let k = (n as u64 * (20 - j)).div_ceil(20);
            let expected = binomial(n as u64, k);
            let scen = ScenarioSet::equiprobable(1, (0..n).map(|i| vec![i as f64]).collect());
            let dfs = minimal_subsets(&scen, tau).count() as u128;
            let listed = enumerate_equiprobable(n, tau).map(|f| f.subsets.len() as u128);
            checked += 1;
            if dfs != expected || listed.as_ref().ok() != Some(&expected) {
                bad.push(format!(
                    "n={n} tau={tau}: expected {expected}, dfs {dfs}, listed {listed:?}"
                ));
            }
        }
    }
    let mut detail = format!("{checked} (N, tau) pairs, {} mismatches", bad.len());
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(bad.is_empty(), detail)
}

fn square_with_center() -> Outcome {
    let points = vec![
        vec![1.0, 1.0],
        vec![-1.0, 1.0],
        vec![-1.0, -1.0],
        vec![1.0, -1.0],
        vec![0.0, 0.0],
    ];
    let scen = ScenarioSet::new(2, points, vec![0.22, 0.22, 0.22, 0.22, 0.12]);
    let tau = 0.15;
    let four: IndexSet = (0..4).collect();
    let dfs: Vec<IndexSet> = minimal_subsets(&scen, tau).collect();
    let exhaustive: Vec<IndexSet> = (1u32..32)
        .map(|mask| (0..5).filter(|i| mask >> i & 1 == 1).collect::<IndexSet>())
        .filter(|s| is_minimal(&scen, tau, s))
        .collect();
    let inst = PbpInstance {
        scenarios: scen,
        x_bar: vec![3.0, 0.5],
        radius: 1.5,
        box_radius: 4.0,
        objective: Norm::L2,
        constraint: Norm::Linf,
        tau,
    };
    let report = match run_pipeline(&inst, &PresolveConfig::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("presolve failed: {e}")),
    };
    let center_safe = report.partition.safe.contains(4);
    let family_ok = dfs == vec![four.clone()] && exhaustive == vec![four.clone()];
    let solved = solve(&inst, Some(&report), &SolverConfig::default());
    let brute = brute_force_solve(&inst);
    let values_ok = match (&solved, &brute) {
        (Ok(a), Ok(b)) => same_value(a, b) && verify(&inst, a),
        _ => false,
    };
    outcome(
        family_ok && center_safe && !four.contains(4) && values_ok,
        format!(
            "family {:?} (exhaustive {:?}), scenario 5 safe: {center_safe}, 5 outside the minimal subset: {}, value {:?}",
            dfs.iter().map(|s| s.one_based()).collect::<Vec<_>>(),
            exhaustive.iter().map(|s| s.one_based()).collect::<Vec<_>>(),
            !four.contains(4),
            solved.map(|r| r.value).ok()
        ),
    )
}

fn robust_limit() -> Outcome {
    let mut bad = Vec::new();
    let mut count = 0;
    let mut feasible = 0;
    for p in [2usize, 3] {
        for random_mass in [false, true] {
            for seed in 0..10u64 {
                let n = 6 + seed as usize;
                let mut inst = generate_instance(
                    p,
                    n,
                    0.0,
                    7_000 + 100 * p as u64 + seed,
                    GenOptions {
                        random_mass,
                        linf: seed % 2 == 0,
                    },
                );
                inst.tau = inst.scenarios.min_prob() / 2.0;
                count += 1;
                let label = format!("p={p} random_mass={random_mass} seed={seed}");
                let robust = match project(&inst, &IndexSet::full(n)) {
                    Ok(r) => r,
                    Err(e) => {
                        bad.push(format!("{label}: {e}"));
                        continue;
                    }
                };
                let expected = match robust.status {
                    ProjectionStatus::Feasible => robust.value,
                    _ => f64::INFINITY,
                };
                if expected.is_finite() {
                    feasible += 1;
                }
                let run = run_pipeline(&inst, &PresolveConfig::default()).and_then(|report| {
                    let r = solve(&inst, Some(&report), &SolverConfig::default())?;
                    Ok((report, r))
                });
                match run {
                    Ok((report, r)) => {
                        if report.partition.safe != IndexSet::full(n) {
                            bad.push(format!("{label}: safe set {:?}", report.partition.safe.one_based()));
                        }
                        let close = if expected.is_finite() {
                            (r.value - expected).abs() <= 1e-8 * expected.abs().max(1.0)
                        } else {
                            r.value == expected
                        };
                        if !close {
                            bad.push(format!("{label}: value {} vs robust {}", r.value, expected));
                        }
                    }
                    Err(e) => bad.push(format!("{label}: {e}")),
                }
            }
        }
    }
    let mut detail = format!(
        "{count} instances ({feasible} with a feasible robust counterpart), {} failures",
        bad.len()
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(bad.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// Integer geometry oracle. Points live on an integer lattice scaled by 1/4,
// so every f64 coordinate is exact and every predicate here is exact integer
// arithmetic.

type Ip = Vec<i64>;

const SCALE: f64 = 0.25;

fn to_f64(p: &Ip) -> Vec<f64> {
    p.iter().map(|&v| v as f64 * SCALE).collect()
}

fn isub(a: &Ip, b: &Ip) -> Ip {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn idot(a: &Ip, b: &Ip) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn icross(a: &Ip, b: &Ip) -> Ip {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn orient2(a: &Ip, b: &Ip, c: &Ip) -> i64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn orient3(a: &Ip, b: &Ip, c: &Ip, d: &Ip) -> i64 {
    idot(&icross(&isub(b, a), &isub(c, a)), &isub(d, a))
}

fn on_segment(a: &Ip, b: &Ip, q: &Ip) -> bool {
    let ab = isub(b, a);
    let aq = isub(q, a);
    let aligned = if a.len() == 2 {
        orient2(a, b, q) == 0
    } else {
        icross(&ab, &aq).iter().all(|&v| v == 0)
    };
    aligned && idot(&isub(q, a), &isub(q, b)) <= 0
}

fn in_triangle(a: &Ip, b: &Ip, c: &Ip, q: &Ip) -> bool {
    if a.len() == 2 {
        let o = orient2(a, b, c);
        o != 0 && orient2(a, b, q) * o >= 0 && orient2(b, c, q) * o >= 0 && orient2(c, a, q) * o >= 0
    } else {
        let n = icross(&isub(b, a), &isub(c, a));
        if n.iter().all(|&v| v == 0) || idot(&n, &isub(q, a)) != 0 {
            return false;
        }
        [(a, b), (b, c), (c, a)]
            .iter()
            .all(|(u, v)| idot(&icross(&isub(v, u), &isub(q, u)), &n) >= 0)
    }
}

fn in_tetrahedron(a: &Ip, b: &Ip, c: &Ip, d: &Ip, q: &Ip) -> bool {
    let o = orient3(a, b, c, d);
    o != 0
        && orient3(q, b, c, d) * o >= 0
        && orient3(a, q, c, d) * o >= 0
        && orient3(a, b, q, d) * o >= 0
        && orient3(a, b, c, q) * o >= 0
}

/// Caratheodory: `q` is in the hull iff it is in the hull of at most `p + 1`
/// of the points.
fn oracle_contains(points: &[Ip], q: &Ip) -> bool {
    let mut pts: Vec<Ip> = points.to_vec();
    pts.sort();
    pts.dedup();
    let n = pts.len();
    if pts.iter().any(|p| p == q) {
        return true;
    }
    for i in 0..n {
        for j in i + 1..n {
            if on_segment(&pts[i], &pts[j], q) {
                return true;
            }
            for k in j + 1..n {
                if in_triangle(&pts[i], &pts[j], &pts[k], q) {
                    return true;
                }
                if q.len() == 3 {
                    for l in k + 1..n {
                        if in_tetrahedron(&pts[i], &pts[j], &pts[k], &pts[l], q) {
                            return true;
                        }
                    }
                }
            }
        }
    }
    false
}

fn oracle_vertices(points: &[Ip]) -> Vec<Ip> {
    let mut pts: Vec<Ip> = points.to_vec();
    pts.sort();
    pts.dedup();
    pts.iter()
        .filter(|v| {
            let others: Vec<Ip> = pts.iter().filter(|u| u != v).cloned().collect();
            !oracle_contains(&others, v)
        })
        .cloned()
        .collect()
}

fn random_lattice_set(rng: &mut ChaCha8Rng, p: usize, n: usize) -> Vec<Ip> {
    let even = |rng: &mut ChaCha8Rng, r: i64| 2 * rng.gen_range(-r..=r);
    let vec_of = |rng: &mut ChaCha8Rng, r: i64| (0..p).map(|_| rng.gen_range(-r..=r)).collect::<Ip>();
    let mode = rng.gen_range(0..4);
    let mut pts: Vec<Ip> = match mode {
        // collinear
        0 => {
            let base: Ip = (0..p).map(|_| even(rng, 2)).collect();
            let dir = vec_of(rng, 2);
            (0..n)
                .map(|_| {
                    let k = rng.gen_range(-3..=3) * 2;
                    base.iter().zip(&dir).map(|(b, d)| b + k * d).collect()
                })
                .collect()
        }
        // coplanar (3D) or a second generic pattern (2D)
        1 if p == 3 => {
            let base: Ip = (0..p).map(|_| even(rng, 2)).collect();
            let u = vec_of(rng, 2);
            let v = vec_of(rng, 2);
            (0..n)
                .map(|_| {
                    let a = rng.gen_range(-2..=2) * 2;
                    let b = rng.gen_range(-2..=2) * 2;
                    (0..3).map(|i| base[i] + a * u[i] + b * v[i]).collect()
                })
                .collect()
        }
        // small grid: many ties, collinear triples and duplicates
        2 => (0..n).map(|_| (0..p).map(|_| even(rng, 1)).collect()).collect(),
        _ => (0..n).map(|_| (0..p).map(|_| even(rng, 4)).collect()).collect(),
    };
    if rng.gen_bool(0.3) && n > 1 {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        pts[i] = pts[j].clone();
    }
    pts
}

fn geometry_suite() -> Outcome {
    use ccp_core::geometry::{hull, separability_check, vertex_indices};
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut bad = Vec::new();
    let mut queries = 0;
    for set_no in 0..1000 {
        let p = if set_no % 2 == 0 { 2 } else { 3 };
        let n = rng.gen_range(3..=12);
        let pts = random_lattice_set(&mut rng, p, n);
        let fpts: Vec<Vec<f64>> = pts.iter().map(to_f64).collect();
        let h = hull(&fpts);
        let mut qs: Vec<Ip> = pts.clone();
        for _ in 0..12 {
            qs.push((0..p).map(|_| rng.gen_range(-10..=10)).collect());
        }
        for _ in 0..8 {
            let a = &pts[rng.gen_range(0..n)];
            let b = &pts[rng.gen_range(0..n)];
            qs.push(a.iter().zip(b).map(|(x, y)| (x + y) / 2).collect());
        }
        for q in &qs {
            queries += 1;
            let want = oracle_contains(&pts, q);
            if h.contains(&to_f64(q)) != want {
                bad.push(format!("set {set_no} {pts:?}: containment of {q:?} should be {want}"));
            }
        }
        let verts = vertex_indices(&fpts, &IndexSet::full(n));
        let mut got: Vec<Ip> = verts.iter().map(|i| pts[i].clone()).collect();
        got.sort();
        let distinct = {
            let mut g = got.clone();
            g.dedup();
            g.len() == got.len()
        };
        let mut want = oracle_vertices(&pts);
        want.sort();
        if !distinct || got != want {
            bad.push(format!("set {set_no} {pts:?}: vertices {got:?} vs {want:?}"));
        }
    }
    let hull_bad = bad.len();

    let mut sep_cases = 0;
    let mut sep_true = 0;
    for case in 0..1000 {
        let p = if case % 2 == 0 { 2 } else { 3 };
        let n = rng.gen_range(3..=10);
        let pts = random_lattice_set(&mut rng, p, n);
        let probs: Vec<f64> = if rng.gen_bool(0.5) {
            vec![1.0 / n as f64; n]
        } else {
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
            let t: f64 = w.iter().sum();
            w.iter().map(|v| v / t).collect()
        };
        let scen = ScenarioSet::new(p, pts.iter().map(to_f64).collect(), probs);
        let tau = rng.gen_range(1..=5) as f64 / 10.0;
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let s = order[0];
        let n_safe = rng.gen_range(0..=2.min(n - 1));
        let n_pruned = rng.gen_range(0..=2.min(n - 1 - n_safe));
        let safe: IndexSet = order[1..1 + n_safe].iter().copied().collect();
        let pruned: IndexSet = order[1 + n_safe..1 + n_safe + n_pruned].iter().copied().collect();
        sep_cases += 1;
        let verdict = separability_check(&scen, s, &safe, &pruned, tau);
        let q = &pts[s];
        let want = (0u32..1 << n).any(|mask| {
            let set: IndexSet = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            safe.is_subset(&set)
                && set.is_disjoint(&pruned)
                && mass_reaches(scen.mass(&set), tau)
                && !oracle_contains(&set.iter().map(|i| pts[i].clone()).collect::<Vec<_>>(), q)
        });
        if want {
            sep_true += 1;
        }
        if verdict.separable != want {
            bad.push(format!(
                "separability case {case}: s={s} safe={:?} pruned={:?} tau={tau} pts={pts:?}: got {}, want {want}",
                safe.as_slice(),
                pruned.as_slice(),
                verdict.separable
            ));
            continue;
        }
        if let Some(w) = verdict.witness_set.filter(|_| verdict.separable) {
            let ok = safe.is_subset(&w)
                && w.is_disjoint(&pruned)
                && mass_reaches(scen.mass(&w), tau)
                && !oracle_contains(&w.iter().map(|i| pts[i].clone()).collect::<Vec<_>>(), q);
            if !ok {
                bad.push(format!(
                    "separability case {case}: witness {:?} is not a valid separation",
                    w.as_slice()
                ));
            }
        }
    }
    let mut detail = format!(
        "1000 point sets, {queries} containment queries, {hull_bad} hull disagreements; {sep_cases} separability cases ({sep_true} separable), {} disagreements",
        bad.len() - hull_bad
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(bad.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// Dense grids over explicit regions.

struct GridRegion {
    box_radius: f64,
    centers: Vec<Vec<f64>>,
    radius: f64,
    norm: Norm,
    x_bar: Vec<f64>,
    f_cap: f64,
}

impl GridRegion {
    fn objective(&self, x: &[f64]) -> f64 {
        Norm::L2.dist(x, &self.x_bar)
    }

    /// Exact membership, no tolerance: every accepted point is truly inside.
    fn inside(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= self.box_radius)
            && self.centers.iter().all(|c| self.norm.dist(x, c) <= self.radius)
            && self.objective(x) <= self.f_cap
    }

    fn grid(&self, lo: &[f64], hi: &[f64], steps: usize, mut visit: impl FnMut(&[f64])) {
        let dim = lo.len();
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        loop {
            for d in 0..dim {
                x[d] = if steps == 0 {
                    lo[d]
                } else {
                    lo[d] + (hi[d] - lo[d]) * idx[d] as f64 / steps as f64
                };
            }
            if self.inside(&x) {
                visit(&x);
            }
            let mut d = 0;
            loop {
                if d == dim {
                    return;
                }
                idx[d] += 1;
                if idx[d] <= steps {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    fn instance(&self, tau: f64) -> PbpInstance {
        let m = self.centers.len();
        PbpInstance {
            scenarios: ScenarioSet::equiprobable(self.x_bar.len(), self.centers.clone()),
            x_bar: self.x_bar.clone(),
            radius: self.radius,
            box_radius: self.box_radius,
            objective: Norm::L2,
            constraint: self.norm,
            tau: tau.min(1.0 - 1.0 / (2 * m) as f64),
        }
    }
}

/// Grid minimum with pattern-search refinement around the incumbent.
fn grid_minimum(region: &GridRegion) -> Option<(Vec<f64>, f64, usize)> {
    let dim = region.x_bar.len();
    let r = region.box_radius;
    let steps = 400;
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut hits = 0;
    region.grid(&vec![-r; dim], &vec![r; dim], steps, |x| {
        hits += 1;
        let v = region.objective(x);
        if best.as_ref().is_none_or(|b| v < b.1) {
            best = Some((x.to_vec(), v));
        }
    });
    let (mut point, mut value) = best?;
    let mut h = 2.0 * r / steps as f64;
    while h > 1e-8 {
        for _ in 0..400 {
            let lo: Vec<f64> = point.iter().map(|v| v - 8.0 * h).collect();
            let hi: Vec<f64> = point.iter().map(|v| v + 8.0 * h).collect();
            let mut moved = false;
            region.grid(&lo, &hi, 16, |x| {
                let v = region.objective(x);
                if v < value {
                    value = v;
                    point = x.to_vec();
                    moved = true;
                }
            });
            if !moved {
                break;
            }
        }
        h /= 4.0;
    }
    Some((point, value, hits))
}

fn random_region(rng: &mut ChaCha8Rng, dim: usize) -> GridRegion {
    let m = rng.gen_range(1..=4);
    GridRegion {
        box_radius: 2.0,
        centers: (0..m)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect())
            .collect(),
        radius: rng.gen_range(0.4..1.8),
        norm: if rng.gen_bool(0.5) { Norm::L1 } else { Norm::Linf },
        x_bar: (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        f_cap: f64::INFINITY,
    }
}

fn l1_projection_by_edges(q: &[f64], c: &[f64], r: f64) -> Vec<f64> {
    if Norm::L1.dist(q, c) <= r {
        return q.to_vec();
    }
    let corners = [[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]];
    let mut best = (f64::INFINITY, vec![]);
    for k in 0..4 {
        let a = [c[0] + corners[k][0], c[1] + corners[k][1]];
        let b = [c[0] + corners[(k + 1) % 4][0], c[1] + corners[(k + 1) % 4][1]];
        let d = [b[0] - a[0], b[1] - a[1]];
        let t = (((q[0] - a[0]) * d[0] + (q[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])).clamp(0.0, 1.0);
        let x = vec![a[0] + t * d[0], a[1] + t * d[1]];
        let dist = Norm::L2.dist(&x, q);
        if dist < best.0 {
            best = (dist, x);
        }
    }
    best.1
}

fn l1_projection_by_bisection(q: &[f64], c: &[f64], r: f64) -> Vec<f64> {
    let y: Vec<f64> = q.iter().zip(c).map(|(a, b)| a - b).collect();
    if Norm::L1.eval(&y) <= r {
        return q.to_vec();
    }
    let (mut lo, mut hi) = (0.0, Norm::Linf.eval(&y));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = y.iter().map(|v| (v.abs() - mid).max(0.0)).sum();
        if s > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    y.iter()
        .zip(c)
        .map(|(v, ci)| ci + v.signum() * (v.abs() - theta).max(0.0))
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn projection_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = Vec::new();
    let (mut tested, mut empty, mut worst) = (0, 0, 0.0f64);
    let mut attempts = 0;
    while tested < 100 && attempts < 1000 {
        attempts += 1;
        let region = random_region(&mut rng, 2);
        let inst = region.instance(0.0);
        let res = match project(&inst, &IndexSet::full(region.centers.len())) {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("region {attempts}: {e}"));
                continue;
            }
        };
        let grid = grid_minimum(&region);
        match (res.status, grid) {
            (ProjectionStatus::Feasible, Some((_, gmin, hits))) => {
                let x = &res.point;
                let feasible = x.iter().all(|v| v.abs() <= region.box_radius + 1e-8)
                    && region
                        .centers
                        .iter()
                        .all(|c| region.norm.dist(x, c) - region.radius <= 1e-8);
                let consistent = (region.objective(x) - res.value).abs() <= 1e-9 * (1.0 + res.value);
                let gap = gmin - res.value;
                worst = worst.max(gap.abs());
                if !feasible || !consistent || gap.abs() > 1e-4 || gap < -1e-9 {
                    bad.push(format!(
                        "region {attempts}: value {} grid {gmin} ({hits} grid hits) feasible {feasible}",
                        res.value
                    ));
                }
                tested += 1;
            }
            (ProjectionStatus::Empty, None) => empty += 1,
            (ProjectionStatus::Feasible, None) => {
                // too thin for the grid; feasibility is still checked
                let x = &res.point;
                if !region
                    .centers
                    .iter()
                    .all(|c| region.norm.dist(x, c) - region.radius <= 1e-8)
                {
                    bad.push(format!("region {attempts}: infeasible point on a thin region"));
                }
            }
            (status, g) => bad.push(format!(
                "region {attempts}: status {status:?} but grid minimum {:?}",
                g.map(|g| g.1)
            )),
        }
    }

    let mut ball_worst = 0.0f64;
    for k in 0..3000 {
        let dim = if k % 2 == 0 { 2 } else { 3 };
        let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = rng.gen_range(0.05..2.0);
        let linf: Vec<f64> = q.iter().zip(&c).map(|(a, b)| b + (a - b).clamp(-r, r)).collect();
        ball_worst = ball_worst.max(max_diff(&project_ball(&q, &c, r, Norm::Linf), &linf));
        let d = Norm::L2.dist(&q, &c);
        let l2: Vec<f64> = if d <= r {
            q.clone()
        } else {
            q.iter().zip(&c).map(|(a, b)| b + (a - b) * r / d).collect()
        };
        ball_worst = ball_worst.max(max_diff(&project_ball(&q, &c, r, Norm::L2), &l2));
        let got = project_ball(&q, &c, r, Norm::L1);
        ball_worst = ball_worst.max(max_diff(&got, &l1_projection_by_bisection(&q, &c, r)));
        if dim == 2 {
            ball_worst = ball_worst.max(max_diff(&got, &l1_projection_by_edges(&q, &c, r)));
        }
    }
    if ball_worst > 1e-12 {
        bad.push(format!("ball projection off by {ball_worst:e}"));
    }
    let pass = bad.is_empty() && tested >= 100;
    let mut detail = format!(
        "{tested} regions vs grid (worst gap {worst:.1e}), {empty} empty regions confirmed, ball closed forms worst {ball_worst:.1e}"
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(pass, detail)
}

fn bound_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bad = Vec::new();
    let mut regions = 0;
    let mut with_cap = 0;
    for k in 0..120 {
        let dim = if k < 100 { 2 } else { 3 };
        let steps = if dim == 2 { 300 } else { 60 };
        let mut region = random_region(&mut rng, dim);
        // the last center plays the scenario being tested
        region
            .centers
            .push((0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let m = region.centers.len();
        let s = m - 1;
        let safe: IndexSet = (0..m - 1).filter(|_| rng.gen_bool(0.6)).collect();
        let inst = region.instance(0.5);
        let f_cap = if rng.gen_bool(0.5) {
            match project(&inst, &safe) {
                Ok(r) if r.is_feasible() => {
                    with_cap += 1;
                    r.value + rng.gen_range(0.0..1.5)
                }
                _ => f64::INFINITY,
            }
        } else {
            f64::INFINITY
        };
        let grid_region = GridRegion {
            centers: safe.iter().map(|i| region.centers[i].clone()).collect(),
            f_cap,
            ..region
        };
        let scenario = inst.point(s).to_vec();
        let c = |x: &[f64]| grid_region.norm.dist(x, &scenario) - grid_region.radius;
        let (mut lo_c, mut hi_c, mut hits) = (f64::INFINITY, f64::NEG_INFINITY, 0);
        let r = grid_region.box_radius;
        grid_region.grid(&vec![-r; dim], &vec![r; dim], steps, |x| {
            hits += 1;
            let v = c(x);
            lo_c = lo_c.min(v);
            hi_c = hi_c.max(v);
        });
        regions += 1;
        match big_m(&inst, s, &safe, f_cap) {
            Ok(m) => {
                if hi_c > m.value + 1e-9 {
                    bad.push(format!("region {k}: grid max {hi_c} above big_m {}", m.value));
                }
            }
            Err(_) if hits == 0 => {}
            Err(e) => bad.push(format!("region {k}: big_m failed on a nonempty region: {e}")),
        }
        let lb = min_distance_lb(&inst, s, &safe, f_cap);
        if lo_c < lb - 1e-9 {
            bad.push(format!("region {k}: grid min {lo_c} below lower bound {lb}"));
        }
    }
    let mut detail = format!(
        "{regions} regions ({with_cap} with an objective cap), {} violations",
        bad.len()
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(bad.is_empty(), detail)
}

// ---------------------------------------------------------------------------

fn subsets_of(set: &IndexSet) -> impl Iterator<Item = IndexSet> + '_ {
    let ids = set.as_slice();
    (0u32..1 << ids.len()).map(move |mask| {
        ids.iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &s)| s)
            .collect()
    })
}

/// Induction cuts must hold at the satisfied set of every feasible point
/// considered; hull cuts (and the fixings) must leave at least one optimal
/// selection standing.
fn inequality_validity() -> Outcome {
    use ccp_core::presolve::InequalityKind;
    let mut bad = Vec::new();
    let (mut instances, mut cuts, mut hull_cuts, mut selections) = (0, 0, 0, 0);
    let cuts_only = Toggles {
        hull_induction: true,
        hull_cut: true,
        ..Toggles::NONE
    };
    for p in [2usize, 3] {
        for tau in [0.15, 0.3] {
            for random_mass in [false, true] {
                for seed in 0..8u64 {
                    let n = 6 + (seed % 5) as usize;
                    let inst = generate_instance(
                        p,
                        n,
                        tau,
                        90_000 + seed + 100 * p as u64 + if random_mass { 50 } else { 0 } + (tau * 1000.0) as u64,
                        GenOptions {
                            random_mass,
                            linf: seed % 2 == 1,
                        },
                    );
                    for (which, toggles) in [("all", Toggles::ALL), ("cuts only", cuts_only)] {
                        let label = format!("p={p} tau={tau} random_mass={random_mass} seed={seed} [{which}]");
                        let config = PresolveConfig {
                            separability_time_limit: None,
                            toggles,
                        };
                        let report = match run_pipeline(&inst, &config) {
                            Ok(r) => r,
                            Err(e) => {
                                bad.push(format!("{label}: {e}"));
                                continue;
                            }
                        };
                        instances += 1;
                        cuts += report.inequalities.len();
                        hull_cuts += report
                            .inequalities
                            .iter()
                            .filter(|c| c.kind == InequalityKind::HullCut)
                            .count();
                        let mut best = f64::INFINITY;
                        let mut optimal: Vec<(f64, IndexSet)> = Vec::new();
                        for set in subsets_of(&IndexSet::full(n)) {
                            if !mass_reaches(inst.scenarios.mass(&set), tau) {
                                continue;
                            }
                            let res = project(&inst, &set).expect("projection");
                            if !res.is_feasible() {
                                continue;
                            }
                            selections += 1;
                            let closure = inst.chance_check(&res.point).satisfied;
                            for cut in &report.inequalities {
                                if cut.kind == InequalityKind::HullInduction && !cut.holds(&closure) {
                                    bad.push(format!(
                                        "{label}: induction cut {:?} -> {:?} violated by {:?}",
                                        cut.vertex_set.one_based(),
                                        cut.target.map(|t| t + 1),
                                        closure.one_based()
                                    ));
                                }
                            }
                            best = best.min(res.value);
                            optimal.push((res.value, closure));
                        }
                        if best.is_infinite() {
                            continue;
                        }
                        let part = &report.partition;
                        let survives = optimal
                            .iter()
                            .filter(|(v, _)| rel_close(*v, best, 1e-7))
                            .any(|(_, closure)| {
                                subsets_of(closure).any(|z| {
                                    part.safe.is_subset(&z)
                                        && z.is_disjoint(&part.pruned)
                                        && mass_reaches(inst.scenarios.mass(&z), tau)
                                        && report.inequalities.iter().all(|c| c.holds(&z))
                                })
                            });
                        if !survives {
                            bad.push(format!("{label}: no optimal selection satisfies the fixings and cuts"));
                        }
                    }
                }
            }
        }
    }
    let mut detail = format!(
        "{instances} presolve runs, {selections} feasible selections, {cuts} cuts ({hull_cuts} hull cuts), {} violations",
        bad.len()
    );
    if let Some(first) = bad.first() {
        detail.push_str(&format!("; first: {first}"));
    }
    outcome(bad.is_empty(), detail)
}

fn performance_smoke() -> Outcome {
    let limit = Duration::from_secs(10);
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..10u64 {
        let inst = generate_instance(2, 100, 0.15, 500 + seed, GenOptions::default());
        let direct = solve(
            &inst,
            None,
            &SolverConfig {
                time_limit: Some(limit),
                node_limit: None,
            },
        );
        let start = Instant::now();
        let presolved = run_pipeline(&inst, &PresolveConfig::default()).and_then(|report| {
            let left = limit.saturating_sub(start.elapsed()).max(Duration::from_millis(1));
            solve(
                &inst,
                Some(&report),
                &SolverConfig {
                    time_limit: Some(left),
                    node_limit: None,
                },
            )
        });
        match (direct, presolved) {
            (Ok(d), Ok(p)) => {
                if p.nodes <= d.nodes {
                    wins += 1;
                }
                rows.push(format!("{}:{}/{}", seed, p.nodes, d.nodes));
            }
            (d, p) => rows.push(format!("{seed}:error({:?},{:?})", d.err(), p.err())),
        }
    }
    outcome(
        wins >= 7,
        format!(
            "presolve<=direct nodes on {wins}/10 (seed:presolve/direct {})",
            rows.join(" ")
        ),
    )
}
