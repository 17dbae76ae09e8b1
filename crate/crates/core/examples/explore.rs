use qg_core::bounds::{self, random_dirichlet_tree, random_mixed_graph, SweepFamily};
use qg_core::graph::graph_stats;
use qg_core::spectral::{compute_spectrum, SolveOpts};
use std::time::Instant;

fn main() {
    let opts = SolveOpts::default();

    // Criterion 9 anchors.
    let rows = bounds::counterexample_sweep(
        SweepFamily::BigStar { tail: 1.0, epsilon: 0.01 },
        &[5, 10, 20, 40],
        &opts,
    )
    .unwrap();
    for r in &rows {
        println!("bigstar m={:>2}: l1={:.12} l2={:.12} ratio={:.12}", r.parameter, r.lambda_1, r.lambda_2, r.ratio);
    }
    let rows = bounds::counterexample_sweep(
        SweepFamily::Balloons { loop_length: 0.1, tail: 1.0 },
        &[2, 4, 8],
        &opts,
    )
    .unwrap();
    for r in &rows {
        println!("balloons b={:>2}: l1={:.12} l2={:.12} ratio={:.12}", r.parameter, r.lambda_1, r.lambda_2, r.ratio);
    }

    // Criterion 3 ensemble dry run.
    let t = Instant::now();
    let mut worst_ab = 0.0f64;
    let mut worst_doubled = 0.0f64;
    let mut worst_polya = f64::INFINITY;
    let mut worst_consec = 0.0f64;
    let mut fails = 0;
    for seed in 0..200u64 {
        let g = random_dirichlet_tree(seed, 8, 0.1, 2.0);
        let s = match compute_spectrum(&g, 8, &opts) {
            Ok(s) => s,
            Err(e) => { println!("seed {seed} FAILED: {e}"); fails += 1; continue; }
        };
        let stats = graph_stats(&g);
        worst_ab = worst_ab.max(s.lambda(2) / s.lambda(1));
        for k in 1..=4 { worst_doubled = worst_doubled.max(s.lambda(2*k)/s.lambda(k)); }
        for k in 1..=8usize {
            let bound = std::f64::consts::PI.powi(2) * (k*k) as f64 / stats.total_length.powi(2);
            worst_polya = worst_polya.min(s.lambda(k) / bound);
        }
        for k in 1..=7 { worst_consec = worst_consec.max(s.lambda(k+1)/s.lambda(k)); }
    }
    println!("ensemble(200): worst l2/l1={worst_ab:.9} worst 2k/k={worst_doubled:.9} min polya ratio={worst_polya:.9} worst consec={worst_consec:.9} fails={fails} in {:?}", t.elapsed());

    // Criterion 5 ensemble dry run through bound_report.
    let t = Instant::now();
    let mut all_ok = true;
    for seed in 0..100u64 {
        let g = random_mixed_graph(seed, 7, 2, 2, 0.1, 2.0);
        match bounds::bound_report(&g, 8, &opts) {
            Ok(r) => {
                if !r.all_pass {
                    all_ok = false;
                    for e in r.failures() {
                        println!("seed {seed} FAIL {} {} lhs={:?} rhs={:?}", e.bound, e.detail, e.lhs, e.rhs);
                    }
                }
            }
            Err(e) => { println!("seed {seed} report error: {e}"); all_ok = false; }
        }
    }
    println!("mixed ensemble(100) all_pass={all_ok} in {:?}", t.elapsed());

    // Criterion 4 dry run: tau ratios over (tree, leaf) pairs.
    let t = Instant::now();
    let mut worst_tau = 0.0f64;
    let mut near4_nonintervals = 0;
    let mut pairs = 0;
    for seed in 0..200u64 {
        let g = random_dirichlet_tree(seed, 8, 0.1, 2.0);
        let l1 = compute_spectrum(&g, 1, &opts).unwrap().lambda(1);
        for v in g.vertices() {
            if g.is_leaf(v.id) && v.condition.is_dirichlet() {
                let tg = g.with_condition(v.id, qg_core::graph::VertexCondition::kirchhoff()).unwrap();
                let t1 = compute_spectrum(&tg, 1, &opts).unwrap().lambda(1);
                let ratio = l1 / t1;
                pairs += 1;
                worst_tau = worst_tau.max(ratio);
                if (ratio - 4.0).abs() <= 1e-6 && g.num_edges() > 1 { near4_nonintervals += 1; }
            }
        }
    }
    println!("tau suite: {pairs} pairs, worst={worst_tau:.9}, near-4 non-intervals={near4_nonintervals} in {:?}", t.elapsed());
}
