use qg_core::bounds::{self, random_dirichlet_tree};
use qg_core::closed_form;
use qg_core::graph::{make_family, suppress_dummies, FamilySpec, MetricGraph, Topology, VertexCondition};
use qg_core::perturb::{optimize_ratio, OptimizeMode, OptimizeOpts, RatioObjective};
use qg_core::spectral::{compute_spectrum, SolveOpts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let opts = SolveOpts::default();

    // Criterion 4 refinement: near-4 instances must be metric intervals.
    let t = Instant::now();
    let mut bad = 0;
    for seed in 0..200u64 {
        let g = random_dirichlet_tree(seed, 8, 0.1, 2.0);
        let l1 = compute_spectrum(&g, 1, &opts).unwrap().lambda(1);
        for v in g.vertices() {
            if g.is_leaf(v.id) && v.condition.is_dirichlet() {
                let tg = g.with_condition(v.id, VertexCondition::kirchhoff()).unwrap();
                let t1 = compute_spectrum(&tg, 1, &opts).unwrap().lambda(1);
                if ((l1 / t1) - 4.0).abs() <= 1e-6 && suppress_dummies(&g).num_edges() != 1 {
                    bad += 1;
                    println!("BAD near-4 non-path: seed {seed}");
                }
            }
        }
    }
    println!("criterion4 path check: {bad} violations in {:?}", t.elapsed());

    // Criterion 8: 50 toggle tests.
    let t = Instant::now();
    let mut all = true;
    for seed in 0..50u64 {
        let g = random_dirichlet_tree(seed.wrapping_add(500), 7, 0.2, 1.8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let verts: Vec<usize> = g.vertices().iter().map(|v| v.id).collect();
        let v = verts[rng.gen_range(0..verts.len())];
        let r = bounds::interlacing_check(&g, &[v], 8, &opts).unwrap();
        if !r.pass { all = false; println!("interlacing FAIL seed {seed} vertex {v}"); }
    }
    println!("criterion8: all pass = {all} in {:?}", t.elapsed());

    // Criterion 10: optimizer endpoints, 10 seeds x 3 topologies.
    let t = Instant::now();
    let mut fails = 0;
    for legs in [3usize, 4, 5] {
        let star = make_family(&FamilySpec::EquilateralStar {
            legs, length: 1.0,
            leaf: VertexCondition::Dirichlet,
            center: VertexCondition::kirchhoff(),
        }).unwrap();
        let topo = Topology::of(&star);
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + legs as u64);
            let lengths: Vec<f64> = (0..legs).map(|_| -(rng.gen::<f64>()).ln()).collect();
            let trace = optimize_ratio(&topo, &lengths, OptimizeMode::Maximize,
                RatioObjective::VertexSwap { leaf: 1 },
                &OptimizeOpts { seed, ..Default::default() });
            match trace {
                Ok(tr) => {
                    if !(tr.converged && tr.final_edges == 1 && (tr.final_ratio - 4.0).abs() < 1e-3) {
                        fails += 1;
                        println!("optimizer fail legs={legs} seed={seed}: converged={} edges={} ratio={} restarts={} iters={}", tr.converged, tr.final_edges, tr.final_ratio, tr.restarts, tr.iterates.len());
                    }
                }
                Err(e) => { fails += 1; println!("optimizer error legs={legs} seed={seed}: {e}"); }
            }
        }
    }
    println!("criterion10: {fails} fails in {:?}", t.elapsed());

    // Criterion 11: robin_star_k vs general solver (50 draws).
    let t = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 9000);
        let n = rng.gen_range(2..=5usize);
        let l = rng.gen_range(0.3..1.5);
        let r = rng.gen_range(0.3..1.5);
        let alpha = rng.gen_range(0.0..10.0);
        let k = closed_form::robin_star_k(n, l, r, alpha).unwrap();
        // Assemble the same star: n Dirichlet legs + Robin tail tip.
        let mut conditions = vec![VertexCondition::kirchhoff()];
        conditions.extend(std::iter::repeat(VertexCondition::Dirichlet).take(n));
        conditions.push(VertexCondition::Delta(alpha));
        let mut edges: Vec<(usize, usize, f64)> = (0..n).map(|i| (0, i + 1, l)).collect();
        edges.push((0, n + 1, r));
        let g = MetricGraph::new(conditions, edges).unwrap();
        let lam = compute_spectrum(&g, 1, &opts).unwrap().lambda(1);
        worst = worst.max((k * k - lam).abs() / lam.max(1.0));
    }
    println!("criterion11 star consistency: worst rel = {worst:.3e} in {:?}", t.elapsed());

    // Lemma sweep over 100 admissible points.
    let (lo, hi) = closed_form::admissible_kd_range(2, 1.0, 0.7).unwrap();
    let mut min_gap = f64::INFINITY;
    for i in 1..=100 {
        let kd = lo + (hi - lo) * i as f64 / 101.0;
        let c = closed_form::lemma_comparison_at(2, 1.0, 0.7, kd).unwrap();
        min_gap = min_gap.min(c.gap);
        if c.gap <= 0.0 { println!("lemma sweep NONPOSITIVE at kd={kd}: {}", c.gap); }
    }
    println!("lemma sweep min gap = {min_gap:.6e} over [{lo:.4}, {hi:.4}]");
}
