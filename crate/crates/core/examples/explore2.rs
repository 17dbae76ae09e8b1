use qg_core::bounds::random_dirichlet_tree;
use qg_core::fem;
use qg_core::graph::{make_family, suppress_dummies, FamilySpec, MetricGraph, VertexCondition};
use qg_core::perturb::hadamard_derivative;
use qg_core::spectral::{compute_spectrum, SolveOpts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn cross_graphs() -> Vec<MetricGraph> {
    let mut graphs: Vec<MetricGraph> = vec![
        make_family(&FamilySpec::Interval { length: 1.0, left: VertexCondition::Dirichlet, right: VertexCondition::Dirichlet }).unwrap(),
        make_family(&FamilySpec::EquilateralStar { legs: 3, length: 0.7, leaf: VertexCondition::Dirichlet, center: VertexCondition::kirchhoff() }).unwrap(),
        make_family(&FamilySpec::EquilateralStar { legs: 4, length: 0.5, leaf: VertexCondition::kirchhoff(), center: VertexCondition::kirchhoff() }).unwrap(),
        make_family(&FamilySpec::StarWithTail { legs: 3, leg_length: 0.4, tail_length: 0.9, tail: VertexCondition::Dirichlet }).unwrap(),
        make_family(&FamilySpec::BigStar { tail_length: 1.0, short_edges: 6, epsilon: 0.05, tip: VertexCondition::kirchhoff() }).unwrap(),
        make_family(&FamilySpec::BalloonBunch { loops: 2, loop_length: 0.3, tail_length: 1.0, tip: VertexCondition::Dirichlet }).unwrap(),
    ];
    for seed in 100..114u64 {
        graphs.push(random_dirichlet_tree(seed, 6, 0.2, 1.0));
    }
    graphs
}

fn main() {
    // Criterion 7 dry run.
    let t = Instant::now();
    let mut worst_rel = 0.0f64;
    let mut worst_var: f64 = f64::INFINITY;
    let mut worst_order: f64 = 2.0;
    for (i, g) in cross_graphs().iter().enumerate() {
        let sec = compute_spectrum(g, 8, &SolveOpts::default()).unwrap().flattened();
        let l = g.total_length();
        let h = (l / 470.0).min(g.min_edge_length() / 2.01);
        let rich = fem::richardson_spectrum(g, 8, h).unwrap();
        let raw = fem::fem_spectrum(g, 8, h).unwrap().flattened();
        for k in 0..8 {
            let denom = sec[k].abs().max(1.0);
            worst_rel = worst_rel.max((rich[k] - sec[k]).abs() / denom);
            worst_var = worst_var.min(raw[k] - sec[k]);
        }
        let rows = fem::convergence_study(g, 8, &[l / 100.0, l / 200.0, l / 400.0]).unwrap();
        for row in rows.iter().filter(|r| r.order.is_some() && r.lambda > 1e-9) {
            let p = row.order.unwrap();
            if (p - 2.0).abs() > (worst_order - 2.0).abs() { worst_order = p; }
        }
        if i == 0 { println!("graph0 rich[0] = {:.12}, sec[0] = {:.12}", rich[0], sec[0]); }
    }
    println!("criterion7: worst rel={worst_rel:.3e}, min (fem - sec)={worst_var:.3e}, worst order={worst_order:.3} in {:?}", t.elapsed());

    // Criterion 6 dry run.
    let t = Instant::now();
    let mut count = 0;
    let mut worst_fd = 0.0f64;
    let mut worst_euler = 0.0f64;
    let mut seed = 0u64;
    while count < 100 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(77));
        let g = random_dirichlet_tree(seed, 6, 0.3, 1.5);
        let k_idx = rng.gen_range(1..=6usize);
        let edge = rng.gen_range(0..g.num_edges());
        let s = match compute_spectrum(&g, k_idx + 1, &SolveOpts::default()) { Ok(s) => s, Err(_) => continue };
        if s.multiplicity_at(k_idx) != 1 { continue; }
        // enough gap for finite differences
        let lam = s.lambda(k_idx);
        let flat = s.flattened();
        let gap_ok = (k_idx < 2 || (lam - flat[k_idx - 2]).abs() > 1e-3 * lam)
            && ((flat[k_idx] - lam).abs() > 1e-3 * lam);
        if !gap_ok { continue; }
        let d = match hadamard_derivative(&g, k_idx, edge) { Ok(d) => d, Err(_) => continue };
        let h = 1e-5;
        let mut lens: Vec<f64> = g.edges().iter().map(|e| e.length).collect();
        lens[edge] += h;
        let gplus = g.with_lengths(&lens).unwrap();
        lens[edge] -= 2.0 * h;
        let gminus = g.with_lengths(&lens).unwrap();
        let lp = compute_spectrum(&gplus, k_idx, &SolveOpts::default()).unwrap().lambda(k_idx);
        let lm = compute_spectrum(&gminus, k_idx, &SolveOpts::default()).unwrap().lambda(k_idx);
        let fd = (lp - lm) / (2.0 * h);
        worst_fd = worst_fd.max((d - fd).abs() / d.abs().max(1e-12));
        // Euler identity
        let mut euler = 0.0;
        let mut ok = true;
        for e in 0..g.num_edges() {
            match hadamard_derivative(&g, k_idx, e) {
                Ok(de) => euler += g.edges()[e].length * de,
                Err(_) => { ok = false; break; }
            }
        }
        if ok {
            worst_euler = worst_euler.max((euler + 2.0 * lam).abs() / lam);
        }
        count += 1;
    }
    println!("criterion6: {count} triples (scanned {seed} seeds), worst fd rel={worst_fd:.3e}, worst euler rel={worst_euler:.3e} in {:?}", t.elapsed());
}
