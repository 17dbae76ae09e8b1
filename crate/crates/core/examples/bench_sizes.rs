use qg_core::bounds::random_dirichlet_tree;
use qg_core::fem;
use qg_core::spectral::{compute_spectrum, SolveOpts};
use std::time::Instant;

fn main() {
    let g = random_dirichlet_tree(3, 8, 0.1, 2.0);
    println!("tree: {} edges, L = {:.3}", g.num_edges(), g.total_length());
    let t = Instant::now();
    let s = compute_spectrum(&g, 16, &SolveOpts::default()).unwrap();
    println!("secular count16 certified: {:?}, l1={:.6}", t.elapsed(), s.lambda(1));
    let t = Instant::now();
    let s2 = compute_spectrum(&g, 16, &SolveOpts::uncertified()).unwrap();
    println!("secular count16 uncertified: {:?}, l1={:.6}", t.elapsed(), s2.lambda(1));

    let t = Instant::now();
    let r = fem::richardson_spectrum(&g, 8, g.total_length() / 470.0).unwrap();
    println!("richardson N=470/940: {:?}, r1={:.8}", t.elapsed(), r[0]);
    let t = Instant::now();
    let rows = fem::convergence_study(&g, 8, &[g.total_length()/100.0, g.total_length()/200.0, g.total_length()/400.0]).unwrap();
    println!("order study 100/200/400: {:?}, rows={}", t.elapsed(), rows.len());
    for row in rows.iter().filter(|r| r.order.is_some()) {
        println!("  k={} order={:.3}", row.k, row.order.unwrap());
    }
}
