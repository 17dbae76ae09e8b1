use qg_core::bounds::random_mixed_graph;
use qg_core::fem;
use qg_core::graph::graph_stats;
use qg_core::spectral::{compute_spectrum, SolveOpts};

fn main() {
    for seed in [7u64, 1, 23] {
        let g = random_mixed_graph(seed, 7, 2, 2, 0.1, 2.0);
        let stats = graph_stats(&g);
        println!("--- seed {seed}: m={} n={} beta={} D={} N={} L={:.4}", stats.num_edges, stats.num_vertices, stats.betti, stats.dirichlet_leaves, stats.neumann_leaves, stats.total_length);
        for e in g.edges() {
            println!("  edge {} {}->{} len {:.6}", e.id, e.from, e.to, e.length);
        }
        let s = compute_spectrum(&g, 18, &SolveOpts::uncertified()).unwrap();
        let sec: Vec<f64> = s.flattened();
        let h = g.total_length() / 1500.0;
        let femsp = fem::fem_spectrum(&g, 19, h).unwrap().flattened();
        println!("  secular: {:?}", sec.iter().map(|x| (x*1e4).round()/1e4).collect::<Vec<_>>());
        println!("  fem    : {:?}", femsp.iter().map(|x| (x*1e4).round()/1e4).collect::<Vec<_>>());
    }
}
