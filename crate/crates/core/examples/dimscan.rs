use std::time::Instant;
use hecke3::projspace::{enumerate, Level};
use hecke3::relspace::{build_relations, solve_model_with_stats};

fn main() {
    let levels: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().unwrap()).collect();
    for n in levels {
        let t0 = Instant::now();
        let table = enumerate(Level::new(n).unwrap());
        let sys = build_relations(&table).unwrap();
        let (basis, stats) = solve_model_with_stats(&sys);
        println!("N={n} points={} dim={} {:?} {:.2?}", table.len(), basis.dim, stats, t0.elapsed());
    }
}
