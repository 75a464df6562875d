//! Level-128 eigensystem report with timings.

use std::time::Instant;

use hecke3::heckeops::{eigenreport, global_decomposition, report_operators, HeckeOptions};
use hecke3::relspace::model_for_level;
use hecke3::Level;

fn main() -> hecke3::Result<()> {
    let t = Instant::now();
    let level = Level::new(128)?;
    for (label, a) in report_operators() {
        let d = global_decomposition(&a, level)?;
        println!("{label}: {} cosets, verified {} ({:.2?})", d.len(), d.verified, t.elapsed());
    }
    let (table, basis) = model_for_level(128)?;
    println!("dim {} ({:.2?})", basis.dim, t.elapsed());
    let report = eigenreport(&basis, &table, &HeckeOptions::default())?;
    println!("anchor {} -> {}", report.anchor.0, report.anchor.1);
    for line in report.to_lines() {
        println!("{:>18}  {:>4} cosets  {}", line.label, line.cosets, line.eigenvalue);
    }
    println!("total {:.2?}", t.elapsed());
    Ok(())
}
