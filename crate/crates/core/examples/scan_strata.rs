//! Free boundary scan of the order-four example: order two points on both
//! axes accumulate at an isolated order four point.
//!
//! cargo run --release --example scan_strata

use obstacle_lab::poly::{ext_a, parse_poly};
use obstacle_lab::singular_set::{isolation_check, nondegeneracy_check, scan, ScanOptions};

fn main() -> obstacle_lab::Result<()> {
    let u = ext_a(&parse_poly("x1^2 x2^2", 2)?, 0.0)?;
    let table = scan(&u, 0.1, 0.0, None, &ScanOptions::default())?;
    print!("{}", table.to_csv());
    let counts = |tag: &str| table.entries.iter().filter(|e| e.stratum == tag).count();
    println!("S2^1: {}, S4^0: {}", counts("S2^1"), counts("S4^0"));
    let iso = isolation_check(&table, &[0.0, 0.0])?;
    println!("origin isolated among order >= 4: {}, order 2 points nearby: {}", iso.isolated, iso.lower_nearby);

    for phi in ["-0.5 x1^2 - 0.5 x2^2", "x1^2 - x2^2"] {
        let v = nondegeneracy_check(&parse_poly(phi, 2)?, 1.0, 1000, 0);
        println!("{phi}: sup Laplacian {:.3}, satisfied with c = 1: {}", v.sup_laplacian, v.satisfied);
    }
    Ok(())
}
