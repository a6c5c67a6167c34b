//! Local monodromy of the perturbed family z(z-eps)^(d-1) + c: near the
//! parameter where the critical value is periodic, a small loop fixes the
//! periodic point and cyclically permutes the d-1 extra preimages at the
//! split critical point.
//!
//! Run with: cargo run --example perturbed_family_cycle

use num_complex::Complex64;

use dynamon::monodromy::prep1_cycle_check;

fn main() -> dynamon::Result<()> {
    for (d, b) in [(2u64, 1u64), (3, 1), (3, 2)] {
        let report = prep1_cycle_check(d, b, Complex64::new(0.01, 0.0), 7)?;
        println!("d={d}, b={b}, eps=0.01:");
        println!(
            "  critical parameter c* = {:?}, branch parameter = {:?}",
            report.c_star, report.c_branch
        );
        println!(
            "  periodic point fixed: {}, cluster cycle lengths: {:?} (want one {}-cycle)",
            report.periodic_fixed,
            report.cluster_cycles,
            d - 1
        );
        println!("  pass: {}\n", report.pass);
    }
    Ok(())
}
