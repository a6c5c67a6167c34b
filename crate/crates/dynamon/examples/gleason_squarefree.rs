//! Exact critical-orbit polynomials: squarefreeness certificates, mod-p
//! derivative structure, and the Misiurewicz difference polynomial.
//!
//! Run with: cargo run --example gleason_squarefree

use num_bigint::BigInt;
use num_rational::BigRational;

use dynamon::dynatomic::{gleason, gleason_mod_p, is_squarefree, misiurewicz_diff, root_multiplicity};

fn main() -> dynamon::Result<()> {
    println!("P_b(c) = f_c^b(0) for f_c(z) = z^d + c; all squarefree:\n");
    for d in 2..=4u64 {
        for b in 1..=5u64 {
            let p = gleason(d, b)?;
            let report = is_squarefree(&p)?;
            println!(
                "  d={d} b={b}: degree {:>3}, squarefree={} (certificate prime {:?})",
                p.degree().unwrap(),
                report.squarefree,
                report.certificate_prime
            );
        }
    }

    println!("\nDerivative of P_b is the constant 1 modulo every prime dividing d:");
    for (d, p) in [(2u64, 2u64), (6, 2), (6, 3)] {
        let rep = gleason_mod_p(d, 4, p)?;
        println!("  d={d}, b=4, p={p}: P_4' mod p = {:?} -> {}", rep.derivative_mod_p, rep.derivative_is_one);
    }

    // The parameter c = -2 is strictly preperiodic for z^2 + c
    // (0 -> -2 -> 2 -> 2): it is a simple root of f^3(0) - f^2(0).
    let diff = misiurewicz_diff(2, 3, 2)?;
    println!("\nf_c^3(0) - f_c^2(0) = {}", diff.to_text());
    let at = |x: i64| BigRational::from(BigInt::from(x));
    println!("  multiplicity at c = -2: {}", root_multiplicity(&diff, &at(-2))?);
    println!("  multiplicity at c =  0: {}", root_multiplicity(&diff, &at(0))?);
    Ok(())
}
