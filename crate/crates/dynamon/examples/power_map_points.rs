//! Exact (pre)periodic point arithmetic for the power map z -> z^d on roots
//! of unity: orbit types, Mobius-counted period classes, and constructive
//! lcm witnesses.
//!
//! Run with: cargo run --example power_map_points

use dynamon::cyclo::{
    count_per_phi0, enumerate_per_phi0, phi0_type, roots_witness, RootOfUnityOrZero,
};

fn main() -> dynamon::Result<()> {
    let d = 2u64;
    println!("Points of exact period b under z -> z^{d} (roots of unity):");
    for b in 1..=8u64 {
        let count = count_per_phi0(d, b);
        let listed = enumerate_per_phi0(d, b, 1_000_000)?;
        assert_eq!(count as usize, listed.len());
        println!("  b={b}: {count} points (b | count: {})", b == 1 || count % b == 0);
    }

    let zeta = RootOfUnityOrZero::from_turn(1, 12);
    println!("\nOrbit type of a primitive 12th root under z -> z^2: {}", phi0_type(&zeta, 2));
    let eta = RootOfUnityOrZero::from_turn(1, 7);
    println!("Orbit type of a primitive 7th root under z -> z^2: {}", phi0_type(&eta, 2));

    // Constructive witness: given orders m, m', produce zeta of order m,
    // zeta' of order m', and a primitive lcm(m,m')-th root eta with
    // eta*zeta still primitive — the gluing step for building points of
    // prescribed period.
    for (d, m, mp) in [(3u64, 4u64, 8u64), (2, 9, 15), (5, 18, 12)] {
        let w = roots_witness(d, m, mp)?;
        println!(
            "\nd={d}, m={m}, m'={mp}: zeta={}, zeta'={}, eta={} of order {:?} = lcm, order divisibility: {}",
            w.zeta, w.zeta_prime, w.eta, w.eta.order(), w.order_divisibility
        );
    }
    Ok(())
}
