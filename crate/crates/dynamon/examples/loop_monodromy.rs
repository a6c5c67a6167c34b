//! Numerical monodromy of f_c^b(z) - z: track the periodic points around
//! explicit parameter loops, extract permutations, and compare the
//! generated group against the exact order formula.
//!
//! Run with: cargo run --release --example loop_monodromy

use num_complex::Complex64;

use dynamon::monodromy::{
    expected_morton_order, morton_family, solve_roots, track_loop, verify_morton, LoopPath,
};

fn main() -> dynamon::Result<()> {
    // A single hand-picked loop: around c = 1/4 the two fixed points of
    // z^2 + c collide, and a loop encircling it swaps them.
    let family = morton_family(2, 1);
    let base = solve_roots(&family(Complex64::new(0.35, 0.0)), 1)?;
    println!("fixed points of z^2 + c at c = 0.35: {:?}", base.roots);
    let path = LoopPath::circle(Complex64::new(0.25, 0.0), 0.1, 96);
    let perm = track_loop(&family, &path, &base)?;
    println!("loop around c = 1/4 induces: {:?} (cycles {:?})\n", perm.images, perm.cycles());

    // Random-loop surveys: the full group matches
    // prod_{e | b} e^(r_e) * r_e! where e*r_e counts exact-period-e points.
    for (d, b, loops) in [(2u64, 2u64, 20usize), (2, 3, 40), (3, 2, 40)] {
        let report = verify_morton(d, b, loops, 7)?;
        println!(
            "d={d} b={b}: computed order {} (expected {}), {} loops kept, {} discarded",
            report.computed_order,
            expected_morton_order(d, b),
            report.loops_used,
            report.loops_discarded
        );
        println!(
            "  equivariant: {}, transitive on period classes: {}, dynamical blocks preserved: {}",
            report.equivariant, report.transitive_on_period_classes, report.blocks_preserved
        );
    }
    Ok(())
}
