//! Finite-field dynamics: period growth of z^d + c along curves of
//! parameters, the multiplicative-order census of the power map, and
//! Frobenius orbit structure on fixed-point fibers.
//!
//! Run with: cargo run --example finite_field_growth

use dynamon::ffdyn::{curve_period_survey, fixed_curve_fibers, power_census, Curve};

fn main() -> dynamon::Result<()> {
    // Orders of d = 2 modulo m for m coprime to p = 2: the periods of the
    // power map on primitive m-th roots of unity. Distinct periods keep
    // appearing as m grows.
    let census = power_census(2, 2, 10_000);
    println!(
        "power map z^2 on roots of unity of order <= 10^4: {} distinct periods, max {}",
        census.distinct_periods, census.max_period
    );
    println!(
        "distinct-period counts at checkpoints 10^2/10^3/10^4: {:?} (strictly increasing: {})",
        census.checkpoints, census.strictly_increasing
    );

    // The diagonal curve (x, c) = (t, t): as the field F_{2^k} grows, new
    // record periods keep appearing.
    let survey = curve_period_survey(2, 2, &Curve::Diagonal, 12)?;
    println!("\nz^2 + t at x = t over F_2^k:");
    print!("{}", survey.to_csv());
    println!("new record periods at {} values of k (pass: {})", survey.records, survey.pass);

    // Fibers of the fixed-point curve c = x - x^2 over F_16, with their
    // relative Frobenius orbit counts.
    let fibers = fixed_curve_fibers(2, 2, 4)?;
    println!(
        "\nfixed-point curve over F_16: {} graph points, {} nonempty fibers",
        fibers.graph_points, fibers.nonempty_fibers
    );
    for row in &fibers.rows {
        println!(
            "  deg(c)={}: {} fibers, {} full, {} carried by a single Frobenius orbit",
            row.deg_c, row.fibers, row.full_fibers, row.single_orbit
        );
    }
    Ok(())
}
