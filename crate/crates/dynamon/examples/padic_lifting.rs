//! p-adic lifting of periodic points of z^d + c when p | d: the inverse
//! limit contraction and Newton iteration agree digit for digit, and the
//! product family lifts coordinate-wise.
//!
//! Run with: cargo run --example padic_lifting

use dynamon::padic::{invlim_iterate, lift_agreement, product_family_lift, PAdicInt, PAdicMap};

fn main() -> dynamon::Result<()> {
    // Worked instance: p = 2, d = 2, c = 2. Starting from x = 0 the orbit
    // enters a fixed residue disk and the limit satisfies y = y^2 + 2.
    let p = 2u64;
    let prec = 16u32;
    let map = PAdicMap::single(p, 2, PAdicInt::from_u64(p, prec, 2));
    let x = PAdicInt::from_u64(p, prec, 0);

    let inv = invlim_iterate(&map, 0, &x, prec)?;
    println!("contraction limit: {} (residue type {})", inv.y, inv.residue_type);
    println!("valuation trace of |f^b(x_k) - x_k|: {:?}", inv.valuation_trace);
    println!("y mod 16 = {} (expected 6)", inv.y.residue() % 16u32);

    let agree = lift_agreement(&map, 0, &x, prec)?;
    println!(
        "\nNewton lift gives {}; agreement with contraction: {}",
        agree.newton, agree.agree
    );

    // Product family: independent parameters per coordinate; the tuple
    // period is the lcm of the coordinate periods.
    let map3 = PAdicMap::new(
        3,
        3,
        vec![
            PAdicInt::from_u64(3, 12, 3),
            PAdicInt::from_u64(3, 12, 6),
            PAdicInt::from_u64(3, 12, 9),
        ],
    )?;
    let xs = vec![
        PAdicInt::from_u64(3, 12, 1),
        PAdicInt::from_u64(3, 12, 2),
        PAdicInt::from_u64(3, 12, 0),
    ];
    let lifted = product_family_lift(&map3, &xs, 12)?;
    println!(
        "\nproduct family over Z_3: coordinate periods {:?}, tuple period {}",
        lifted.coordinate_periods, lifted.period
    );
    for (j, y) in lifted.point.iter().enumerate() {
        println!("  y[{j}] = {y}");
    }
    Ok(())
}
