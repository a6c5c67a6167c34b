//! Truncated p-adic integers and two lifting algorithms for periodic points
//! of `z ↦ z^d + c` when `p | d`: a monitored contraction iteration and
//! Newton lifting from a residue cycle. The two routes converge to the same
//! point in every residue disk, which the cross-check in [`lift_agreement`]
//! enforces.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::cyclo::PrePeriod;
use crate::{Error, Result};

/// Default number of p-adic digits.
pub const DEFAULT_PRECISION: u32 = 32;

/// A p-adic integer known modulo `p^N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicInt {
    p: u64,
    precision: u32,
    residue: BigUint,
}

impl PAdicInt {
    pub fn new(p: u64, precision: u32, residue: BigUint) -> Self {
        assert!(p >= 2 && precision >= 1);
        let modulus = BigUint::from(p).pow(precision);
        PAdicInt { p, precision, residue: residue % modulus }
    }

    pub fn from_u64(p: u64, precision: u32, value: u64) -> Self {
        Self::new(p, precision, BigUint::from(value))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn modulus(&self) -> BigUint {
        BigUint::from(self.p).pow(self.precision)
    }

    pub fn is_zero(&self) -> bool {
        self.residue.is_zero()
    }

    fn joined(&self, other: &Self) -> u32 {
        assert_eq!(self.p, other.p, "mixed primes");
        self.precision.min(other.precision)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.p, self.joined(other), &self.residue + &other.residue)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.joined(other);
        let m = BigUint::from(self.p).pow(n);
        Self::new(self.p, n, (&m + &self.residue % &m) - &other.residue % &m)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(self.p, self.joined(other), &self.residue * &other.residue)
    }

    pub fn pow(&self, e: u64) -> Self {
        let m = self.modulus();
        Self::new(self.p, self.precision, self.residue.modpow(&BigUint::from(e), &m))
    }

    /// Truncate (or formally extend) to `precision` digits. Extending keeps
    /// the known digits and pads with zeros, i.e. picks the canonical lift.
    pub fn with_precision(&self, precision: u32) -> Self {
        Self::new(self.p, precision, self.residue.clone())
    }

    /// Reduction to the residue field `F_p`.
    pub fn reduce(&self) -> u64 {
        (&self.residue % BigUint::from(self.p)).to_u64().unwrap()
    }

    /// p-adic valuation, capped at the precision (`precision` for a residue
    /// indistinguishable from zero).
    pub fn valuation(&self) -> u32 {
        if self.residue.is_zero() {
            return self.precision;
        }
        let p = BigUint::from(self.p);
        let mut v = 0;
        let mut r = self.residue.clone();
        while (&r % &p).is_zero() {
            r /= &p;
            v += 1;
        }
        v.min(self.precision)
    }

    /// Multiplicative inverse of a unit (valuation 0).
    pub fn inverse(&self) -> Result<Self> {
        if self.valuation() != 0 {
            return Err(Error::NonUnitDerivative);
        }
        let m = BigInt::from(self.modulus());
        let a = BigInt::from(self.residue.clone());
        let e = a.extended_gcd(&m);
        debug_assert!(e.gcd.is_one());
        let inv = ((e.x % &m) + &m) % &m;
        Ok(Self::new(self.p, self.precision, inv.to_biguint().unwrap()))
    }

    /// Parse the serialized form `p^N:residue`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("bad p-adic literal {s:?} (want p^N:residue)"));
        let (head, residue) = s.trim().split_once(':').ok_or_else(bad)?;
        let (p, n) = head.split_once('^').ok_or_else(bad)?;
        let p: u64 = p.parse().map_err(|_| bad())?;
        let n: u32 = n.parse().map_err(|_| bad())?;
        let residue: BigUint = residue.parse().map_err(|_| bad())?;
        if p < 2 || n == 0 {
            return Err(bad());
        }
        Ok(Self::new(p, n, residue))
    }
}

impl fmt::Display for PAdicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}:{}", self.p, self.precision, self.residue)
    }
}

impl Serialize for PAdicInt {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// The product map whose `j`-th coordinate is `z ↦ z^d + c_j`, with p-adic
/// parameters. A single coordinate is the plain family `z^d + c`.
#[derive(Debug, Clone)]
pub struct PAdicMap {
    pub p: u64,
    pub d: u64,
    pub params: Vec<PAdicInt>,
}

impl PAdicMap {
    pub fn new(p: u64, d: u64, params: Vec<PAdicInt>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::Precondition("a map needs at least one coordinate".into()));
        }
        for c in &params {
            if c.p() != p {
                return Err(Error::Precondition("parameter prime differs from map prime".into()));
            }
        }
        Ok(PAdicMap { p, d, params })
    }

    pub fn single(p: u64, d: u64, c: PAdicInt) -> Self {
        Self::new(p, d, vec![c]).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// The hypothesis of the contraction lemma: every first-order
    /// coefficient (`d·z^{d−1}`) reduces to zero, i.e. `p | d`.
    pub fn differential_vanishes(&self) -> bool {
        self.d % self.p == 0
    }

    /// One application of coordinate `j`.
    pub fn apply_coord(&self, j: usize, z: &PAdicInt) -> PAdicInt {
        z.pow(self.d).add(&self.params[j])
    }

    /// One application of coordinate `j` in the residue field.
    pub fn apply_coord_residue(&self, j: usize, z: u64) -> u64 {
        let p = self.p;
        let mut acc = 1u64;
        let mut base = z % p;
        let mut e = self.d;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        (acc + self.params[j].reduce()) % p
    }
}

/// Preperiod and period of the reduction of `x` under coordinate `j`.
pub fn residue_orbit(map: &PAdicMap, j: usize, x: u64) -> PrePeriod {
    let mut seen = vec![u64::MAX; map.p as usize];
    let mut z = x % map.p;
    let mut i = 0u64;
    loop {
        if seen[z as usize] != u64::MAX {
            let first = seen[z as usize];
            return PrePeriod::new(first, i - first);
        }
        seen[z as usize] = i;
        z = map.apply_coord_residue(j, z);
        i += 1;
    }
}

/// Result of a contraction-iteration lift.
#[derive(Debug, Clone, Serialize)]
pub struct InvlimResult {
    pub y: PAdicInt,
    /// Preperiod and period of the starting point's reduction.
    pub residue_type: PrePeriod,
    /// Valuations of successive differences, strictly increasing.
    pub valuation_trace: Vec<u32>,
    pub iterations: usize,
}

/// Contraction iteration: push `x` forward `a` steps, then iterate the
/// `b`-fold map until the value is fixed mod `p^N`. The valuation of each
/// successive difference must strictly increase (the contraction the lemma's
/// proof provides); any violation aborts loudly.
pub fn invlim_iterate(map: &PAdicMap, j: usize, x: &PAdicInt, n: u32) -> Result<InvlimResult> {
    if !map.differential_vanishes() {
        return Err(Error::Precondition(format!(
            "differential does not vanish on the special fibre: p = {} does not divide d = {}",
            map.p, map.d
        )));
    }
    let residue_type = residue_orbit(map, j, x.reduce());
    let (a, b) = (residue_type.preperiod, residue_type.period);
    let mut z = x.with_precision(n);
    for _ in 0..a {
        z = map.apply_coord(j, &z);
    }
    let step = |z: &PAdicInt| -> PAdicInt {
        let mut w = z.clone();
        for _ in 0..b {
            w = map.apply_coord(j, &w);
        }
        w
    };
    let mut trace = Vec::new();
    let mut last_val: Option<u32> = None;
    let max_iter = (n as usize + 2) * b as usize + 4;
    for it in 0..max_iter {
        let next = step(&z);
        let diff = next.sub(&z);
        if diff.is_zero() {
            // Fixed mod p^N.
            debug_assert_eq!(residue_orbit(map, j, next.reduce()).period, b);
            return Ok(InvlimResult { y: next, residue_type, valuation_trace: trace, iterations: it });
        }
        let v = diff.valuation();
        if let Some(lv) = last_val {
            if v <= lv {
                return Err(Error::ContractionViolated { step: it });
            }
        }
        last_val = Some(v);
        trace.push(v);
        z = next;
    }
    Err(Error::PrecisionExhausted(n))
}

/// Newton lifting of a residue periodic point: solve `map^b(z) = z` to
/// precision `N` starting from any lift of `residue_point`. With `p | d` the
/// derivative of `map^b − id` reduces to `−1`, a unit, so the iteration is
/// quadratically convergent.
pub fn newton_lift(map: &PAdicMap, j: usize, residue_point: u64, b: u64, n: u32) -> Result<PAdicInt> {
    if b == 0 {
        return Err(Error::Precondition("period must be positive".into()));
    }
    // The residue point must close up in exactly b steps.
    let mut r = residue_point % map.p;
    for _ in 0..b {
        r = map.apply_coord_residue(j, r);
    }
    if r != residue_point % map.p {
        return Err(Error::Precondition(format!(
            "residue {residue_point} is not periodic of period {b} mod {}",
            map.p
        )));
    }
    let mut z = PAdicInt::from_u64(map.p, n, residue_point);
    for _ in 0..64 {
        // F(z) = map^b(z) - z and F'(z) = prod d·w^{d-1} - 1 over the orbit.
        let mut w = z.clone();
        let mut deriv = PAdicInt::from_u64(map.p, n, 1);
        let d_el = PAdicInt::from_u64(map.p, n, map.d);
        for _ in 0..b {
            deriv = deriv.mul(&d_el).mul(&w.pow(map.d - 1));
            w = map.apply_coord(j, &w);
        }
        let f = w.sub(&z);
        let fp = deriv.sub(&PAdicInt::from_u64(map.p, n, 1));
        if fp.valuation() != 0 {
            return Err(Error::NonUnitDerivative);
        }
        if f.is_zero() {
            if z.reduce() != residue_point % map.p {
                return Err(Error::Precondition("Newton iterate left the residue disk".into()));
            }
            return Ok(z);
        }
        z = z.sub(&f.mul(&fp.inverse()?));
    }
    Err(Error::PrecisionExhausted(n))
}

/// Cross-oracle report: both lifting routes from the same start.
#[derive(Debug, Clone, Serialize)]
pub struct LiftAgreement {
    pub invlim: PAdicInt,
    pub newton: PAdicInt,
    pub residue_type: PrePeriod,
    pub agree: bool,
}

/// Run the contraction iteration and Newton lifting (seeded with the
/// eventual residue cycle of `x`) and require identical answers mod `p^N`.
/// Disagreement is a bug detector, never a mathematical outcome: the limit
/// in each residue disk is unique.
pub fn lift_agreement(map: &PAdicMap, j: usize, x: &PAdicInt, n: u32) -> Result<LiftAgreement> {
    let inv = invlim_iterate(map, j, x, n)?;
    let ty = inv.residue_type;
    // Seed Newton with the residue the orbit eventually cycles through.
    let mut r = x.reduce();
    for _ in 0..ty.preperiod {
        r = map.apply_coord_residue(j, r);
    }
    let newton = newton_lift(map, j, r, ty.period, n)?;
    let agree = inv.y == newton;
    if !agree {
        return Err(Error::OracleDisagreement(format!(
            "contraction limit {} vs Newton limit {}",
            inv.y, newton
        )));
    }
    Ok(LiftAgreement { invlim: inv.y, newton, residue_type: ty, agree })
}

/// Result of a coordinate-wise product-family lift.
#[derive(Debug, Clone, Serialize)]
pub struct ProductLift {
    pub point: Vec<PAdicInt>,
    pub coordinate_periods: Vec<u64>,
    /// lcm of the coordinate periods: the period of the tuple.
    pub period: u64,
}

/// Lift a tuple coordinate-wise under the product of the maps `z^d + c_j`.
pub fn product_family_lift(map: &PAdicMap, xs: &[PAdicInt], n: u32) -> Result<ProductLift> {
    if xs.len() != map.dim() {
        return Err(Error::Precondition(format!(
            "point has {} coordinates, map has {}",
            xs.len(),
            map.dim()
        )));
    }
    let mut point = Vec::with_capacity(xs.len());
    let mut periods = Vec::with_capacity(xs.len());
    let mut period = 1u64;
    for (j, x) in xs.iter().enumerate() {
        let r = invlim_iterate(map, j, x, n)
            .map_err(|e| Error::Coordinate { index: j, source: Box::new(e) })?;
        period = period.lcm(&r.residue_type.period);
        periods.push(r.residue_type.period);
        point.push(r.y);
    }
    Ok(ProductLift { point, coordinate_periods: periods, period })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map1(p: u64, d: u64, c: u64, n: u32) -> PAdicMap {
        PAdicMap::single(p, d, PAdicInt::from_u64(p, n, c))
    }

    /// Brute-force periodic points of z^d + c of period dividing b mod p^n,
    /// restricted to a residue class mod p.
    fn brute_cycle_points(p: u64, d: u64, c: u64, b: u64, n: u32, residue: u64) -> Vec<u64> {
        let m = p.pow(n);
        let mut out = vec![];
        for z in 0..m {
            if z % p != residue {
                continue;
            }
            let mut w = z;
            for _ in 0..b {
                let mut acc = 1u64;
                let mut base = w % m;
                let mut e = d;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = (acc as u128 * base as u128 % m as u128) as u64;
                    }
                    base = (base as u128 * base as u128 % m as u128) as u64;
                    e >>= 1;
                }
                w = (acc + c) % m;
            }
            if w == z {
                out.push(z);
            }
        }
        out
    }

    #[test]
    fn residue_orbit_examples() {
        assert_eq!(residue_orbit(&map1(2, 2, 2, 4), 0, 0), PrePeriod::new(0, 1));
        assert_eq!(residue_orbit(&map1(2, 2, 3, 4), 0, 0), PrePeriod::new(0, 2));
        assert_eq!(residue_orbit(&map1(3, 3, 3, 4), 0, 1), PrePeriod::new(0, 1));
    }

    #[test]
    fn invlim_worked_instance() {
        // p=2, d=2, c=2, x=0, N=4: limit is 6 mod 16.
        let map = map1(2, 2, 2, 4);
        let r = invlim_iterate(&map, 0, &PAdicInt::from_u64(2, 4, 0), 4).unwrap();
        assert_eq!(r.y.residue(), &BigUint::from(6u32));
        // Independent brute-force oracle: the even fixed residues mod 16.
        let oracle = brute_cycle_points(2, 2, 2, 1, 4, 0);
        assert_eq!(oracle, vec![6]);
    }

    #[test]
    fn invlim_already_fixed() {
        let map = map1(2, 2, 0, 8);
        let r = invlim_iterate(&map, 0, &PAdicInt::from_u64(2, 8, 0), 8).unwrap();
        assert!(r.y.is_zero());
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn invlim_p3_instance() {
        let map = map1(3, 3, 3, 5);
        let r = invlim_iterate(&map, 0, &PAdicInt::from_u64(3, 5, 0), 5).unwrap();
        assert_eq!(r.y.reduce(), 0);
        let oracle = brute_cycle_points(3, 3, 3, 1, 5, 0);
        assert_eq!(oracle.len(), 1);
        assert_eq!(r.y.residue(), &BigUint::from(oracle[0]));
    }

    #[test]
    fn invlim_requires_vanishing_differential() {
        let map = map1(3, 2, 3, 4);
        assert!(matches!(
            invlim_iterate(&map, 0, &PAdicInt::from_u64(3, 4, 0), 4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn contraction_trace_is_strict() {
        let map = map1(2, 2, 3, 24);
        let r = invlim_iterate(&map, 0, &PAdicInt::from_u64(2, 24, 0), 24).unwrap();
        for w in r.valuation_trace.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn newton_worked_instances() {
        let map = map1(2, 2, 2, 4);
        let y = newton_lift(&map, 0, 0, 1, 4).unwrap();
        assert_eq!(y.residue(), &BigUint::from(6u32));

        // p=2, d=2, c=3: period-2 cycle through the even residue.
        let map = map1(2, 2, 3, 3);
        let y = newton_lift(&map, 0, 0, 2, 3).unwrap();
        let oracle = brute_cycle_points(2, 2, 3, 2, 3, 0);
        assert!(oracle.contains(&(y.residue() % BigUint::from(8u32)).to_u64().unwrap()));

        let map = map1(2, 2, 0, 6);
        let y = newton_lift(&map, 0, 1, 1, 6).unwrap();
        assert_eq!(y.residue(), &BigUint::from(1u32));
    }

    #[test]
    fn newton_rejects_nonperiodic_residue() {
        let map = map1(2, 2, 3, 4);
        // 0 -> 1 -> 0 mod 2: period 2, not 1.
        assert!(matches!(newton_lift(&map, 0, 0, 1, 4), Err(Error::Precondition(_))));
    }

    #[test]
    fn agreement_examples() {
        for (p, d, c) in [(2u64, 2u64, 2u64), (2, 2, 3), (5, 10, 5)] {
            let n = if p == 5 { 4 } else { 8 };
            let map = map1(p, d, c, n);
            let rep = lift_agreement(&map, 0, &PAdicInt::from_u64(p, n, 0), n).unwrap();
            assert!(rep.agree, "p={p} d={d} c={c}");
        }
    }

    #[test]
    fn agreement_randomised() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut done = 0;
        while done < 200 {
            let p = *[2u64, 3, 5].iter().filter(|&&p| p <= 10).nth(rng.gen_range(0..3)).unwrap();
            let mults: Vec<u64> = (1..=10 / p).collect();
            let d = p * mults[rng.gen_range(0..mults.len())];
            if d < 2 {
                continue;
            }
            let n = rng.gen_range(4..=32u32);
            let c = rng.gen_range(0..p.pow(n.min(9)));
            let x = rng.gen_range(0..p.pow(3));
            let map = map1(p, d, c, n);
            let rep = lift_agreement(&map, 0, &PAdicInt::from_u64(p, n, x), n).unwrap();
            assert!(rep.agree);
            done += 1;
        }
    }

    #[test]
    fn precision_monotonicity() {
        let map_lo = map1(2, 2, 3, 8);
        let map_hi = map1(2, 2, 3, 20);
        let lo = invlim_iterate(&map_lo, 0, &PAdicInt::from_u64(2, 8, 0), 8).unwrap();
        let hi = invlim_iterate(&map_hi, 0, &PAdicInt::from_u64(2, 20, 0), 20).unwrap();
        assert_eq!(hi.y.with_precision(8), lo.y);
    }

    #[test]
    fn product_family_worked_instance() {
        // n=2, d=2, p=2, c=(2,3), x=(0,0), N=4.
        let n = 4;
        let map = PAdicMap::new(
            2,
            2,
            vec![PAdicInt::from_u64(2, n, 2), PAdicInt::from_u64(2, n, 3)],
        )
        .unwrap();
        let xs = vec![PAdicInt::from_u64(2, n, 0), PAdicInt::from_u64(2, n, 0)];
        let lift = product_family_lift(&map, &xs, n).unwrap();
        assert_eq!(lift.point[0].residue(), &BigUint::from(6u32));
        assert_eq!(lift.coordinate_periods, vec![1, 2]);
        assert_eq!(lift.period, 2);

        // Identity-style instance.
        let map = PAdicMap::new(2, 2, vec![PAdicInt::from_u64(2, 4, 0); 3]).unwrap();
        let xs = vec![PAdicInt::from_u64(2, 4, 1); 3];
        let lift = product_family_lift(&map, &xs, 4).unwrap();
        assert!(lift.point.iter().all(|y| y.residue() == &BigUint::from(1u32)));

        // n=2, d=4, p=2, c=(4,2), N=3, verified against brute force.
        let map = PAdicMap::new(
            2,
            4,
            vec![PAdicInt::from_u64(2, 3, 4), PAdicInt::from_u64(2, 3, 2)],
        )
        .unwrap();
        let xs = vec![PAdicInt::from_u64(2, 3, 0), PAdicInt::from_u64(2, 3, 0)];
        let lift = product_family_lift(&map, &xs, 3).unwrap();
        for (j, (y, c)) in lift.point.iter().zip([4u64, 2]).enumerate() {
            let b = lift.coordinate_periods[j];
            let oracle = brute_cycle_points(2, 4, c, b, 3, y.reduce());
            let yv = (y.residue() % BigUint::from(8u32)).to_u64().unwrap();
            assert!(oracle.contains(&yv), "coordinate {j}");
        }
    }

    #[test]
    fn serialization_round_trip() {
        let x = PAdicInt::from_u64(2, 6, 38);
        assert_eq!(x.to_string(), "2^6:38");
        assert_eq!(PAdicInt::parse("2^6:38").unwrap(), x);
        assert!(PAdicInt::parse("junk").is_err());
    }

    #[test]
    fn minimal_period_at_full_precision() {
        // For c=3 mod 8 the lifted cycle has exact period 2, not 1.
        let map = map1(2, 2, 3, 8);
        let r = invlim_iterate(&map, 0, &PAdicInt::from_u64(2, 8, 0), 8).unwrap();
        let once = map.apply_coord(0, &r.y);
        assert_ne!(once, r.y);
        let twice = map.apply_coord(0, &once);
        assert_eq!(twice, r.y);
    }
}
