//! Exact integer polynomial engine for the families `φ_c(z) = z^d + c` and
//! `φ_{c,ε}(z) = z(z−ε)^{d−1} + c`: iterated maps, the critical-orbit
//! polynomials `P_b(c) = φ_c^b(0)`, preperiodic difference polynomials,
//! dynatomic factors, squarefreeness and root multiplicities.
//!
//! Everything here is exact: coefficients are arbitrary-precision integers
//! and every division carries a zero-remainder self-check. Squarefreeness of
//! large polynomials is still exact — a single good prime certifies a
//! trivial gcd (the gcd over Q divides the gcd mod p whenever p does not
//! kill the leading coefficient).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Shared Display shim for the text formats.
macro_rules! fmt_via_text {
    () => {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "{}", self.to_text())
        }
    };
}

/// Default cap on the degree of any polynomial this module will build.
pub const DEFAULT_DEGREE_BUDGET: u64 = 5000;

fn check_budget(required: u128, budget: u64) -> Result<()> {
    if required > budget as u128 {
        return Err(Error::DegreeBudget { required, budget });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Univariate polynomials over Z.
// ---------------------------------------------------------------------------

/// Dense univariate polynomial with integer coefficients, ascending degree.
/// The zero polynomial is the empty coefficient list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPoly {
    coeffs: Vec<BigInt>,
}

impl ExactPoly {
    pub fn zero() -> Self {
        ExactPoly { coeffs: vec![] }
    }

    pub fn from_coeffs(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        ExactPoly { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// The monomial `a·x^k`.
    pub fn monomial(a: BigInt, k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = a;
        Self::from_coeffs(coeffs)
    }

    pub fn x() -> Self {
        Self::monomial(BigInt::one(), 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) + other.coeff(i));
        }
        Self::from_coeffs(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i) - other.coeff(i));
        }
        Self::from_coeffs(out)
    }

    pub fn neg(&self) -> Self {
        ExactPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::from_coeffs(out)
    }

    pub fn mul_scalar(&self, a: &BigInt) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|c| c * a).collect())
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut result = Self::from_i64(&[1]);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigInt::from(i))
            .collect();
        Self::from_coeffs(coeffs)
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval_rational(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + BigRational::from_integer(c.clone());
        }
        acc
    }

    /// Content: gcd of the coefficients (non-negative).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = gcd_int(&g, c);
        }
        g
    }

    /// Divide out the content; the zero polynomial stays zero.
    pub fn primitive_part(&self) -> Self {
        let g = self.content();
        if g.is_zero() || g.is_one() {
            return self.clone();
        }
        ExactPoly { coeffs: self.coeffs.iter().map(|c| c / &g).collect() }
    }

    /// Exact division; errors with [`Error::InexactDivision`] if the
    /// remainder is non-zero or a coefficient division is inexact.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self> {
        if divisor.is_zero() {
            return Err(Error::ZeroPolynomial("division"));
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let dd = divisor.degree().unwrap();
        let nd = match self.degree() {
            Some(n) if n >= dd => n,
            _ => return Err(Error::InexactDivision),
        };
        let lead = divisor.leading().unwrap().clone();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigInt::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let top = rem[k + dd].clone();
            if top.is_zero() {
                continue;
            }
            let (q, r) = num_integer::Integer::div_rem(&top, &lead);
            if !r.is_zero() {
                return Err(Error::InexactDivision);
            }
            for (i, c) in divisor.coeffs.iter().enumerate() {
                rem[k + i] -= &q * c;
            }
            quot[k] = q;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return Err(Error::InexactDivision);
        }
        Ok(Self::from_coeffs(quot))
    }

    /// Sparse text form: space-separated `deg:coeff` pairs, ascending degree,
    /// zero coefficients omitted; the zero polynomial is `"zero"`.
    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "zero".into();
        }
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("{i}:{c}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" || s.is_empty() {
            return Ok(Self::zero());
        }
        let mut coeffs: Vec<BigInt> = vec![];
        for tok in s.split_whitespace() {
            let (deg, c) = tok
                .split_once(':')
                .ok_or_else(|| Error::Usage(format!("bad polynomial token {tok:?} (want deg:coeff)")))?;
            let deg: usize = deg
                .parse()
                .map_err(|_| Error::Usage(format!("bad degree in token {tok:?}")))?;
            let c: BigInt = c
                .parse()
                .map_err(|_| Error::Usage(format!("bad coefficient in token {tok:?}")))?;
            if coeffs.len() <= deg {
                coeffs.resize(deg + 1, BigInt::zero());
            }
            coeffs[deg] = c;
        }
        Ok(Self::from_coeffs(coeffs))
    }
}

impl fmt::Display for ExactPoly {
    fmt_via_text!();
}

fn gcd_int(a: &BigInt, b: &BigInt) -> BigInt {
    num_integer::Integer::gcd(a, b)
}

// ---------------------------------------------------------------------------
// Gcd: subresultant remainder sequence, plus a modular certificate.
// ---------------------------------------------------------------------------

/// Pseudo-remainder of `a` by `b` (premultiplied by `lc(b)^(deg a - deg b + 1)`).
fn pseudo_rem(a: &ExactPoly, b: &ExactPoly) -> ExactPoly {
    let da = a.degree().unwrap();
    let db = b.degree().unwrap();
    debug_assert!(da >= db);
    let lead = b.leading().unwrap().clone();
    let mut rem = a.mul_scalar(&lead.pow((da - db + 1) as u32));
    while let Some(dr) = rem.degree() {
        if dr < db {
            break;
        }
        let q = rem.leading().unwrap() / &lead;
        let shifted = b.mul(&ExactPoly::monomial(q, dr - db));
        rem = rem.sub(&shifted);
    }
    rem
}

/// Primitive gcd over Z via the primitive-part pseudo-remainder sequence.
/// Exact and fine at small degree; quadratic blowup at large degree.
pub fn gcd_subresultant(a: &ExactPoly, b: &ExactPoly) -> ExactPoly {
    if a.is_zero() {
        return b.primitive_part();
    }
    if b.is_zero() {
        return a.primitive_part();
    }
    let (mut f, mut g) = if a.degree() >= b.degree() {
        (a.primitive_part(), b.primitive_part())
    } else {
        (b.primitive_part(), a.primitive_part())
    };
    loop {
        let rem = pseudo_rem(&f, &g).primitive_part();
        if rem.is_zero() {
            let mut out = g.primitive_part();
            if out.leading().map_or(false, |l| l.is_negative()) {
                out = out.neg();
            }
            return out;
        }
        f = g;
        g = rem;
    }
}

/// 63-bit primes for modular certification.
const CERT_PRIMES: [u64; 5] = [
    (1 << 62) - 57,
    (1 << 62) - 87,
    (1 << 62) - 117,
    (1 << 62) - 143,
    (1 << 62) - 153,
];

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    acc
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

fn reduce_mod(a: &ExactPoly, p: u64) -> Vec<u64> {
    let pm = BigInt::from(p);
    let mut out: Vec<u64> = a
        .coeffs
        .iter()
        .map(|c| {
            let r = ((c % &pm) + &pm) % &pm;
            let digits = r.to_u64_digits().1;
            digits.first().copied().unwrap_or(0)
        })
        .collect();
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

fn gcd_mod_p(mut f: Vec<u64>, mut g: Vec<u64>, p: u64) -> Vec<u64> {
    while !g.is_empty() {
        // f mod g.
        let dg = g.len() - 1;
        let linv = invmod(g[dg], p);
        while f.len() > dg {
            let df = f.len() - 1;
            let q = mulmod(f[df], linv, p);
            if q != 0 {
                for i in 0..=dg {
                    let t = mulmod(q, g[i], p);
                    let idx = df - dg + i;
                    f[idx] = (f[idx] + p - t) % p;
                }
            }
            while f.last() == Some(&0) {
                f.pop();
            }
            if f.is_empty() {
                break;
            }
        }
        std::mem::swap(&mut f, &mut g);
    }
    f
}

/// Result of a squarefreeness test.
#[derive(Debug, Clone)]
pub struct SquarefreeReport {
    pub squarefree: bool,
    /// `gcd(P, P')` as a primitive polynomial (constant `1` when squarefree).
    pub gcd: ExactPoly,
    /// Prime certifying triviality of the gcd, when the modular route was
    /// used: the gcd over Q divides the gcd mod p once p ∤ lc(P).
    pub certificate_prime: Option<u64>,
}

/// Is `gcd(P, P')` constant? Exact: either a prime certificate (gcd ≡ const
/// mod p with p not dividing the leading coefficient forces gcd = 1 over Q)
/// or the full subresultant sequence.
pub fn is_squarefree(p: &ExactPoly) -> Result<SquarefreeReport> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial("squarefreeness"));
    }
    if p.degree() == Some(0) {
        return Ok(SquarefreeReport { squarefree: true, gcd: ExactPoly::from_i64(&[1]), certificate_prime: None });
    }
    let dp = p.derivative();
    if dp.is_zero() {
        // Degree >= 1 with zero derivative cannot happen over Z.
        unreachable!("non-constant integer polynomial has non-zero derivative");
    }
    for &q in &CERT_PRIMES {
        let lead = p.leading().unwrap();
        if (lead % BigInt::from(q)).is_zero() {
            continue;
        }
        let fq = reduce_mod(p, q);
        let gq = reduce_mod(&dp, q);
        let g = gcd_mod_p(fq, gq, q);
        if g.len() == 1 {
            return Ok(SquarefreeReport {
                squarefree: true,
                gcd: ExactPoly::from_i64(&[1]),
                certificate_prime: Some(q),
            });
        }
        // A non-trivial modular gcd is inconclusive (the prime may be
        // unlucky); only a handful of primes can be unlucky, so after the
        // loop fall back to the exact sequence.
    }
    let g = gcd_subresultant(p, &dp);
    let squarefree = g.degree() == Some(0);
    Ok(SquarefreeReport { squarefree, gcd: g, certificate_prime: None })
}

// ---------------------------------------------------------------------------
// The critical-orbit polynomials P_b and their mod-p derivative identity.
// ---------------------------------------------------------------------------

/// `P_b(c) = φ_c^b(0)` with `P_1 = c`, `P_{b+1} = P_b^d + c`; degree `d^{b−1}`.
pub fn gleason(d: u64, b: u64) -> Result<ExactPoly> {
    gleason_with_budget(d, b, DEFAULT_DEGREE_BUDGET)
}

pub fn gleason_with_budget(d: u64, b: u64, budget: u64) -> Result<ExactPoly> {
    assert!(d >= 2 && b >= 1);
    check_budget((d as u128).pow(b as u32 - 1), budget)?;
    let c = ExactPoly::x();
    let mut p = c.clone();
    for _ in 1..b {
        p = p.pow(d).add(&c);
    }
    Ok(p)
}

/// Report of the mod-p squarefreeness argument for `P_b`.
#[derive(Debug, Clone)]
pub struct GleasonModPReport {
    pub d: u64,
    pub b: u64,
    pub p: u64,
    /// `P_b' mod p` as coefficients in `[0, p)`, ascending.
    pub derivative_mod_p: Vec<u64>,
    /// Whether the reduced derivative is the constant `1`, as forced by
    /// `P_{b+1}' = d·P_b^{d−1}·P_b' + 1` when `p | d`.
    pub derivative_is_one: bool,
}

/// Verify `P_b' ≡ 1 (mod p)` for `p | d` by computing the recurrence in
/// `F_p[c]` and differentiating the result.
pub fn gleason_mod_p(d: u64, b: u64, p: u64) -> Result<GleasonModPReport> {
    assert!(d >= 2 && b >= 1);
    if p < 2 || d % p != 0 {
        return Err(Error::Precondition(format!("p = {p} must divide d = {d}")));
    }
    check_budget((d as u128).pow(b as u32 - 1), DEFAULT_DEGREE_BUDGET)?;
    // P_b mod p, dense over F_p.
    let mut poly: Vec<u64> = vec![0, 1]; // c
    for _ in 1..b {
        let mut acc = vec![1u64]; // poly^d by repeated squaring
        let mut base = poly.clone();
        let mut e = d;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_mod_p(&acc, &base, p);
            }
            e >>= 1;
            if e > 0 {
                base = mul_mod_p(&base, &base, p);
            }
        }
        if acc.len() < 2 {
            acc.resize(2, 0);
        }
        acc[1] = (acc[1] + 1) % p;
        while acc.last() == Some(&0) {
            acc.pop();
        }
        poly = acc;
    }
    let mut derivative: Vec<u64> = poly
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| mulmod(c, (i as u64) % p, p))
        .collect();
    while derivative.last() == Some(&0) {
        derivative.pop();
    }
    let derivative_is_one = derivative == vec![1];
    Ok(GleasonModPReport { d, b, p, derivative_mod_p: derivative, derivative_is_one })
}

fn mul_mod_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mulmod(x, y, p)) % p;
        }
    }
    while out.last() == Some(&0) {
        out.pop();
    }
    out
}

/// `φ_c^s(0) − φ_c^t(0)` for `s > t ≥ 1`: vanishing locus of the parameters
/// where the critical orbit satisfies a (preperiod, period) relation.
pub fn misiurewicz_diff(d: u64, s: u64, t: u64) -> Result<ExactPoly> {
    if s <= t || t == 0 {
        return Err(Error::Precondition(format!("need s > t >= 1, got s = {s}, t = {t}")));
    }
    let ps = gleason(d, s)?;
    let pt = gleason(d, t)?;
    Ok(ps.sub(&pt))
}

/// Largest `k` with `(x − r)^k | P`, by counting vanishing derivatives at `r`.
pub fn root_multiplicity(p: &ExactPoly, r: &BigRational) -> Result<u32> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial("root multiplicity"));
    }
    let mut k = 0u32;
    let mut q = p.clone();
    while !q.is_zero() && q.eval_rational(r).is_zero() {
        k += 1;
        q = q.derivative();
    }
    Ok(k)
}

// ---------------------------------------------------------------------------
// Bivariate polynomials over Z: the iterates φ_c^b(z) and dynatomic factors.
// ---------------------------------------------------------------------------

/// Dense bivariate polynomial; `grid[i][j]` is the coefficient of `z^i c^j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactBiPoly {
    grid: Vec<Vec<BigInt>>,
}

impl ExactBiPoly {
    pub fn zero() -> Self {
        ExactBiPoly { grid: vec![] }
    }

    fn trim(mut grid: Vec<Vec<BigInt>>) -> Self {
        for row in grid.iter_mut() {
            while row.last().map_or(false, |c| c.is_zero()) {
                row.pop();
            }
        }
        while grid.last().map_or(false, |r| r.is_empty()) {
            grid.pop();
        }
        ExactBiPoly { grid }
    }

    pub fn is_zero(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn constant(a: BigInt) -> Self {
        Self::trim(vec![vec![a]])
    }

    pub fn z() -> Self {
        Self::trim(vec![vec![], vec![BigInt::one()]])
    }

    pub fn c() -> Self {
        Self::trim(vec![vec![BigInt::zero(), BigInt::one()]])
    }

    pub fn coeff(&self, i: usize, j: usize) -> BigInt {
        self.grid
            .get(i)
            .and_then(|r| r.get(j))
            .cloned()
            .unwrap_or_else(BigInt::zero)
    }

    /// Degree in `z`; `None` for zero.
    pub fn deg_z(&self) -> Option<usize> {
        self.grid.len().checked_sub(1)
    }

    /// Degree in `c`; `None` for zero.
    pub fn deg_c(&self) -> Option<usize> {
        self.grid.iter().map(|r| r.len()).max().and_then(|m| m.checked_sub(1))
    }

    pub fn add(&self, other: &Self) -> Self {
        let ni = self.grid.len().max(other.grid.len());
        let mut grid = Vec::with_capacity(ni);
        for i in 0..ni {
            let nj = self
                .grid
                .get(i)
                .map_or(0, |r| r.len())
                .max(other.grid.get(i).map_or(0, |r| r.len()));
            grid.push((0..nj).map(|j| self.coeff(i, j) + other.coeff(i, j)).collect());
        }
        Self::trim(grid)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        ExactBiPoly {
            grid: self.grid.iter().map(|r| r.iter().map(|c| -c).collect()).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let ni = self.grid.len() + other.grid.len() - 1;
        let nj = self.deg_c().unwrap_or(0) + other.deg_c().unwrap_or(0) + 1;
        let mut grid = vec![vec![BigInt::zero(); nj]; ni];
        for (i1, r1) in self.grid.iter().enumerate() {
            for (j1, a) in r1.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (i2, r2) in other.grid.iter().enumerate() {
                    for (j2, b) in r2.iter().enumerate() {
                        if b.is_zero() {
                            continue;
                        }
                        grid[i1 + i2][j1 + j2] += a * b;
                    }
                }
            }
        }
        Self::trim(grid)
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut result = Self::constant(BigInt::one());
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Substitute `z := 0`: the coefficient row of `z^0` as a polynomial in `c`.
    pub fn at_z_zero(&self) -> ExactPoly {
        ExactPoly::from_coeffs(self.grid.first().cloned().unwrap_or_default())
    }

    /// Evaluate at exact integers.
    pub fn eval(&self, z: &BigInt, c: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for row in self.grid.iter().rev() {
            let mut racc = BigInt::zero();
            for cf in row.iter().rev() {
                racc = racc * c + cf;
            }
            acc = acc * z + racc;
        }
        acc
    }

    /// Long division in `z` by a divisor monic in `z`, coefficients in `Z[c]`.
    /// Errors if the divisor is not monic in `z` or the remainder is non-zero.
    pub fn div_exact_z(&self, divisor: &Self) -> Result<Self> {
        let dd = divisor.deg_z().ok_or(Error::ZeroPolynomial("division"))?;
        let lead_row = &divisor.grid[dd];
        if lead_row.len() != 1 || !lead_row[0].is_one() {
            return Err(Error::Precondition("bivariate division needs a divisor monic in z".into()));
        }
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let nd = self.deg_z().unwrap();
        if nd < dd {
            return Err(Error::InexactDivision);
        }
        // Work on rows of ExactPoly in c.
        let mut rem: Vec<ExactPoly> = (0..=nd)
            .map(|i| ExactPoly::from_coeffs(self.grid.get(i).cloned().unwrap_or_default()))
            .collect();
        let div_rows: Vec<ExactPoly> = (0..=dd)
            .map(|i| ExactPoly::from_coeffs(divisor.grid.get(i).cloned().unwrap_or_default()))
            .collect();
        let mut quot: Vec<ExactPoly> = vec![ExactPoly::zero(); nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let q = rem[k + dd].clone();
            if q.is_zero() {
                continue;
            }
            for (i, row) in div_rows.iter().enumerate() {
                let prod = q.mul(row);
                rem[k + i] = rem[k + i].sub(&prod);
            }
            quot[k] = q;
        }
        if rem.iter().any(|r| !r.is_zero()) {
            return Err(Error::InexactDivision);
        }
        let grid = quot.into_iter().map(|p| p.coeffs).collect();
        Ok(Self::trim(grid))
    }

    /// Sparse text form: space-separated `(i,j):coeff` (z-degree, c-degree).
    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "zero".into();
        }
        let mut out = Vec::new();
        for (i, row) in self.grid.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    out.push(format!("({i},{j}):{c}"));
                }
            }
        }
        out.join(" ")
    }

    pub fn from_text(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" || s.is_empty() {
            return Ok(Self::zero());
        }
        let mut grid: Vec<Vec<BigInt>> = vec![];
        for tok in s.split_whitespace() {
            let bad = || Error::Usage(format!("bad bivariate token {tok:?} (want (i,j):coeff)"));
            let (idx, c) = tok.split_once("):").ok_or_else(bad)?;
            let idx = idx.strip_prefix('(').ok_or_else(bad)?;
            let (i, j) = idx.split_once(',').ok_or_else(bad)?;
            let i: usize = i.parse().map_err(|_| bad())?;
            let j: usize = j.parse().map_err(|_| bad())?;
            let c: BigInt = c.parse().map_err(|_| bad())?;
            if grid.len() <= i {
                grid.resize(i + 1, vec![]);
            }
            if grid[i].len() <= j {
                grid[i].resize(j + 1, BigInt::zero());
            }
            grid[i][j] = c;
        }
        Ok(Self::trim(grid))
    }
}

impl fmt::Display for ExactBiPoly {
    fmt_via_text!();
}

/// `φ_c^b(z)` as an exact bivariate polynomial; degree `d^b` in `z`.
pub fn iterate(d: u64, b: u64) -> Result<ExactBiPoly> {
    iterate_with_budget(d, b, DEFAULT_DEGREE_BUDGET)
}

pub fn iterate_with_budget(d: u64, b: u64, budget: u64) -> Result<ExactBiPoly> {
    assert!(d >= 2 && b >= 1);
    check_budget((d as u128).pow(b as u32), budget)?;
    let c = ExactBiPoly::c();
    let mut f = ExactBiPoly::z().pow(d).add(&c);
    for _ in 1..b {
        f = f.pow(d).add(&c);
    }
    Ok(f)
}

/// Dynatomic factor `Φ_b(z, c) = Π_{e|b} (φ^e(z) − z)^{μ(b/e)}`, computed by
/// exact bivariate division (zero remainder is a built-in self-check).
pub fn dynatomic(d: u64, b: u64) -> Result<ExactBiPoly> {
    assert!(d >= 2 && b >= 1);
    let z = ExactBiPoly::z();
    let mut numer = ExactBiPoly::constant(BigInt::one());
    let mut denom: Vec<ExactBiPoly> = vec![];
    for e in crate::cyclo::divisors_of(b) {
        let factor = iterate(d, e)?.sub(&z);
        match crate::cyclo::mobius_of(b / e) {
            1 => numer = numer.mul(&factor),
            -1 => denom.push(factor),
            _ => {}
        }
    }
    let mut out = numer;
    for f in denom {
        out = out.div_exact_z(&f)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// The two-parameter family φ_{c,ε}(z) = z(z−ε)^{d−1} + c, sparse trivariate.
// ---------------------------------------------------------------------------

/// Sparse polynomial in `(z, c, ε)`; keys are exponent triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriPoly {
    terms: BTreeMap<(u32, u32, u32), BigInt>,
}

impl TriPoly {
    pub fn zero() -> Self {
        TriPoly { terms: BTreeMap::new() }
    }

    pub fn term(coeff: BigInt, z: u32, c: u32, e: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert((z, c, e), coeff);
        }
        TriPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (k, v) in &other.terms {
            let e = terms.entry(*k).or_insert_with(BigInt::zero);
            *e += v;
            if e.is_zero() {
                terms.remove(k);
            }
        }
        TriPoly { terms }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<(u32, u32, u32), BigInt> = BTreeMap::new();
        for ((z1, c1, e1), a) in &self.terms {
            for ((z2, c2, e2), b) in &other.terms {
                let k = (z1 + z2, c1 + c2, e1 + e2);
                let entry = terms.entry(k).or_insert_with(BigInt::zero);
                *entry += a * b;
                if entry.is_zero() {
                    terms.remove(&k);
                }
            }
        }
        TriPoly { terms }
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut result = Self::term(BigInt::one(), 0, 0, 0);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Substitute `ε := 0`, returning a bivariate polynomial in `(z, c)`.
    pub fn at_eps_zero(&self) -> ExactBiPoly {
        let mut grid: Vec<Vec<BigInt>> = vec![];
        for ((z, c, e), v) in &self.terms {
            if *e != 0 {
                continue;
            }
            let (i, j) = (*z as usize, *c as usize);
            if grid.len() <= i {
                grid.resize(i + 1, vec![]);
            }
            if grid[i].len() <= j {
                grid[i].resize(j + 1, BigInt::zero());
            }
            grid[i][j] = v.clone();
        }
        ExactBiPoly::trim(grid)
    }

    /// Coefficients of powers of `z` after substituting complex `(c, ε)`.
    pub fn z_coeffs_at(&self, c: num_complex::Complex64, eps: num_complex::Complex64) -> Vec<num_complex::Complex64> {
        use num_complex::Complex64;
        use num_traits::ToPrimitive;
        let deg_z = self.terms.keys().map(|k| k.0).max().unwrap_or(0) as usize;
        let mut out = vec![Complex64::new(0.0, 0.0); deg_z + 1];
        for ((z, cd, ed), v) in &self.terms {
            let coeff = v.to_f64().expect("coefficient fits in f64 for the small family");
            out[*z as usize] += coeff * c.powu(*cd) * eps.powu(*ed);
        }
        out
    }

    /// Sparse text form `(i,j,k):coeff` (z, c, ε exponents).
    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "zero".into();
        }
        self.terms
            .iter()
            .map(|((z, c, e), v)| format!("({z},{c},{e}):{v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for TriPoly {
    fmt_via_text!();
}

/// `φ_{c,ε}^b(z)` for `φ_{c,ε}(z) = z(z−ε)^{d−1} + c`, exact and sparse.
pub fn iterate_two_param(d: u64, b: u64) -> Result<TriPoly> {
    iterate_two_param_with_budget(d, b, DEFAULT_DEGREE_BUDGET)
}

pub fn iterate_two_param_with_budget(d: u64, b: u64, budget: u64) -> Result<TriPoly> {
    assert!(d >= 2 && b >= 1);
    check_budget((d as u128).pow(b as u32), budget)?;
    let one = BigInt::one();
    let c = TriPoly::term(one.clone(), 0, 1, 0);
    let z = TriPoly::term(one.clone(), 1, 0, 0);
    let eps = TriPoly::term(one.clone(), 0, 0, 1);
    let apply = |w: &TriPoly| -> TriPoly {
        // w·(w − ε)^{d−1} + c
        let shifted = w.add(&eps.mul(&TriPoly::term(BigInt::from(-1), 0, 0, 0)));
        w.mul(&shifted.pow(d - 1)).add(&c)
    };
    let mut f = apply(&z);
    for _ in 1..b {
        f = apply(&f);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn poly(c: &[i64]) -> ExactPoly {
        ExactPoly::from_i64(c)
    }

    fn rat(n: i64) -> BigRational {
        BigRational::from_i64(n).unwrap()
    }

    #[test]
    fn gleason_small() {
        assert_eq!(gleason(2, 1).unwrap(), poly(&[0, 1]));
        assert_eq!(gleason(2, 2).unwrap(), poly(&[0, 1, 1]));
        assert_eq!(gleason(2, 3).unwrap(), poly(&[0, 1, 1, 2, 1]));
        assert_eq!(gleason(3, 2).unwrap().degree(), Some(3));
        assert_eq!(gleason(2, 5).unwrap().degree(), Some(16));
    }

    #[test]
    fn gleason_budget_is_loud() {
        assert!(matches!(gleason(2, 40), Err(Error::DegreeBudget { .. })));
    }

    #[test]
    fn squarefree_examples() {
        let r = is_squarefree(&poly(&[0, 1, 1])).unwrap();
        assert!(r.squarefree);
        // c^3(c+2) = 2c^3 + c^4
        let p = poly(&[0, 0, 0, 2, 1]);
        let r = is_squarefree(&p).unwrap();
        assert!(!r.squarefree);
        assert!(r.gcd.degree().unwrap() >= 2);
        assert!(is_squarefree(&poly(&[0, 1])).unwrap().squarefree);
        assert!(is_squarefree(&ExactPoly::zero()).is_err());
    }

    #[test]
    fn subresultant_gcd_matches_factor_structure() {
        // (x-1)^2 (x+3) and (x-1)(x+5) share exactly (x-1).
        let a = poly(&[1, -2, 1]).mul(&poly(&[3, 1]));
        let b = poly(&[-1, 1]).mul(&poly(&[5, 1]));
        let g = gcd_subresultant(&a, &b);
        assert_eq!(g, poly(&[-1, 1]));
    }

    #[test]
    fn gleason_squarefree_sweep() {
        for d in 2..=6u64 {
            for b in 1..=12u64 {
                let deg = (d as u128).pow(b as u32 - 1);
                if deg > 2000 {
                    continue;
                }
                let p = gleason(d, b).unwrap();
                assert_eq!(p.degree(), Some(deg as usize));
                assert!(is_squarefree(&p).unwrap().squarefree, "P_{b} for d={d}");
            }
        }
    }

    #[test]
    fn gleason_mod_p_examples() {
        assert!(gleason_mod_p(2, 5, 2).unwrap().derivative_is_one);
        assert!(gleason_mod_p(6, 3, 3).unwrap().derivative_is_one);
        assert!(gleason_mod_p(6, 3, 2).unwrap().derivative_is_one);
        let r = gleason_mod_p(2, 1, 2).unwrap();
        assert_eq!(r.derivative_mod_p, vec![1]);
        assert!(gleason_mod_p(2, 3, 3).is_err());
    }

    #[test]
    fn misiurewicz_examples() {
        // (2,3,2): c^4 + 2c^3 = c^3 (c+2).
        let m = misiurewicz_diff(2, 3, 2).unwrap();
        assert_eq!(m, poly(&[0, 0, 0, 2, 1]));
        assert_eq!(misiurewicz_diff(2, 2, 1).unwrap(), poly(&[0, 0, 1]));
        assert!(misiurewicz_diff(2, 2, 2).is_err());
        assert_eq!(root_multiplicity(&m, &rat(-2)).unwrap(), 1);
        assert_eq!(root_multiplicity(&m, &rat(0)).unwrap(), 3);
        assert_eq!(root_multiplicity(&poly(&[0, 1, 1]), &rat(5)).unwrap(), 0);
    }

    #[test]
    fn misiurewicz_rational_root_simplicity() {
        // All rational roots of P_{a+1+b} - P_{a+1} lie in [-2, 2]; scan the
        // integer candidates and check simplicity away from the periodic
        // parameters (roots of some P_e).
        for s in 3..=6u64 {
            for t in 1..s {
                let m = misiurewicz_diff(2, s, t).unwrap();
                for r in [-2i64, -1, 1, 2] {
                    let r = rat(r);
                    let mult = root_multiplicity(&m, &r).unwrap();
                    if mult == 0 {
                        continue;
                    }
                    let periodic = (1..=s)
                        .any(|e| gleason(2, e).unwrap().eval_rational(&r).is_zero());
                    if !periodic {
                        assert_eq!(mult, 1, "non-periodic rational root {r} of ({s},{t})");
                    }
                }
            }
        }
    }

    #[test]
    fn iterate_examples() {
        let f = iterate(2, 2).unwrap();
        // z^4 + 2cz^2 + c^2 + c
        let mut expect = ExactBiPoly::z().pow(4);
        expect = expect.add(&ExactBiPoly::z().pow(2).mul(&ExactBiPoly::c()).mul(&ExactBiPoly::constant(BigInt::from(2))));
        expect = expect.add(&ExactBiPoly::c().pow(2)).add(&ExactBiPoly::c());
        assert_eq!(f, expect);
        assert_eq!(iterate(3, 1).unwrap().deg_z(), Some(3));
        assert_eq!(iterate(2, 3).unwrap().at_z_zero(), poly(&[0, 1, 1, 2, 1]));
    }

    #[test]
    fn iterate_matches_numeric_orbits() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let d = rng.gen_range(2..=4u64);
            let b = rng.gen_range(1..=3u64);
            let f = iterate(d, b).unwrap();
            let z = BigInt::from(rng.gen_range(-20..=20i64));
            let c = BigInt::from(rng.gen_range(-20..=20i64));
            let mut w = z.clone();
            for _ in 0..b {
                w = w.pow(d as u32) + &c;
            }
            assert_eq!(f.eval(&z, &c), w);
        }
    }

    #[test]
    fn dynatomic_examples() {
        let z = ExactBiPoly::z();
        let c = ExactBiPoly::c();
        let one = ExactBiPoly::constant(BigInt::one());
        // (2,1): z^2 - z + c.
        assert_eq!(dynatomic(2, 1).unwrap(), z.pow(2).sub(&z).add(&c));
        // (2,2): z^2 + z + c + 1.
        assert_eq!(dynatomic(2, 2).unwrap(), z.pow(2).add(&z).add(&c).add(&one));
        // (2,3): degree 6, and its product with Phi_1 recovers phi^3 - z.
        let phi3 = dynatomic(2, 3).unwrap();
        assert_eq!(phi3.deg_z(), Some(6));
        let product = phi3.mul(&dynatomic(2, 1).unwrap());
        assert_eq!(product, iterate(2, 3).unwrap().sub(&z));
    }

    #[test]
    fn dynatomic_product_identity() {
        let z = ExactBiPoly::z();
        for d in 2..=3u64 {
            for b in 1..=4u64 {
                let mut prod = ExactBiPoly::constant(BigInt::one());
                for e in crate::cyclo::divisors_of(b) {
                    prod = prod.mul(&dynatomic(d, e).unwrap());
                }
                assert_eq!(prod, iterate(d, b).unwrap().sub(&z), "d={d} b={b}");
            }
        }
    }

    #[test]
    fn two_param_examples() {
        // (2,1): z^2 - eps z + c.
        let f = iterate_two_param(2, 1).unwrap();
        let expect = TriPoly::term(BigInt::one(), 2, 0, 0)
            .add(&TriPoly::term(BigInt::from(-1), 1, 0, 1))
            .add(&TriPoly::term(BigInt::one(), 0, 1, 0));
        assert_eq!(f, expect);
        // (3,1): z^3 - 2 eps z^2 + eps^2 z + c.
        let f = iterate_two_param(3, 1).unwrap();
        let expect = TriPoly::term(BigInt::one(), 3, 0, 0)
            .add(&TriPoly::term(BigInt::from(-2), 2, 0, 1))
            .add(&TriPoly::term(BigInt::one(), 1, 0, 2))
            .add(&TriPoly::term(BigInt::one(), 0, 1, 0));
        assert_eq!(f, expect);
        // eps := 0 recovers the one-parameter iterate.
        for (d, b) in [(2, 2), (3, 2), (2, 3)] {
            assert_eq!(iterate_two_param(d, b).unwrap().at_eps_zero(), iterate(d, b).unwrap());
        }
    }

    #[test]
    fn text_round_trip() {
        for p in [poly(&[0, 1, 1, 2, 1]), poly(&[-7]), ExactPoly::zero(), gleason(2, 5).unwrap()] {
            assert_eq!(ExactPoly::from_text(&p.to_text()).unwrap(), p);
        }
        for f in [iterate(2, 2).unwrap(), dynatomic(2, 3).unwrap(), ExactBiPoly::zero()] {
            assert_eq!(ExactBiPoly::from_text(&f.to_text()).unwrap(), f);
        }
    }
}
