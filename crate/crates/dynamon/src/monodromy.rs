//! Numerical monodromy of parametric polynomial families: simultaneous root
//! finding (Aberth–Ehrlich), root tracking along loops in the parameter
//! plane with collision-triggered step halving, permutation extraction, and
//! exact closure of the generated permutation group.
//!
//! The headline checks: the monodromy group of `f_c^b(z) − z` for
//! `f_c(z) = z^d + c` matches the centralizer-of-the-dynamics order
//! `Π_{e|b} e^{r_e}·r_e!`, every loop permutation commutes with the
//! dynamical permutation, and small loops at the critical parameters of the
//! perturbed family `z(z−ε)^{d−1} + c` cycle the `d−1` extra preimages.

use std::collections::{HashSet, VecDeque};

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_SOLVER_ITER: usize = 1000;
pub const DEFAULT_ORDER_BOUND: u64 = 10_000_000;

// ---------------------------------------------------------------------------
// Complex polynomial helpers (ascending coefficients).
// ---------------------------------------------------------------------------

pub fn poly_eval(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

pub fn poly_eval_deriv(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_pow(a: &[Complex64], e: u64) -> Vec<Complex64> {
    let mut result = vec![Complex64::new(1.0, 0.0)];
    let mut base = a.to_vec();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul(&result, &base);
        }
        e >>= 1;
        if e > 0 {
            base = poly_mul(&base, &base);
        }
    }
    result
}

/// Coefficients of `φ_c^b(z)` with `φ_c(z) = z^d + c`.
pub fn phi_iter_coeffs(d: u64, b: u64, c: Complex64) -> Vec<Complex64> {
    let mut f = vec![Complex64::new(0.0, 0.0); d as usize + 1];
    f[0] = c;
    f[d as usize] = Complex64::new(1.0, 0.0);
    let mut cur = f.clone();
    for _ in 1..b {
        cur = poly_pow(&cur, d);
        cur[0] += c;
    }
    cur
}

/// The Morton family `c ↦ coefficients of f_c^b(z) − z`.
pub fn morton_family(d: u64, b: u64) -> impl Fn(Complex64) -> Vec<Complex64> {
    move |c| {
        let mut f = phi_iter_coeffs(d, b, c);
        f[1] -= Complex64::new(1.0, 0.0);
        f
    }
}

// ---------------------------------------------------------------------------
// Simultaneous root finding.
// ---------------------------------------------------------------------------

/// A solved fiber: labelled roots with residuals.
#[derive(Debug, Clone)]
pub struct ComplexRootSet {
    pub roots: Vec<Complex64>,
    pub residuals: Vec<f64>,
    /// Set when the minimum pairwise separation is under 10× the collision
    /// threshold used by the tracker.
    pub degenerate: bool,
}

impl ComplexRootSet {
    pub fn min_separation(&self) -> f64 {
        min_separation(&self.roots)
    }
}

fn min_separation(roots: &[Complex64]) -> f64 {
    let mut sep = f64::INFINITY;
    for i in 0..roots.len() {
        for j in 0..i {
            sep = sep.min((roots[i] - roots[j]).norm());
        }
    }
    sep
}

/// Aberth–Ehrlich simultaneous iteration. Deterministic: initial guesses sit
/// on a circle whose radius is the Cauchy root bound, at seeded phases.
pub fn solve_roots(coeffs: &[Complex64], seed: u64) -> Result<ComplexRootSet> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Err(Error::Precondition("polynomial must have degree >= 1".into()));
    }
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let lead = coeffs[n];
    if lead.norm() < 1e-12 * scale {
        return Err(Error::Precondition("leading coefficient too close to zero".into()));
    }
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let bound = 1.0 + monic.iter().take(n).map(|c| c.norm()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase0: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut roots: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = phase0 + std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
            bound * Complex64::new(theta.cos(), theta.sin())
        })
        .collect();
    let tol = RESIDUAL_TOL * scale.max(1.0);
    let mut worst = f64::INFINITY;
    for _ in 0..MAX_SOLVER_ITER {
        let mut moved = 0.0f64;
        for k in 0..n {
            let (p, dp) = poly_eval_deriv(&monic, roots[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let newton = if dp.norm() > 0.0 { p / dp } else { p };
            let mut repulse = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let diff = roots[k] - roots[j];
                    if diff.norm() > 1e-300 {
                        repulse += diff.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulse;
            let delta = if denom.norm() > 1e-12 { newton / denom } else { newton };
            roots[k] -= delta;
            moved = moved.max(delta.norm());
        }
        worst = roots.iter().map(|&z| poly_eval(&monic, z).norm() * lead.norm()).fold(0.0, f64::max);
        if worst <= tol && moved <= 1e-13 * bound.max(1.0) {
            let residuals: Vec<f64> = roots.iter().map(|&z| poly_eval(coeffs, z).norm()).collect();
            let sep = min_separation(&roots);
            return Ok(ComplexRootSet { degenerate: sep < 1e-6, roots, residuals });
        }
    }
    Err(Error::NoConvergence { iterations: MAX_SOLVER_ITER, residual: worst })
}

// ---------------------------------------------------------------------------
// Loops and tracking.
// ---------------------------------------------------------------------------

/// A closed piecewise-linear path in the parameter plane, starting and
/// ending at its base point.
#[derive(Debug, Clone)]
pub struct LoopPath {
    /// Closed node list: `nodes[0]` is the base point and the path returns
    /// to it after the last node.
    pub nodes: Vec<Complex64>,
    pub initial_step: f64,
    /// Minimum step as a fraction of the loop length.
    pub min_step_fraction: f64,
}

impl LoopPath {
    pub fn from_nodes(nodes: Vec<Complex64>) -> Self {
        assert!(nodes.len() >= 2);
        LoopPath { nodes, initial_step: 1.0 / 64.0, min_step_fraction: 1e-9 }
    }

    /// A circle traversed counterclockwise, based at angle 0.
    pub fn circle(center: Complex64, radius: f64, nodes: usize) -> Self {
        let pts = (0..nodes)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / nodes as f64;
                center + radius * Complex64::new(t.cos(), t.sin())
            })
            .collect();
        Self::from_nodes(pts)
    }

    /// A lasso: out from `base` to a circle, once around, and back. All
    /// loops based at the same point compose in `π_1`.
    pub fn lasso(base: Complex64, center: Complex64, radius: f64, nodes: usize) -> Self {
        let dir = base - center;
        let start = if dir.norm() > 1e-12 {
            center + radius * dir / dir.norm()
        } else {
            center + Complex64::new(radius, 0.0)
        };
        let phase = (start - center).arg();
        let mut pts = vec![base];
        for i in 0..=nodes {
            let t = phase + std::f64::consts::TAU * i as f64 / nodes as f64;
            pts.push(center + radius * Complex64::new(t.cos(), t.sin()));
        }
        pts.push(base);
        let mut path = Self::from_nodes(pts);
        path.initial_step = 1.0 / 128.0;
        path
    }

    pub fn base(&self) -> Complex64 {
        self.nodes[0]
    }

    /// Reverse traversal (inverse element of `π_1`).
    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes[1..].reverse();
        LoopPath { nodes, ..*self }
    }

    fn length(&self) -> f64 {
        let mut len = 0.0;
        for i in 0..self.nodes.len() {
            let j = (i + 1) % self.nodes.len();
            len += (self.nodes[j] - self.nodes[i]).norm();
        }
        len
    }

    /// Point at arc-length parameter `s ∈ [0, length]`.
    fn at(&self, mut s: f64) -> Complex64 {
        for i in 0..self.nodes.len() {
            let j = (i + 1) % self.nodes.len();
            let seg = (self.nodes[j] - self.nodes[i]).norm();
            if s <= seg || i == self.nodes.len() - 1 {
                if seg == 0.0 {
                    return self.nodes[i];
                }
                return self.nodes[i] + (s / seg).min(1.0) * (self.nodes[j] - self.nodes[i]);
            }
            s -= seg;
        }
        self.nodes[0]
    }
}

/// A permutation of `0..n` as its image array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Permutation {
    pub images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::BadPermutation(format!("image array {images:?} is not a bijection")));
            }
            seen[i] = true;
        }
        Ok(Permutation { images })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `(self ∘ other)(i) = self[other[i]]` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Permutation { images: other.images.iter().map(|&i| self.images[i]).collect() }
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0; self.len()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j] = i;
        }
        Permutation { images }
    }

    /// Cycle decomposition, fixed points omitted.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = vec![];
        for start in 0..self.len() {
            if seen[start] || self.images[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut i = self.images[start];
            while i != start {
                seen[i] = true;
                cycle.push(i);
                i = self.images[i];
            }
            out.push(cycle);
        }
        out
    }
}

/// Nearest-neighbor matching: `perm[i]` is the index of the target root
/// nearest `sources[i]`; fails unless the assignment is a bijection with a
/// safe margin.
fn match_roots(sources: &[Complex64], targets: &[Complex64]) -> Result<Permutation> {
    let images: Vec<usize> = sources
        .iter()
        .map(|s| {
            targets
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    (s - *a).norm().partial_cmp(&(s - *b).norm()).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap()
        })
        .collect();
    Permutation::new(images)
}

/// Predictor–corrector continuation: carry all roots along the loop,
/// re-solving by warm-started Newton at each parameter step and matching by
/// nearest neighbor; steps halve whenever a root moves more than half the
/// current minimum separation or two tracked roots collide.
pub fn track_loop<F>(family: F, path: &LoopPath, base: &ComplexRootSet) -> Result<Permutation>
where
    F: Fn(Complex64) -> Vec<Complex64>,
{
    let total = path.length();
    if total == 0.0 {
        return Ok(Permutation::identity(base.roots.len()));
    }
    let min_step = path.min_step_fraction * total;
    let mut s = 0.0f64;
    let mut h = path.initial_step * total;
    let mut current = base.roots.clone();
    let scale_tol = |coeffs: &[Complex64]| {
        RESIDUAL_TOL * coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max)
    };
    while s < total {
        let target_s = (s + h).min(total);
        let coeffs = family(path.at(target_s));
        let tol = scale_tol(&coeffs);
        let sep = min_separation(&current);
        let threshold = 0.5 * sep;
        // Warm-start Newton from each current root.
        let mut next = Vec::with_capacity(current.len());
        let mut ok = true;
        'roots: for &z0 in &current {
            let mut z = z0;
            let mut converged = false;
            for _ in 0..50 {
                let (p, dp) = poly_eval_deriv(&coeffs, z);
                if p.norm() <= tol {
                    converged = true;
                    break;
                }
                if dp.norm() < 1e-300 {
                    break;
                }
                let delta = p / dp;
                z -= delta;
                if (z - z0).norm() > threshold {
                    ok = false;
                    break 'roots;
                }
            }
            if !converged {
                let (p, _) = poly_eval_deriv(&coeffs, z);
                if p.norm() > tol {
                    ok = false;
                    break;
                }
            }
            if (z - z0).norm() > threshold {
                ok = false;
                break;
            }
            next.push(z);
        }
        if ok && min_separation(&next) < 1e-12 {
            ok = false;
        }
        if !ok {
            h *= 0.5;
            if h < min_step {
                return Err(Error::StepUnderflow { at: format!("{}", path.at(target_s)) });
            }
            continue;
        }
        current = next;
        s = target_s;
        h = (h * 1.7).min(path.initial_step * total);
    }
    // Close up: match the transported roots back to the base labels.
    let sep = base.min_separation();
    let perm = match_roots(&base.roots, &current)?;
    for (i, &j) in perm.images.iter().enumerate() {
        if (base.roots[i] - current[j]).norm() > 0.5 * sep {
            return Err(Error::BadPermutation(format!(
                "end-of-loop root {j} is not close to any base root (start {i})"
            )));
        }
    }
    // perm maps start-label -> end-slot; end-slot j holds the continuation of
    // base root j, so the monodromy sends j to i when perm[i] = j.
    Ok(perm.inverse())
}

// ---------------------------------------------------------------------------
// Group generation.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub order: u64,
    pub degree: usize,
    /// Orbit partition of the generated group, each orbit sorted.
    pub orbits: Vec<Vec<usize>>,
}

/// Exact closure of the generated group (breadth-first products) with a hard
/// order bound.
pub fn generate_group(gens: &[Permutation], bound: u64) -> Result<GroupSummary> {
    let n = gens.first().map_or(0, |g| g.len());
    for g in gens {
        if g.len() != n {
            return Err(Error::BadPermutation("generators act on different sets".into()));
        }
    }
    let id = Permutation::identity(n);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    seen.insert(id.images.clone());
    let mut queue = VecDeque::from([id]);
    while let Some(g) = queue.pop_front() {
        for gen in gens {
            let h = gen.compose(&g);
            if seen.insert(h.images.clone()) {
                if seen.len() as u64 > bound {
                    return Err(Error::OrderBound(bound));
                }
                queue.push_back(h);
            }
        }
    }
    // Orbits under the generators.
    let mut orbit_of = vec![usize::MAX; n];
    let mut orbits = vec![];
    for start in 0..n {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        let label = orbits.len();
        let mut orbit = vec![start];
        orbit_of[start] = label;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for gen in gens {
                let j = gen.images[i];
                if orbit_of[j] == usize::MAX {
                    orbit_of[j] = label;
                    orbit.push(j);
                    stack.push(j);
                }
            }
        }
        orbit.sort_unstable();
        orbits.push(orbit);
    }
    Ok(GroupSummary { order: seen.len() as u64, degree: n, orbits })
}

/// Does `perm` map every block of the partition onto a block?
pub fn preserves_partition(perm: &Permutation, partition: &[Vec<usize>]) -> bool {
    let blocks: HashSet<Vec<usize>> = partition
        .iter()
        .map(|b| {
            let mut s = b.clone();
            s.sort_unstable();
            s
        })
        .collect();
    partition.iter().all(|b| {
        let mut image: Vec<usize> = b.iter().map(|&i| perm.images[i]).collect();
        image.sort_unstable();
        blocks.contains(&image)
    })
}

/// `Π_{e|b} e^{r_e} · r_e!` where `e·r_e` counts the points of exact period
/// `e` of a generic `z^d + c` (`d` for `e = 1`, Möbius sum otherwise).
pub fn expected_morton_order(d: u64, b: u64) -> BigUint {
    let mut order = BigUint::one();
    for e in crate::cyclo::divisors_of(b) {
        let count = if e == 1 {
            d as i128
        } else {
            crate::cyclo::divisors_of(e)
                .iter()
                .map(|&f| crate::cyclo::mobius_of(e / f) as i128 * (d as i128).pow(f as u32))
                .sum()
        };
        let r = u64::try_from(count / e as i128).expect("period counts are non-negative");
        order *= BigUint::from(e).pow(r as u32);
        for i in 1..=r {
            order *= BigUint::from(i);
        }
    }
    order
}

/// The permutation induced on a root set by `z ↦ z^d + c` (each image
/// matched to the nearest root).
pub fn dynamical_permutation(base: &ComplexRootSet, d: u64, c: Complex64) -> Result<Permutation> {
    let images: Vec<Complex64> = base.roots.iter().map(|&z| z.powu(d as u32) + c).collect();
    let perm = match_roots(&images, &base.roots)?;
    let sep = base.min_separation();
    for (i, &j) in perm.images.iter().enumerate() {
        if (images[i] - base.roots[j]).norm() > 0.25 * sep {
            return Err(Error::BadPermutation(format!(
                "image of root {i} does not land near a root"
            )));
        }
    }
    Ok(perm)
}

/// `perm ∘ dyn = dyn ∘ perm`.
pub fn equivariance_check(perm: &Permutation, dynamical: &Permutation) -> bool {
    perm.compose(dynamical) == dynamical.compose(perm)
}

// ---------------------------------------------------------------------------
// Morton verification.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct MortonReport {
    pub d: u64,
    pub b: u64,
    pub seed: u64,
    pub n_loops: usize,
    pub loops_used: usize,
    pub loops_discarded: usize,
    pub expected_order: String,
    pub computed_order: u64,
    pub equivariant: bool,
    pub transitive_on_period_classes: bool,
    pub blocks_preserved: bool,
    pub pass: bool,
    /// Image arrays of the generating loop permutations.
    pub generators: Vec<Vec<usize>>,
}

/// Track `f^b(z) − z` around seeded random loops and compare the generated
/// group against the expected order, with equivariance, per-period-class
/// transitivity, and dynamical-block checks.
pub fn verify_morton(d: u64, b: u64, n_loops: usize, seed: u64) -> Result<MortonReport> {
    if (d as u128).pow(b as u32) > 32 {
        return Err(Error::Precondition(format!("degree d^b = {} exceeds the tracking bound 32", d.pow(b as u32))));
    }
    let family = morton_family(d, b);
    // A generic base parameter away from the real axis and the discriminant.
    let c0 = Complex64::new(0.2384, 1.7362);
    let base = solve_roots(&family(c0), seed)?;
    let dynamical = dynamical_permutation(&base, d, c0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gens: Vec<Permutation> = Vec::new();
    let mut used = 0usize;
    let mut discarded = 0usize;
    let mut equivariant = true;
    for _ in 0..n_loops {
        let center = Complex64::new(rng.gen_range(-1.6..1.6), rng.gen_range(-1.4..1.4));
        let radius = rng.gen_range(0.05..1.1);
        let path = LoopPath::lasso(c0, center, radius, 96);
        match track_loop(&family, &path, &base) {
            Ok(p) => {
                if !equivariance_check(&p, &dynamical) {
                    equivariant = false;
                }
                used += 1;
                if !p.is_identity() {
                    gens.push(p);
                }
            }
            Err(Error::StepUnderflow { .. }) | Err(Error::BadPermutation(_)) => {
                discarded += 1;
            }
            Err(e) => return Err(e),
        }
    }
    gens.sort_by(|a, b| a.images.cmp(&b.images));
    gens.dedup();
    let summary = generate_group(&gens, DEFAULT_ORDER_BOUND)?;
    let expected = expected_morton_order(d, b);

    // Exact-period classes of the base roots.
    let mut class_of = vec![0u64; base.roots.len()];
    for (i, &z) in base.roots.iter().enumerate() {
        let mut w = z;
        for e in 1..=b {
            w = w.powu(d as u32) + c0;
            if (w - z).norm() < 1e-6 {
                class_of[i] = e;
                break;
            }
        }
        debug_assert!(class_of[i] >= 1, "every root is periodic of period dividing b");
    }
    let transitive = crate::cyclo::divisors_of(b).iter().all(|&e| {
        let class: Vec<usize> =
            (0..base.roots.len()).filter(|&i| class_of[i] == e).collect();
        class.is_empty()
            || summary
                .orbits
                .iter()
                .any(|orbit| class.iter().all(|i| orbit.contains(i)))
    });

    // Dynamical orbits as blocks.
    let mut blocks: Vec<Vec<usize>> = vec![];
    let mut assigned = vec![false; base.roots.len()];
    for i in 0..base.roots.len() {
        if assigned[i] {
            continue;
        }
        let mut block = vec![i];
        assigned[i] = true;
        let mut j = dynamical.images[i];
        while j != i {
            assigned[j] = true;
            block.push(j);
            j = dynamical.images[j];
        }
        blocks.push(block);
    }
    let blocks_preserved = gens.iter().all(|g| preserves_partition(g, &blocks));

    let computed_order = summary.order;
    let pass = BigUint::from(computed_order) == expected
        && equivariant
        && transitive
        && blocks_preserved;
    Ok(MortonReport {
        d,
        b,
        seed,
        n_loops,
        loops_used: used,
        loops_discarded: discarded,
        expected_order: expected.to_string(),
        computed_order,
        equivariant,
        transitive_on_period_classes: transitive,
        blocks_preserved,
        pass,
        generators: gens.iter().map(|g| g.images.clone()).collect(),
    })
}

// ---------------------------------------------------------------------------
// The perturbed family z(z−ε)^{d−1} + c near a critical parameter.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct Prep1Report {
    pub d: u64,
    pub b: u64,
    pub eps: (f64, f64),
    /// The critical parameter (root of the degree-b critical-orbit
    /// polynomial) the loop was anchored near.
    pub c_star: (f64, f64),
    /// The located branch parameter where the critical value is periodic.
    pub c_branch: (f64, f64),
    /// The tracked periodic point stays fixed.
    pub periodic_fixed: bool,
    /// Cycle lengths of the loop permutation restricted to the preimage
    /// cluster at the critical point.
    pub cluster_cycles: Vec<usize>,
    pub pass: bool,
}

fn phi_eps(d: u64, c: Complex64, eps: Complex64, z: Complex64) -> Complex64 {
    z * (z - eps).powu(d as u32 - 1) + c
}

fn phi_eps_orbit_deriv(d: u64, c: Complex64, eps: Complex64, z: Complex64, b: u64) -> (Complex64, Complex64) {
    // (φ^b(z), d/dz φ^b(z)).
    let mut w = z;
    let mut dw = Complex64::new(1.0, 0.0);
    for _ in 0..b {
        let step_d = (w - eps).powu(d as u32 - 2) * (Complex64::new(d as f64, 0.0) * w - eps);
        dw *= step_d;
        w = phi_eps(d, c, eps, w);
    }
    (w, dw)
}

/// The period-b point of `φ_{c,ε}` near `guess`, by Newton on `φ^b(w) − w`.
fn periodic_point_near(d: u64, c: Complex64, eps: Complex64, b: u64, guess: Complex64) -> Result<Complex64> {
    let mut w = guess;
    for _ in 0..100 {
        let (fw, dfw) = phi_eps_orbit_deriv(d, c, eps, w, b);
        let g = fw - w;
        if g.norm() < 1e-13 * (1.0 + w.norm()) {
            return Ok(w);
        }
        let dg = dfw - Complex64::new(1.0, 0.0);
        if dg.norm() < 1e-300 {
            break;
        }
        w -= g / dg;
    }
    Err(Error::NoConvergence { iterations: 100, residual: f64::NAN })
}

/// Verify the local monodromy of the preperiodic locus of the family
/// `φ_{c,ε}(z) = z(z−ε)^{d−1} + c`: around the parameter where the critical
/// value is periodic of period `b`, the tracked periodic point is fixed and
/// the `d−1` extra preimages at the critical point undergo one cycle.
pub fn prep1_cycle_check(d: u64, b: u64, eps: Complex64, seed: u64) -> Result<Prep1Report> {
    if d > 4 || b > 3 {
        return Err(Error::Precondition("supported range is d <= 4, b <= 3".into()));
    }
    if eps.norm() > 0.05 {
        return Err(Error::Precondition("|eps| must be small (<= 0.05)".into()));
    }
    // c*: a parameter with 0 periodic of exact period b for z^d + c.
    let gleason = crate::dynatomic::gleason(d, b)?;
    let coeffs: Vec<Complex64> = gleason
        .coeffs()
        .iter()
        .map(|c| {
            use num_traits::ToPrimitive;
            Complex64::new(c.to_f64().expect("small coefficients"), 0.0)
        })
        .collect();
    let mut c_star = None;
    let roots = solve_roots(&coeffs, seed)?;
    'root: for &r in &roots.roots {
        // Exact period b: no earlier return of the critical orbit.
        let mut w = Complex64::new(0.0, 0.0);
        for _ in 0..b - 1 {
            w = w.powu(d as u32) + r;
            if w.norm() < 1e-8 {
                continue 'root;
            }
        }
        c_star = Some(r);
        break;
    }
    let c_star = c_star.ok_or_else(|| {
        Error::Unreachable(format!("no parameter of exact critical period {b} for d = {d}"))
    })?;

    // Branch parameter: c with the critical value c periodic (the tracked
    // period-b point y satisfies y = c) such that the cycle itself avoids
    // the critical point ε. The avoidance condition matters: y(c) − c also
    // vanishes at the perturbed centers, where the cycle runs through ε,
    // but there the zero is double and the local monodromy on the preimage
    // cluster is trivial.
    let y_at = |c: Complex64, guess: Complex64| periodic_point_near(d, c, eps, b, guess);
    let secant_from = |start: Complex64| -> Option<(Complex64, f64)> {
        let mut c1 = start;
        let mut guess = c_star;
        let mut h1 = y_at(c1, guess).ok()? - c1;
        let mut c2 = start + Complex64::new(1e-5, 1e-5);
        // Local slope of h(c) = y(c) − c, needed to size the loop radius.
        let mut kappa = 1.0f64;
        for _ in 0..200 {
            let y2 = y_at(c2, guess).ok()?;
            guess = y2;
            let h2 = y2 - c2;
            if (c2 - c1).norm() > 1e-300 {
                kappa = ((h2 - h1) / (c2 - c1)).norm().clamp(1e-8, 1e8);
            }
            if h2.norm() < 1e-12 {
                // Reject zeros whose cycle passes near the critical point.
                let mut w = y2;
                for _ in 0..b {
                    if (w - eps).norm() < 0.3 * eps.norm() {
                        return None;
                    }
                    w = phi_eps(d, c2, eps, w);
                }
                if (c2 - c_star).norm() > 8.0 * eps.norm() {
                    return None;
                }
                return Some((c2, kappa));
            }
            let denom = h2 - h1;
            if denom.norm() < 1e-300 {
                return None;
            }
            let next = c2 - h2 * (c2 - c1) / denom;
            c1 = c2;
            h1 = h2;
            c2 = next;
        }
        None
    };
    let mut starts = vec![c_star];
    for k in 0..16u32 {
        let rho = eps.norm() * [0.5, 1.0, 2.0, 4.0][(k / 4) as usize];
        let theta = std::f64::consts::TAU * (k % 4) as f64 / 4.0 + 0.39;
        starts.push(c_star + rho * Complex64::new(theta.cos(), theta.sin()));
    }
    let (c_branch, kappa) = starts
        .iter()
        .filter_map(|&s| secant_from(s))
        .min_by(|a, b| {
            (a.0 - c_star).norm().partial_cmp(&(b.0 - c_star).norm()).unwrap()
        })
        .ok_or_else(|| {
            Error::Unreachable("no admissible branch parameter near the critical parameter".into())
        })?;

    // Track the d preimages of the periodic point: the roots of
    // P_c(z) = z(z−ε)^{d−1} + c − y(c), with y(c) recovered inside the
    // family closure by Newton seeded at c (valid near the branch, where
    // y ≈ c). Tracking the full degree-d^{b+1} preperiodic locus instead
    // would bury the tiny cluster split below the relative residual
    // tolerance of the root solver.
    let family = move |c: Complex64| -> Vec<Complex64> {
        // On Newton failure fall back to y = c, which collapses the cluster
        // and lets the tracker report a step underflow.
        let y = periodic_point_near(d, c, eps, b, c).unwrap_or(c);
        let m = d as usize - 1;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d as usize + 1];
        for k in 0..=m {
            let mut binom = 1.0f64;
            for t in 0..k {
                binom = binom * (m - t) as f64 / (t + 1) as f64;
            }
            coeffs[k + 1] = Complex64::new(binom, 0.0) * (-eps).powu((m - k) as u32);
        }
        coeffs[0] += c - y;
        coeffs
    };
    // The preimage cluster at the critical point has spread
    // ~ (kappa * r / |eps|)^(1/(d-1)) for loop radius r, so r is sized so
    // the cluster stays far inside |eps| (keeping nearest-to-eps
    // identification unambiguous) while the split stays far above the
    // residual tolerance.
    let radius = eps.norm().powi(3) / (64.0 * kappa);
    let loop_base = c_branch + Complex64::new(radius, 0.0);
    let base = solve_roots(&family(loop_base), seed)?;
    let path = LoopPath::circle(c_branch, radius, 96);
    let perm = track_loop(&family, &path, &base)?;

    // Cross-check against the exact two-parameter iterate: every preimage
    // of the periodic point lies on the preperiodic locus
    // φ^{b+1}(z) = φ(z).
    let t_hi = crate::dynatomic::iterate_two_param(d, b + 1)?;
    let t_lo = crate::dynatomic::iterate_two_param(d, 1)?;
    let hi = t_hi.z_coeffs_at(loop_base, eps);
    let lo = t_lo.z_coeffs_at(loop_base, eps);
    let locus_scale = hi.iter().chain(lo.iter()).map(|c| c.norm()).fold(1.0, f64::max);
    for &z in &base.roots {
        let residual = (poly_eval(&hi, z) - poly_eval(&lo, z)).norm();
        if residual > 1e-6 * locus_scale {
            return Err(Error::OracleDisagreement(format!(
                "preimage {z} is off the preperiodic locus (residual {residual:.3e})"
            )));
        }
    }

    // Continue the periodic point itself around the loop: it must return.
    let y0 = periodic_point_near(d, loop_base, eps, b, c_branch)?;
    let mut y = y0;
    for i in 1..=96u32 {
        let t = std::f64::consts::TAU * i as f64 / 96.0;
        let cpt = c_branch + radius * Complex64::new(t.cos(), t.sin());
        y = periodic_point_near(d, cpt, eps, b, y)?;
    }
    let periodic_fixed = (y - y0).norm() < 1e-8 * (1.0 + y0.norm());

    // The critical-point cluster: the d−1 preimages nearest ε.
    let mut near_eps: Vec<usize> = (0..base.roots.len()).collect();
    near_eps.sort_by(|&i, &j| {
        (base.roots[i] - eps)
            .norm()
            .partial_cmp(&(base.roots[j] - eps).norm())
            .unwrap()
    });
    let cluster: Vec<usize> = near_eps.into_iter().take(d as usize - 1).collect();
    // Cycle structure restricted to the cluster.
    let cluster_set: HashSet<usize> = cluster.iter().copied().collect();
    let mut cluster_cycles = vec![];
    let mut seen: HashSet<usize> = HashSet::new();
    for &start in &cluster {
        if seen.contains(&start) {
            continue;
        }
        let mut len = 0usize;
        let mut i = start;
        loop {
            if !cluster_set.contains(&i) {
                // The cycle leaves the cluster: record as a broken cycle.
                len = 0;
                break;
            }
            seen.insert(i);
            len += 1;
            i = perm.images[i];
            if i == start {
                break;
            }
        }
        cluster_cycles.push(len);
    }
    cluster_cycles.sort_unstable();
    let pass = periodic_fixed && cluster_cycles == vec![d as usize - 1];
    Ok(Prep1Report {
        d,
        b,
        eps: (eps.re, eps.im),
        c_star: (c_star.re, c_star.im),
        c_branch: (c_branch.re, c_branch.im),
        periodic_fixed,
        cluster_cycles,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solve_roots_examples() {
        // z^2 - 1.
        let r = solve_roots(&[c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 1).unwrap();
        let mut xs: Vec<f64> = r.roots.iter().map(|z| z.re).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((xs[0] + 1.0).abs() < 1e-10 && (xs[1] - 1.0).abs() < 1e-10);

        // z^2 - z + 2: (1 ± i√7)/2.
        let r = solve_roots(&[c(2.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)], 1).unwrap();
        let s7 = 7.0f64.sqrt() / 2.0;
        for z in &r.roots {
            assert!((z.re - 0.5).abs() < 1e-10);
            assert!((z.im.abs() - s7).abs() < 1e-10);
        }

        // φ^3(z) − z at c = i: 8 roots, tiny residuals.
        let f = morton_family(2, 3);
        let r = solve_roots(&f(c(0.0, 1.0)), 1).unwrap();
        assert_eq!(r.roots.len(), 8);
        assert!(r.residuals.iter().all(|&res| res < 1e-9));
    }

    #[test]
    fn constant_loop_is_identity() {
        let f = morton_family(2, 2);
        let base = solve_roots(&f(c(0.2, 1.7)), 3).unwrap();
        let path = LoopPath::from_nodes(vec![c(0.2, 1.7), c(0.2, 1.7)]);
        let p = track_loop(&f, &path, &base).unwrap();
        assert!(p.is_identity());
    }

    #[test]
    fn fixed_point_collision_loop_swaps() {
        // d=2, b=1: loop around c = 1/4 swaps the two fixed points.
        let f = morton_family(2, 1);
        let base = solve_roots(&f(c(0.25 + 0.1, 0.0)), 3).unwrap();
        let path = LoopPath::circle(c(0.25, 0.0), 0.1, 96);
        let p = track_loop(&f, &path, &base).unwrap();
        assert_eq!(p.cycles(), vec![vec![0, 1]]);
    }

    #[test]
    fn inverse_loop_gives_inverse_permutation() {
        let f = morton_family(2, 3);
        let base = solve_roots(&f(c(0.2384, 1.7362)), 5).unwrap();
        let path = LoopPath::lasso(c(0.2384, 1.7362), c(-0.15, 0.74), 0.25, 96);
        let p = track_loop(&f, &path, &base).unwrap();
        let q = track_loop(&f, &path.reversed(), &base).unwrap();
        assert_eq!(p.compose(&q), Permutation::identity(8));
        assert_eq!(q, p.inverse());
    }

    #[test]
    fn homotopic_loops_agree() {
        use rand::Rng;
        let f = morton_family(2, 3);
        let base_pt = c(0.2384, 1.7362);
        let base = solve_roots(&f(base_pt), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut tested = 0;
        while tested < 8 {
            let center = c(rng.gen_range(-1.2..1.2), rng.gen_range(-1.0..1.0));
            let radius = rng.gen_range(0.1..0.6);
            let smooth = LoopPath::lasso(base_pt, center, radius, 96);
            // Same homotopy class: identical circle discretized differently,
            // with sub-percent radial jitter.
            let mut jittered = LoopPath::lasso(base_pt, center, radius, 131);
            for (i, node) in jittered.nodes.iter_mut().enumerate() {
                if i > 1 && i + 2 < 131 {
                    let dir = *node - center;
                    *node = center + dir * (1.0 + 0.004 * ((i as f64).sin()));
                }
            }
            let (Ok(p), Ok(q)) = (
                track_loop(&f, &smooth, &base),
                track_loop(&f, &jittered, &base),
            ) else {
                continue;
            };
            assert_eq!(p, q, "center {center} radius {radius}");
            tested += 1;
        }
    }

    #[test]
    fn group_generation_examples() {
        assert_eq!(generate_group(&[], 100).unwrap().order, 1);
        let t = Permutation::new(vec![1, 0, 2]).unwrap();
        let g = generate_group(&[t.clone()], 100).unwrap();
        assert_eq!(g.order, 2);
        assert_eq!(g.orbits, vec![vec![0, 1], vec![2]]);
        let c3 = Permutation::new(vec![1, 2, 0]).unwrap();
        assert_eq!(generate_group(&[t, c3], 100).unwrap().order, 6);
        let big = Permutation::new((1..10).chain([0]).collect()).unwrap();
        assert!(matches!(generate_group(&[big], 5), Err(Error::OrderBound(5))));
    }

    #[test]
    fn expected_morton_order_examples() {
        assert_eq!(expected_morton_order(2, 1), BigUint::from(2u32));
        assert_eq!(expected_morton_order(2, 2), BigUint::from(4u32));
        assert_eq!(expected_morton_order(2, 3), BigUint::from(36u32));
        assert_eq!(expected_morton_order(2, 4), BigUint::from(1536u32));
        assert_eq!(expected_morton_order(3, 1), BigUint::from(6u32));
        assert_eq!(expected_morton_order(3, 2), BigUint::from(288u32));
    }

    #[test]
    fn verify_morton_small() {
        let r = verify_morton(2, 1, 12, 7).unwrap();
        assert!(r.pass, "{r:?}");
        let r = verify_morton(2, 2, 20, 7).unwrap();
        assert!(r.pass, "{r:?}");
        let r = verify_morton(3, 1, 16, 7).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn verify_morton_b3() {
        let r = verify_morton(2, 3, 40, 7).unwrap();
        assert_eq!(r.computed_order, 36);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn equivariance_counterexample_exists() {
        let f = morton_family(2, 2);
        let base = solve_roots(&f(c(0.2384, 1.7362)), 3).unwrap();
        let dynamical = dynamical_permutation(&base, 2, c(0.2384, 1.7362)).unwrap();
        // Find some permutation that fails to centralize.
        let mut found = false;
        for i in 0..4 {
            for j in 0..i {
                let mut images: Vec<usize> = (0..4).collect();
                images.swap(i, j);
                let p = Permutation::new(images).unwrap();
                if !equivariance_check(&p, &dynamical) {
                    found = true;
                }
            }
        }
        assert!(found);
        assert!(equivariance_check(&Permutation::identity(4), &dynamical));
    }

    #[test]
    fn prep1_examples() {
        let r = prep1_cycle_check(2, 1, c(0.01, 0.0), 7).unwrap();
        assert!(r.periodic_fixed);
        assert_eq!(r.cluster_cycles, vec![1]);
        assert!(r.pass, "{r:?}");

        let r = prep1_cycle_check(3, 1, c(0.01, 0.0), 7).unwrap();
        assert_eq!(r.cluster_cycles, vec![2], "{r:?}");
        assert!(r.pass, "{r:?}");

        let r = prep1_cycle_check(3, 2, c(0.01, 0.0), 7).unwrap();
        assert_eq!(r.cluster_cycles, vec![2], "{r:?}");
        assert!(r.pass, "{r:?}");
    }
}
