//! Monodromy-move calculus on projective tuples of roots of unity, and
//! certificate-producing solvers for the transitivity of the move action on
//! the (pre)periodic points of the coordinate power map `g_{n,d}`.
//!
//! A certificate is a replayable sequence of two kinds of steps:
//!
//! * `Rescale` — multiply every coordinate by a fixed root of unity (the
//!   same projective point, a new representative);
//! * `Replace` — overwrite one coordinate with a value of the same orbit
//!   type under `z ↦ z^d`, legal only while some other coordinate (the
//!   chart) is exactly `1` in the current representative.
//!
//! Soundness is enforced by [`validate`], which replays a certificate step
//! by step and checks legality and orbit-type preservation at every moment.

use std::collections::{HashMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cyclo::{phi0_type, PrePeriod, RootOfUnityOrZero};
use crate::{Error, Result};

/// Hard cap on certificate length: `50·(n+1)` for points in `P^n`.
pub fn step_budget(n: usize) -> usize {
    50 * (n + 1)
}

/// A point of `P^n` all of whose coordinates are zero or roots of unity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CyclotomicProjPoint {
    pub coords: Vec<RootOfUnityOrZero>,
}

impl CyclotomicProjPoint {
    pub fn new(coords: Vec<RootOfUnityOrZero>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Precondition("a projective point needs at least 2 coordinates".into()));
        }
        if coords.iter().all(|c| c.is_zero()) {
            return Err(Error::Precondition("not all coordinates may be zero".into()));
        }
        Ok(CyclotomicProjPoint { coords })
    }

    /// Ambient dimension `n` (the point has `n+1` coordinates).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Representative with the last non-zero coordinate equal to `1`.
    pub fn canonical(&self) -> Vec<RootOfUnityOrZero> {
        canonicalize(&self.coords)
    }

    /// Equal as projective points.
    pub fn same_point(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }

    /// One application of the coordinate power map `g_{n,d}`.
    pub fn step(&self, d: u64) -> Self {
        CyclotomicProjPoint { coords: self.coords.iter().map(|c| c.pow(d)).collect() }
    }

    /// Exact preperiod and period under `g_{n,d}`, by orbit detection on
    /// canonical forms.
    pub fn point_type(&self, d: u64) -> PrePeriod {
        let mut seen: HashMap<Vec<RootOfUnityOrZero>, u64> = HashMap::new();
        let mut cur = self.clone();
        let mut i = 0u64;
        loop {
            let key = cur.canonical();
            if let Some(&j) = seen.get(&key) {
                return PrePeriod::new(j, i - j);
            }
            seen.insert(key, i);
            cur = cur.step(d);
            i += 1;
        }
    }

    /// Parse `"[x0,x1,...,xn]"` with coordinates `"0"` or `"a/m"` (`"1"` ok).
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let inner = s
            .strip_prefix('[')
            .and_then(|t| t.strip_suffix(']'))
            .ok_or_else(|| Error::Usage(format!("bad point literal {s:?} (want \"[x0,...,xn]\")")))?;
        let coords = inner
            .split(',')
            .map(RootOfUnityOrZero::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(coords)
    }
}

impl std::fmt::Display for CyclotomicProjPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

fn canonicalize(coords: &[RootOfUnityOrZero]) -> Vec<RootOfUnityOrZero> {
    let k = coords
        .iter()
        .rposition(|c| !c.is_zero())
        .expect("projective point has a non-zero coordinate");
    let f = coords[k].inv();
    coords.iter().map(|c| c.mul(&f)).collect()
}

/// One step of a move certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MoveStep {
    /// Multiply every coordinate by `factor` (a non-zero root of unity).
    Rescale { factor: RootOfUnityOrZero },
    /// Overwrite coordinate `index` with `new_value`, in the chart where
    /// coordinate `chart` equals `1`.
    Replace { index: usize, chart: usize, new_value: RootOfUnityOrZero },
}

/// A replayable path between two points of the same orbit type.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MoveCertificate {
    pub d: u64,
    pub n: usize,
    pub start: CyclotomicProjPoint,
    pub steps: Vec<MoveStep>,
    pub end: CyclotomicProjPoint,
}

/// Outcome of replaying a certificate.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    /// Index of the first illegal step and the reason, if any.
    pub first_illegal: Option<(usize, String)>,
    /// Every representative visited, including start and end.
    pub intermediates: Vec<CyclotomicProjPoint>,
}

/// Whether replacing `old` by `new` is a legal single-coordinate move for
/// degree `d` (the chart condition is checked separately).
fn replace_value_legal(d: u64, old: &RootOfUnityOrZero, new: &RootOfUnityOrZero) -> std::result::Result<(), String> {
    let ty_old = phi0_type(old, d);
    let ty_new = phi0_type(new, d);
    if ty_old != ty_new {
        return Err(format!("period class changed: {old} has type {ty_old}, {new} has type {ty_new}"));
    }
    if old.is_zero() || new.is_zero() {
        // Passing through zero: always available between fixed points of the
        // power map (both values then have type (0,1)), and for d = 2 also
        // along the preperiodic chains. With type equality already enforced
        // the only zero moves are exchanges with fixed points, so this only
        // rejects nothing in practice; keep the check for clarity.
        if d != 2 && ty_old.preperiod != 0 {
            return Err(format!("zero passage with non-periodic type {ty_old} requires d = 2"));
        }
    }
    Ok(())
}

/// Replay a certificate and check every step.
///
/// Illegality is a report outcome, not an error: the report carries the
/// first offending step and the reason.
pub fn validate(cert: &MoveCertificate) -> ValidationReport {
    let mut intermediates = vec![cert.start.clone()];
    let mut coords = cert.start.coords.clone();
    let base_type = cert.start.point_type(cert.d);
    let fail = |i: usize, why: String, intermediates: Vec<CyclotomicProjPoint>| ValidationReport {
        ok: false,
        first_illegal: Some((i, why)),
        intermediates,
    };
    if coords.len() != cert.n + 1 {
        return fail(0, format!("start has {} coordinates, expected n+1 = {}", coords.len(), cert.n + 1), intermediates);
    }
    for (i, step) in cert.steps.iter().enumerate() {
        match step {
            MoveStep::Rescale { factor } => {
                if factor.is_zero() {
                    return fail(i, "rescale factor must be a non-zero root of unity".into(), intermediates);
                }
                for c in coords.iter_mut() {
                    *c = c.mul(factor);
                }
            }
            MoveStep::Replace { index, chart, new_value } => {
                if *index >= coords.len() || *chart >= coords.len() || index == chart {
                    return fail(i, format!("bad indices: index {index}, chart {chart}"), intermediates);
                }
                if !coords[*chart].is_one() {
                    return fail(
                        i,
                        format!("chart not normalized: coordinate {chart} is {} (must be 1)", coords[*chart]),
                        intermediates,
                    );
                }
                if let Err(why) = replace_value_legal(cert.d, &coords[*index], new_value) {
                    return fail(i, why, intermediates);
                }
                coords[*index] = *new_value;
            }
        }
        if coords.iter().all(|c| c.is_zero()) {
            return fail(i, "all coordinates became zero".into(), intermediates);
        }
        let here = CyclotomicProjPoint { coords: coords.clone() };
        let ty = here.point_type(cert.d);
        if ty != base_type {
            return fail(i, format!("orbit type changed from {base_type} to {ty}"), intermediates);
        }
        intermediates.push(here);
    }
    let end_state = CyclotomicProjPoint { coords };
    if !end_state.same_point(&cert.end) {
        return fail(cert.steps.len(), format!("replay ends at {end_state}, not at {}", cert.end), intermediates);
    }
    ValidationReport { ok: true, first_illegal: None, intermediates }
}

/// Alias kept close to the module surface: preperiod/period of a point.
pub fn point_type(p: &CyclotomicProjPoint, d: u64) -> PrePeriod {
    p.point_type(d)
}

// ---------------------------------------------------------------------------
// Alphabet of candidate coordinate values for a fixed (d, a, b).
// ---------------------------------------------------------------------------

/// Precomputed tables over all zero-or-root values whose order divides
/// `d^a (d^b - 1)`; every coordinate of every intermediate point of a
/// type-(a,b) certificate lives here.
struct Alphabet {
    values: Vec<RootOfUnityOrZero>,
    index: HashMap<RootOfUnityOrZero, u32>,
    types: Vec<PrePeriod>,
    inv: Vec<u32>,
    /// Dense multiplication table, row-major.
    mul: Vec<u32>,
    /// Value indices per orbit type.
    classes: HashMap<PrePeriod, Vec<u32>>,
    one: u32,
    zero: u32,
}

impl Alphabet {
    fn build(d: u64, ty: PrePeriod, limit: u64) -> Result<Alphabet> {
        let modulus = (d as u128).pow(ty.preperiod as u32) * ((d as u128).pow(ty.period as u32) - 1);
        if modulus > limit as u128 {
            return Err(Error::EnumerationBound { required: modulus, limit });
        }
        let modulus = modulus as u64;
        let mut values = vec![RootOfUnityOrZero::Zero];
        for a in 0..modulus {
            values.push(RootOfUnityOrZero::from_turn(a, modulus));
        }
        values.sort_unstable();
        values.dedup();
        let index: HashMap<_, _> = values.iter().enumerate().map(|(i, v)| (*v, i as u32)).collect();
        let types: Vec<PrePeriod> = values.iter().map(|v| phi0_type(v, d)).collect();
        let inv: Vec<u32> = values.iter().map(|v| index[&v.inv()]).collect();
        let a = values.len();
        let mut mul = vec![0u32; a * a];
        for i in 0..a {
            for j in 0..=i {
                let p = index[&values[i].mul(&values[j])];
                mul[i * a + j] = p;
                mul[j * a + i] = p;
            }
        }
        let mut classes: HashMap<PrePeriod, Vec<u32>> = HashMap::new();
        for (i, t) in types.iter().enumerate() {
            classes.entry(*t).or_default().push(i as u32);
        }
        let one = index[&RootOfUnityOrZero::one()];
        let zero = index[&RootOfUnityOrZero::Zero];
        Ok(Alphabet { values, index, types, inv, mul, classes, one, zero })
    }

    #[inline]
    fn mul(&self, i: u32, j: u32) -> u32 {
        self.mul[i as usize * self.values.len() + j as usize]
    }

    fn contains(&self, v: &RootOfUnityOrZero) -> bool {
        self.index.contains_key(v)
    }
}

// ---------------------------------------------------------------------------
// Certificate solver: route every point of a type class to a canonical point.
// ---------------------------------------------------------------------------

/// Working state during routing: a representative plus the recorded steps.
struct Router<'a> {
    alpha: &'a Alphabet,
    coords: Vec<u32>,
    steps: Vec<MoveStep>,
}

impl<'a> Router<'a> {
    fn rescale(&mut self, f: u32) {
        if f == self.alpha.one {
            return;
        }
        assert_ne!(f, self.alpha.zero);
        for c in self.coords.iter_mut() {
            *c = self.alpha.mul(*c, f);
        }
        self.steps.push(MoveStep::Rescale { factor: self.alpha.values[f as usize] });
    }

    fn replace(&mut self, index: usize, new_value: u32, chart: usize) {
        debug_assert_eq!(self.coords[chart], self.alpha.one);
        debug_assert_ne!(index, chart);
        self.coords[index] = new_value;
        self.steps.push(MoveStep::Replace {
            index,
            chart,
            new_value: self.alpha.values[new_value as usize],
        });
    }

    /// Index (other than `target`) whose coordinate currently equals `value`.
    fn chart_with_value(&self, target: usize, value: u32) -> Option<usize> {
        self.coords.iter().position(|&c| c == value).and_then(|_| {
            (0..self.coords.len()).find(|&i| i != target && self.coords[i] == value)
        })
    }
}

/// One pairwise BFS move: rewrite coordinate `target` relative to a chart.
#[derive(Clone, Copy)]
struct PairMove {
    /// 0 = first tracked coordinate, 1 = second.
    which: u8,
    chart_value: u32,
    new_rel: u32,
}

/// Connect `P` to `Q` by a validating certificate; both must have orbit type
/// `ty` under `g_{n,d}`. The solver routes each endpoint to a shared
/// canonical point and splices the two paths.
fn connect_typed(
    p: &CyclotomicProjPoint,
    q: &CyclotomicProjPoint,
    d: u64,
    ty: PrePeriod,
    limit: u64,
) -> Result<MoveCertificate> {
    let n = p.dim();
    if q.dim() != n {
        return Err(Error::Precondition("points live in different projective spaces".into()));
    }
    if n < 2 {
        return Err(Error::Precondition(
            "the move calculus needs n >= 2 (for n = 1 use the numerical monodromy engine)".into(),
        ));
    }
    let tp = p.point_type(d);
    let tq = q.point_type(d);
    if tp != tq {
        return Err(Error::TypeMismatch(tp, tq));
    }
    if tp != ty {
        return Err(Error::TypeMismatch(tp, ty));
    }

    // Same projective point: at most one rescale.
    if p.same_point(q) {
        let kp = p.coords.iter().rposition(|c| !c.is_zero()).unwrap();
        let f = q.coords[kp].mul(&p.coords[kp].inv());
        let steps = if p.coords == q.coords {
            vec![]
        } else {
            vec![MoveStep::Rescale { factor: f }]
        };
        return finish_cert(p, q, d, n, steps);
    }

    let alpha = Alphabet::build(d, ty, limit)?;
    let steps_p = route_to_canonical(p, d, ty, &alpha)?;
    let steps_q = route_to_canonical(q, d, ty, &alpha)?;
    let mut steps = steps_p;
    steps.extend(invert_steps(q, &steps_q, d));
    finish_cert(p, q, d, n, steps)
}

fn finish_cert(
    p: &CyclotomicProjPoint,
    q: &CyclotomicProjPoint,
    d: u64,
    n: usize,
    steps: Vec<MoveStep>,
) -> Result<MoveCertificate> {
    if steps.len() > step_budget(n) {
        return Err(Error::StepBudget(step_budget(n)));
    }
    let cert = MoveCertificate { d, n, start: p.clone(), steps, end: q.clone() };
    let report = validate(&cert);
    if !report.ok {
        let (i, why) = report.first_illegal.unwrap();
        return Err(Error::Unreachable(format!("solver produced an invalid certificate at step {i}: {why}")));
    }
    Ok(cert)
}

/// Invert a step list that starts at `start`, yielding the reversed path.
fn invert_steps(start: &CyclotomicProjPoint, steps: &[MoveStep], _d: u64) -> Vec<MoveStep> {
    // Replay to learn each overwritten value, then reverse and invert.
    let mut coords = start.coords.clone();
    let mut forward: Vec<(MoveStep, Option<RootOfUnityOrZero>)> = Vec::with_capacity(steps.len());
    for step in steps {
        match step {
            MoveStep::Rescale { factor } => {
                for c in coords.iter_mut() {
                    *c = c.mul(factor);
                }
                forward.push((step.clone(), None));
            }
            MoveStep::Replace { index, new_value, .. } => {
                let old = coords[*index];
                coords[*index] = *new_value;
                forward.push((step.clone(), Some(old)));
            }
        }
    }
    forward
        .into_iter()
        .rev()
        .map(|(step, old)| match step {
            MoveStep::Rescale { factor } => MoveStep::Rescale { factor: factor.inv() },
            MoveStep::Replace { index, chart, .. } => {
                MoveStep::Replace { index, chart, new_value: old.unwrap() }
            }
        })
        .collect()
}

/// Canonical coordinate value of orbit type exactly `(a, b)`: a primitive
/// root of order `r·(d^b − 1)` with `r` the smallest power of the least
/// prime factor of `d` forcing preperiod `a`.
pub fn canonical_value(d: u64, ty: PrePeriod) -> RootOfUnityOrZero {
    let m0 = d.pow(ty.period as u32) - 1;
    let p = (2..=d).find(|p| d % p == 0).unwrap();
    let vp = {
        let mut v = 0u32;
        let mut dd = d;
        while dd % p == 0 {
            dd /= p;
            v += 1;
        }
        v
    };
    let r = p.pow(ty.preperiod as u32 * vp);
    let m = r * m0;
    let w = if m == 1 { RootOfUnityOrZero::one() } else { RootOfUnityOrZero::from_turn(1, m) };
    debug_assert_eq!(phi0_type(&w, d), ty);
    w
}

/// The canonical point `[w, 1, …, 1]` of a type class.
pub fn canonical_point(d: u64, n: usize, ty: PrePeriod) -> CyclotomicProjPoint {
    let mut coords = vec![RootOfUnityOrZero::one(); n + 1];
    coords[0] = canonical_value(d, ty);
    CyclotomicProjPoint { coords }
}

/// Route `p` to the canonical point of its class; returns the step list.
fn route_to_canonical(
    p: &CyclotomicProjPoint,
    d: u64,
    ty: PrePeriod,
    alpha: &Alphabet,
) -> Result<Vec<MoveStep>> {
    for c in &p.coords {
        if !alpha.contains(c) {
            return Err(Error::Precondition(format!(
                "coordinate {c} has order outside the type-{ty} alphabet"
            )));
        }
    }
    let n = p.dim();
    let mut orders: Vec<Vec<usize>> = vec![(1..n).collect()];
    if n > 2 {
        orders.push((1..n).rev().collect());
    }
    let mut last_err = None;
    for order in orders {
        match route_with_order(p, d, ty, alpha, &order) {
            Ok(steps) => return Ok(steps),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap())
}

fn route_with_order(
    p: &CyclotomicProjPoint,
    d: u64,
    ty: PrePeriod,
    alpha: &Alphabet,
    order: &[usize],
) -> Result<Vec<MoveStep>> {
    let n = p.dim();
    let mut r = Router {
        alpha,
        coords: p.coords.iter().map(|c| alpha.index[c]).collect(),
        steps: Vec::new(),
    };

    // Phase 1: clear zeros, then normalize the last coordinate to 1.
    if r.coords.iter().any(|&c| c == alpha.zero) {
        if !r.coords.contains(&alpha.one) {
            let k = r.coords.iter().rposition(|&c| c != alpha.zero).unwrap();
            let f = alpha.inv[r.coords[k] as usize];
            r.rescale(f);
        }
        for j in 0..=n {
            if r.coords[j] == alpha.zero {
                let chart = r
                    .chart_with_value(j, alpha.one)
                    .expect("a unit coordinate exists after normalization");
                r.replace(j, alpha.one, chart);
            }
        }
    }
    if r.coords[n] != alpha.one {
        let f = alpha.inv[r.coords[n] as usize];
        r.rescale(f);
    }

    // Phase 2: drive each coordinate 1..n-1 to the value 1, letting the
    // orbit-type weight accumulate on coordinate 0.
    for &j in order {
        if r.coords[j] == alpha.one {
            continue;
        }
        let path = pair_bfs(&r, d, ty, j)?;
        apply_pair_path(&mut r, j, &path);
    }

    // Phase 3: coordinate 0 now carries the full type; set it to the
    // canonical value.
    let w = alpha.index[&canonical_value(d, ty)];
    if r.coords[0] != w {
        r.replace(0, w, n);
    }
    debug_assert!(r.coords.iter().skip(1).all(|&c| c == alpha.one));
    Ok(r.steps)
}

/// Breadth-first search over the joint states of coordinates `(0, j)`,
/// holding every other coordinate fixed, until coordinate `j` equals 1.
/// Every visited state keeps the whole point in the orbit-type class `ty`.
fn pair_bfs(r: &Router<'_>, d: u64, ty: PrePeriod, j: usize) -> Result<Vec<PairMove>> {
    let alpha = r.alpha;
    let a = alpha.values.len();
    let allow_zero = d == 2;

    // Combined type of the frozen coordinates.
    let mut frozen = PrePeriod::new(0, 1);
    for (k, &c) in r.coords.iter().enumerate() {
        if k != 0 && k != j {
            frozen = frozen.combine(&alpha.types[c as usize]);
        }
    }
    // Chart values offered by frozen coordinates (the dynamic pair adds its
    // own values per state).
    let mut static_charts: Vec<u32> = r
        .coords
        .iter()
        .enumerate()
        .filter(|&(k, &c)| k != 0 && k != j && c != alpha.zero)
        .map(|(_, &c)| c)
        .collect();
    static_charts.sort_unstable();
    static_charts.dedup();

    let start = (r.coords[0] as usize) * a + r.coords[j] as usize;
    let mut prev: Vec<(u32, PairMove)> = vec![(u32::MAX, PairMove { which: 0, chart_value: 0, new_rel: 0 }); a * a];
    let mut seen = vec![false; a * a];
    let mut queue = VecDeque::new();
    seen[start] = true;
    queue.push_back(start as u32);
    let goal_col = alpha.one as usize;

    let mut goal: Option<usize> = None;
    'bfs: while let Some(state) = queue.pop_front() {
        let state = state as usize;
        let (x0, xj) = ((state / a) as u32, (state % a) as u32);
        if xj as usize == goal_col {
            goal = Some(state);
            break;
        }
        let mut charts = static_charts.clone();
        for extra in [x0, xj] {
            if extra != alpha.zero && !charts.contains(&extra) {
                charts.push(extra);
            }
        }
        for which in 0..2u8 {
            let (xt, other) = if which == 0 { (x0, xj) } else { (xj, x0) };
            for &cv in &charts {
                // The chart must be a coordinate other than the target; the
                // partner coordinate or a frozen one can supply it.
                if cv == xt && !static_charts.contains(&cv) && other != cv {
                    continue;
                }
                let cv_inv = alpha.inv[cv as usize];
                let rel = alpha.mul(xt, cv_inv);
                let rel_ty = alpha.types[rel as usize];
                let class = match alpha.classes.get(&rel_ty) {
                    Some(c) => c,
                    None => continue,
                };
                for &w_rel in class {
                    if w_rel == rel {
                        continue;
                    }
                    let zero_involved = rel == alpha.zero || w_rel == alpha.zero;
                    if zero_involved && !allow_zero && rel_ty.preperiod != 0 {
                        continue;
                    }
                    if w_rel == alpha.zero && !allow_zero {
                        // Do not introduce zeros for d > 2; endpoints force
                        // them only in the clearing phase.
                        continue;
                    }
                    let xt_new = alpha.mul(w_rel, cv);
                    let (y0, yj) = if which == 0 { (xt_new, other) } else { (other, xt_new) };
                    if y0 == alpha.zero && yj == alpha.zero && frozen == PrePeriod::new(0, 1) {
                        // Guard only matters when all frozen coords are zero,
                        // which cannot happen (coordinate n is fixed at 1).
                    }
                    let new_ty = frozen
                        .combine(&alpha.types[y0 as usize])
                        .combine(&alpha.types[yj as usize]);
                    if new_ty != ty {
                        continue;
                    }
                    let ns = (y0 as usize) * a + yj as usize;
                    if !seen[ns] {
                        seen[ns] = true;
                        prev[ns] = (state as u32, PairMove { which, chart_value: cv, new_rel: w_rel });
                        if yj as usize == goal_col {
                            goal = Some(ns);
                            break 'bfs;
                        }
                        queue.push_back(ns as u32);
                    }
                }
            }
        }
    }

    let goal = goal.ok_or_else(|| {
        Error::Unreachable(format!(
            "pairwise search could not normalize coordinate {j} (type {ty}, d = {d})"
        ))
    })?;
    let mut path = Vec::new();
    let mut cur = goal;
    while cur != start {
        let (p, mv) = prev[cur];
        path.push(mv);
        cur = p as usize;
    }
    path.reverse();
    Ok(path)
}

/// Expand a pairwise path into raw certificate steps on the full point.
fn apply_pair_path(r: &mut Router<'_>, j: usize, path: &[PairMove]) {
    let alpha = r.alpha;
    for mv in path {
        let target = if mv.which == 0 { 0 } else { j };
        let cv = mv.chart_value;
        let new_abs = alpha.mul(mv.new_rel, cv);
        if cv == alpha.one {
            let chart = r.chart_with_value(target, alpha.one).expect("chart value present");
            r.replace(target, new_abs, chart);
        } else {
            let cv_inv = alpha.inv[cv as usize];
            r.rescale(cv_inv);
            let chart = r.chart_with_value(target, alpha.one).expect("chart value present");
            r.replace(target, mv.new_rel, chart);
            r.rescale(cv);
        }
    }
}

// ---------------------------------------------------------------------------
// Public connectors and surveys.
// ---------------------------------------------------------------------------

/// Certificate connecting two periodic points of exact period `b`.
pub fn connect_periodic(
    p: &CyclotomicProjPoint,
    q: &CyclotomicProjPoint,
    d: u64,
    b: u64,
) -> Result<MoveCertificate> {
    connect_typed(p, q, d, PrePeriod::new(0, b), crate::cyclo::DEFAULT_ENUM_BOUND)
}

/// Certificate connecting two preperiodic points of type `(a, b)`, `a ≥ 1`.
pub fn connect_preperiodic(
    p: &CyclotomicProjPoint,
    q: &CyclotomicProjPoint,
    d: u64,
    a: u64,
    b: u64,
) -> Result<MoveCertificate> {
    if a == 0 {
        return Err(Error::Precondition("use connect_periodic for preperiod 0".into()));
    }
    connect_typed(p, q, d, PrePeriod::new(a, b), crate::cyclo::DEFAULT_ENUM_BOUND)
}

/// Enumerate `prep_{g_{n,d}}(a, b)`: all points of `P^n` with zero-or-root
/// coordinates and orbit type exactly `(a, b)`, in canonical form.
pub fn enumerate_class(d: u64, n: usize, ty: PrePeriod, limit: u64) -> Result<Vec<CyclotomicProjPoint>> {
    let alpha = Alphabet::build(d, ty, limit)?;
    let a = alpha.values.len();
    let total: u128 = (0..=n).map(|k| (a as u128).pow(k as u32)).sum();
    if total > limit as u128 {
        return Err(Error::EnumerationBound { required: total, limit });
    }
    let mut out = Vec::new();
    // Canonical reps: coordinate k is the last non-zero one and equals 1.
    for k in 0..=n {
        let mut idx = vec![0u32; k];
        loop {
            let mut combined = PrePeriod::new(0, 1);
            for &i in &idx {
                combined = combined.combine(&alpha.types[i as usize]);
            }
            if combined == ty {
                let mut coords: Vec<RootOfUnityOrZero> =
                    idx.iter().map(|&i| alpha.values[i as usize]).collect();
                coords.push(RootOfUnityOrZero::one());
                coords.resize(n + 1, RootOfUnityOrZero::Zero);
                out.push(CyclotomicProjPoint { coords });
            }
            // Odometer.
            let mut pos = 0;
            loop {
                if pos == k {
                    break;
                }
                idx[pos] += 1;
                if (idx[pos] as usize) < a {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    }
    Ok(out)
}

/// A random point of orbit type `ty` (canonical form), by rejection.
pub fn sample_class<R: Rng>(
    d: u64,
    n: usize,
    ty: PrePeriod,
    limit: u64,
    rng: &mut R,
) -> Result<CyclotomicProjPoint> {
    let alpha = Alphabet::build(d, ty, limit)?;
    let a = alpha.values.len();
    for _ in 0..1_000_000 {
        let k = rng.gen_range(0..=n);
        let mut combined = PrePeriod::new(0, 1);
        let mut coords = Vec::with_capacity(n + 1);
        for _ in 0..k {
            let i = rng.gen_range(0..a) as u32;
            combined = combined.combine(&alpha.types[i as usize]);
            coords.push(alpha.values[i as usize]);
        }
        if combined != ty {
            continue;
        }
        coords.push(RootOfUnityOrZero::one());
        coords.resize(n + 1, RootOfUnityOrZero::Zero);
        return Ok(CyclotomicProjPoint { coords });
    }
    Err(Error::Unreachable(format!("could not sample a point of type {ty}")))
}

/// Batch driver over the connectors: connect many same-type pairs and
/// report success statistics.
#[derive(Debug, Clone, Serialize)]
pub struct SurveyReport {
    pub d: u64,
    pub n: usize,
    pub preperiod: u64,
    pub period: u64,
    pub class_size: Option<usize>,
    pub pairs_attempted: usize,
    pub pairs_connected: usize,
    pub success_rate: f64,
    pub max_certificate_len: usize,
    /// step-count histogram as (length, count), ascending.
    pub step_histogram: Vec<(usize, usize)>,
    pub exhaustive: bool,
}

/// Run the appropriate connector over same-type pairs.
///
/// If the class can be enumerated and has at most `exhaustive_cap` points,
/// every point is routed to the canonical point (which connects all pairs by
/// composition) and additionally `sample` random pairs are connected
/// end-to-end and validated. Otherwise `sample` seeded random pairs are
/// connected directly.
pub fn transitivity_survey(
    d: u64,
    n: usize,
    a: u64,
    b: u64,
    sample: usize,
    seed: u64,
    exhaustive_cap: usize,
) -> Result<SurveyReport> {
    use rand::SeedableRng;
    let ty = PrePeriod::new(a, b);
    let limit = crate::cyclo::DEFAULT_ENUM_BOUND;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let class = match enumerate_class(d, n, ty, limit.min(2_000_000)) {
        Ok(c) => Some(c),
        Err(Error::EnumerationBound { .. }) => None,
        Err(e) => return Err(e),
    };
    let class_size = class.as_ref().map(|c| c.len());
    if let Some(0) = class_size {
        return Err(Error::Precondition(format!("prep_{{g_{{{n},{d}}}}}{ty} is empty")));
    }

    let mut attempted = 0usize;
    let mut connected = 0usize;
    let mut max_len = 0usize;
    let mut histogram: HashMap<usize, usize> = HashMap::new();
    let mut record = |cert: &MoveCertificate, ok: bool, attempted: &mut usize, connected: &mut usize| {
        *attempted += 1;
        if ok {
            *connected += 1;
            max_len = max_len.max(cert.steps.len());
            *histogram.entry(cert.steps.len()).or_default() += 1;
        }
    };

    let connect = |p: &CyclotomicProjPoint, q: &CyclotomicProjPoint| -> Result<MoveCertificate> {
        connect_typed(p, q, d, ty, limit)
    };

    let exhaustive = matches!(class_size, Some(s) if s <= exhaustive_cap);
    if exhaustive {
        let class = class.as_ref().unwrap();
        let canon = canonical_point(d, n, ty);
        for p in class {
            let cert = connect(p, &canon)?;
            let ok = validate(&cert).ok;
            record(&cert, ok, &mut attempted, &mut connected);
        }
        // Spot-check composed pairs end to end.
        for _ in 0..sample.min(50) {
            let p = &class[rng.gen_range(0..class.len())];
            let q = &class[rng.gen_range(0..class.len())];
            let cert = connect(p, q)?;
            let ok = validate(&cert).ok;
            record(&cert, ok, &mut attempted, &mut connected);
        }
    } else {
        for _ in 0..sample.max(1) {
            let (p, q) = match class.as_ref() {
                Some(c) => {
                    (c[rng.gen_range(0..c.len())].clone(), c[rng.gen_range(0..c.len())].clone())
                }
                None => (
                    sample_class(d, n, ty, limit, &mut rng)?,
                    sample_class(d, n, ty, limit, &mut rng)?,
                ),
            };
            let cert = connect(&p, &q)?;
            let ok = validate(&cert).ok;
            record(&cert, ok, &mut attempted, &mut connected);
        }
    }

    let mut step_histogram: Vec<(usize, usize)> = histogram.into_iter().collect();
    step_histogram.sort_unstable();
    Ok(SurveyReport {
        d,
        n,
        preperiod: a,
        period: b,
        class_size,
        pairs_attempted: attempted,
        pairs_connected: connected,
        success_rate: connected as f64 / attempted.max(1) as f64,
        max_certificate_len: max_len,
        step_histogram,
        exhaustive,
    })
}

/// Period-by-period census of zero coordinates among periodic points.
#[derive(Debug, Clone, Serialize)]
pub struct RamificationCensus {
    pub d: u64,
    pub n: usize,
    /// Per period `b = 1..=b_max`: (points with a zero coordinate, points
    /// with none).
    pub rows: Vec<RamificationRow>,
    /// True iff every period admits an all-non-zero point.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RamificationRow {
    pub period: u64,
    pub with_zero: usize,
    pub without_zero: usize,
    /// A witness all-non-zero point, if any.
    pub witness: Option<CyclotomicProjPoint>,
}

/// For each `b ≤ b_max`, split `Per_{g_{n,d}}(b)` by whether a coordinate
/// vanishes; at least one zero-free point must exist for every period.
pub fn ramification_census(d: u64, n: usize, b_max: u64, limit: u64) -> Result<RamificationCensus> {
    let mut rows = Vec::new();
    for b in 1..=b_max {
        let class = enumerate_class(d, n, PrePeriod::new(0, b), limit)?;
        let mut with_zero = 0;
        let mut without = 0;
        let mut witness = None;
        for p in class {
            if p.coords.iter().any(|c| c.is_zero()) {
                with_zero += 1;
            } else {
                without += 1;
                if witness.is_none() {
                    witness = Some(p);
                }
            }
        }
        rows.push(RamificationRow { period: b, with_zero, without_zero: without, witness });
    }
    let pass = rows.iter().all(|r| r.without_zero > 0);
    Ok(RamificationCensus { d, n, rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::Zero;

    fn root(a: u64, m: u64) -> RootOfUnityOrZero {
        RootOfUnityOrZero::from_turn(a, m)
    }

    fn pt(coords: &[RootOfUnityOrZero]) -> CyclotomicProjPoint {
        CyclotomicProjPoint::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn point_type_examples() {
        let one = RootOfUnityOrZero::one();
        assert_eq!(pt(&[root(1, 3), one, one]).point_type(2), PrePeriod::new(0, 2));
        assert_eq!(pt(&[root(1, 2), root(1, 2), one]).point_type(2), PrePeriod::new(1, 1));
        assert_eq!(pt(&[Zero, one, one]).point_type(5), PrePeriod::new(0, 1));
    }

    #[test]
    fn validate_rejects_unnormalized_chart() {
        let one = RootOfUnityOrZero::one();
        let start = pt(&[root(1, 3), root(1, 3), one]);
        let cert = MoveCertificate {
            d: 2,
            n: 2,
            start: start.clone(),
            steps: vec![MoveStep::Replace { index: 0, chart: 1, new_value: root(2, 3) }],
            end: pt(&[root(2, 3), root(1, 3), one]),
        };
        let report = validate(&cert);
        assert!(!report.ok);
        assert!(report.first_illegal.unwrap().1.contains("chart not normalized"));
    }

    #[test]
    fn validate_rejects_type_change() {
        let one = RootOfUnityOrZero::one();
        let start = pt(&[root(1, 3), one, one]);
        let cert = MoveCertificate {
            d: 2,
            n: 2,
            start: start.clone(),
            steps: vec![MoveStep::Replace { index: 0, chart: 2, new_value: root(1, 7) }],
            end: pt(&[root(1, 7), one, one]),
        };
        let report = validate(&cert);
        assert!(!report.ok);
        assert!(report.first_illegal.unwrap().1.contains("period class changed"));
    }

    #[test]
    fn fixed_point_zero_swap() {
        // d=2, n=2, b=1: [1,1,1] -> [0,1,1] in a single replace.
        let one = RootOfUnityOrZero::one();
        let p = pt(&[one, one, one]);
        let q = pt(&[Zero, one, one]);
        let cert = connect_periodic(&p, &q, 2, 1).unwrap();
        assert!(validate(&cert).ok);
    }

    #[test]
    fn cubing_fixed_points() {
        // d=3, n=2, b=1: [-1,1,1] -> [1,-1,1].
        let one = RootOfUnityOrZero::one();
        let p = pt(&[root(1, 2), one, one]);
        let q = pt(&[one, root(1, 2), one]);
        let cert = connect_periodic(&p, &q, 3, 1).unwrap();
        assert!(validate(&cert).ok);
    }

    #[test]
    fn squaring_period_two() {
        let one = RootOfUnityOrZero::one();
        let p = pt(&[root(1, 3), one, one]);
        let q = pt(&[root(2, 3), root(2, 3), one]);
        let cert = connect_periodic(&p, &q, 2, 2).unwrap();
        assert!(validate(&cert).ok);
    }

    #[test]
    fn preperiodic_d2() {
        let one = RootOfUnityOrZero::one();
        let p = pt(&[root(1, 2), root(1, 2), one]);
        let q = pt(&[root(1, 2), one, one]);
        let cert = connect_preperiodic(&p, &q, 2, 1, 1).unwrap();
        assert!(validate(&cert).ok);
    }

    #[test]
    fn preperiodic_d3_order_six() {
        let one = RootOfUnityOrZero::one();
        let p = pt(&[root(1, 6), one, one]);
        let q = pt(&[one, root(5, 6), one]);
        let cert = connect_preperiodic(&p, &q, 3, 1, 1).unwrap();
        assert!(validate(&cert).ok);
    }

    #[test]
    fn identity_certificate_is_empty() {
        let one = RootOfUnityOrZero::one();
        let p = pt(&[root(1, 4), root(1, 4), one]);
        let cert = connect_preperiodic(&p, &p, 2, 2, 1).unwrap();
        assert!(cert.steps.is_empty());
        assert!(validate(&cert).ok);
    }

    #[test]
    fn type_mismatch_is_an_error() {
        let one = RootOfUnityOrZero::one();
        let p = pt(&[root(1, 3), one, one]);
        let q = pt(&[one, one, one]);
        assert!(matches!(connect_periodic(&p, &q, 2, 2), Err(Error::TypeMismatch(..))));
    }

    #[test]
    fn enumerate_class_small() {
        // Fixed points of squaring on P^2: coords in {0,1}, not all zero.
        let class = enumerate_class(2, 2, PrePeriod::new(0, 1), 10_000).unwrap();
        assert_eq!(class.len(), 7);
        // Period 2, d=2, n=2.
        let class = enumerate_class(2, 2, PrePeriod::new(0, 2), 10_000).unwrap();
        for p in &class {
            assert_eq!(p.point_type(2), PrePeriod::new(0, 2));
        }
        assert!(!class.is_empty());
    }

    #[test]
    fn survey_small_grid() {
        for (d, n, a, b) in [(2, 2, 0, 2), (2, 2, 1, 1), (3, 2, 0, 1), (3, 2, 1, 1), (2, 3, 0, 1)] {
            let rep = transitivity_survey(d, n, a, b, 20, 1, 5000).unwrap();
            assert_eq!(rep.pairs_connected, rep.pairs_attempted, "(d,n,a,b)=({d},{n},{a},{b})");
            assert!(rep.success_rate == 1.0);
        }
    }

    #[test]
    fn ramification_census_examples() {
        let census = ramification_census(2, 2, 3, 1_000_000).unwrap();
        assert!(census.pass);
        let b3 = &census.rows[2];
        assert!(b3.without_zero > 0);
        let census = ramification_census(3, 2, 2, 1_000_000).unwrap();
        assert!(census.pass);
    }

    #[test]
    fn rescale_preserves_point() {
        let one = RootOfUnityOrZero::one();
        let p = pt(&[root(1, 3), one, one]);
        let cert = MoveCertificate {
            d: 2,
            n: 2,
            start: p.clone(),
            steps: vec![MoveStep::Rescale { factor: root(1, 3) }],
            end: p.clone(),
        };
        assert!(validate(&cert).ok);
    }
}
