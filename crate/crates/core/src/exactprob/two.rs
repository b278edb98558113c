//! Two suspects at distance `d`.
//!
//! Let `v_0 = s*, v_1, …, v_d = s₂` be the path between the suspects and
//! `Z_h = |T_{v_h}^{s*}|`. Then `R(s₂)/R(s*) = ∏ Z_h/(n - Z_h)`, and the
//! `Z_h` form a Markov chain (see [`crate::urn::path_chain_joint`]). The
//! estimator errs when the product exceeds 1 and ties when it equals 1.
//!
//! The enumeration walks chain prefixes `z_1 > z_2 > …` and cuts a branch as
//! soon as its outcome is settled:
//!
//! * `z_h ≤ d - h`: the chain hits 0 before level `d`, so `s₂` is never
//!   infected;
//! * prefix product `≤ 1`: `log R` is strictly concave along the path, so an
//!   error at `d` would need every prefix product to exceed 1;
//! * even the largest possible remaining factors cannot lift the product to
//!   1;
//! * even the smallest possible remaining factors keep it above 1, so every
//!   continuation that reaches `s₂` is an error.
//!
//! The last level is never enumerated: the error set is a tail `z_d ≥ t`.
//!
//! Exact arithmetic keeps integer numerators. Level-1 weights share the
//! denominator `D₁ = rising(δ, δ-2, n-1)`; each later transition is scaled to
//! the common denominator `L = rising(δ-1, δ-2, n-2)`, so a weight after `h`
//! levels sits over `D₁·L^(h-1)`.

use std::cell::OnceCell;
use std::collections::BinaryHeap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{check_delta, check_n, DetectionResult, Method, Scenario};
use crate::error::{Error, Result};
use crate::probability::{rational_to_f64, Arithmetic, CompensatedSum, Probability};
use crate::urn::{binomial_row, ln_binomial, ln_rising, prefix_rising, rising, tree_split_marginal_table, Masses};

/// Default cap on the number of chain prefixes visited.
pub const DEFAULT_CHAIN_BUDGET: u64 = 20_000_000;

const LOG_MARGIN: f64 = 1e-9;

trait Weight: Clone {
    type Acc: Default + Clone;
    fn nil() -> Self;
    fn ident() -> Self;
    /// Natural log of the weight as a plain number.
    fn ln(&self) -> f64;
    fn is_nil(&self) -> bool;
    fn mul(&self, o: &Self) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn acc(acc: &mut Self::Acc, v: &Self);
}

impl Weight for BigUint {
    type Acc = BigUint;
    fn nil() -> Self {
        Zero::zero()
    }
    fn ident() -> Self {
        One::one()
    }
    fn ln(&self) -> f64 {
        let shift = self.bits().saturating_sub(64);
        let top = u64::try_from(&(self >> shift)).map_or(0.0, |v| v as f64);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn acc(acc: &mut BigUint, v: &Self) {
        *acc += v;
    }
}

impl Weight for f64 {
    type Acc = CompensatedSum;
    fn nil() -> Self {
        0.0
    }
    fn ident() -> Self {
        1.0
    }
    fn ln(&self) -> f64 {
        f64::ln(*self)
    }
    fn is_nil(&self) -> bool {
        *self == 0.0
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        (self - o).max(0.0)
    }
    fn acc(acc: &mut CompensatedSum, v: &Self) {
        acc.add(*v);
    }
}

struct Row<W> {
    val: Vec<W>,
    /// `tail[t] = Σ_{x ≥ t} val[x]`, with `tail[len] = 0`.
    tail: Vec<W>,
}

impl<W: Weight> Row<W> {
    fn new(val: Vec<W>) -> Self {
        let mut tail = vec![W::nil(); val.len() + 1];
        for x in (0..val.len()).rev() {
            tail[x] = tail[x + 1].add(&val[x]);
        }
        Row { val, tail }
    }
}

/// Produces transition rows `P(Z_h = x | Z_{h-1} = z)` in a given arithmetic.
trait RowSource<W> {
    fn level1(&self) -> Row<W>;
    fn step(&self, z: u32) -> Row<W>;
    /// The unit weight at each level (`L` in exact mode, 1 in float mode).
    fn unit(&self) -> W;
}

struct ExactRows {
    delta: u64,
    n: u32,
    own: Vec<BigUint>,
    other: Vec<BigUint>,
    /// `scale[z] = L / rising(δ-1, ε, z-1)`.
    scale: Vec<BigUint>,
    unit: BigUint,
}

impl ExactRows {
    fn new(delta: u32, n: u32) -> Self {
        let eps = delta as u64 - 2;
        let m = n.saturating_sub(2) as u64;
        let mut scale = vec![BigUint::one(); n as usize];
        for z in (1..n.saturating_sub(1) as usize).rev() {
            scale[z] = &scale[z + 1] * (delta as u64 - 1 + (z as u64 - 1) * eps);
        }
        ExactRows {
            delta: delta as u64,
            n,
            own: prefix_rising(1, eps, m),
            other: prefix_rising(delta as u64 - 2, eps, m),
            scale,
            unit: rising(delta as u64 - 1, eps, m),
        }
    }
}

impl RowSource<BigUint> for ExactRows {
    fn level1(&self) -> Row<BigUint> {
        match tree_split_marginal_table(self.delta as u32, self.n, Arithmetic::Exact) {
            Ok(Masses::Exact { num, .. }) => Row::new(num),
            _ => unreachable!("exact table requested"),
        }
    }

    fn step(&self, z: u32) -> Row<BigUint> {
        let m = z as usize - 1;
        let binom = binomial_row(m as u64);
        let val = (0..=m).map(|x| &binom[x] * &self.own[x] * &self.other[m - x] * &self.scale[z as usize]).collect();
        Row::new(val)
    }

    fn unit(&self) -> BigUint {
        self.unit.clone()
    }
}

struct FloatRows {
    delta: u32,
    n: u32,
}

impl RowSource<f64> for FloatRows {
    fn level1(&self) -> Row<f64> {
        match tree_split_marginal_table(self.delta, self.n, Arithmetic::Float) {
            Ok(Masses::Float(v)) => Row::new(v),
            _ => unreachable!("float table requested"),
        }
    }

    fn step(&self, z: u32) -> Row<f64> {
        let eps = self.delta as u64 - 2;
        let m = z as u64 - 1;
        let ln_den = ln_rising(self.delta as u64 - 1, eps, m);
        let val = (0..=m)
            .map(|x| {
                (ln_binomial(m, x) + ln_rising(1, eps, x) + ln_rising(self.delta as u64 - 2, eps, m - x) - ln_den).exp()
            })
            .collect();
        Row::new(val)
    }

    fn unit(&self) -> f64 {
        1.0
    }
}

#[derive(Clone, Copy)]
enum Cat {
    StrictError,
    Tie,
    SuccessInfected,
    ZeroBranch,
    PrunedSuccess,
    Unresolved,
}

const CATS: usize = 6;

struct Tally<W: Weight> {
    /// `by_depth[cat][h]`: weights over `D₁·L^(h-1)`.
    by_depth: Vec<Vec<W::Acc>>,
}

impl<W: Weight> Tally<W> {
    fn new(d: usize) -> Self {
        Tally { by_depth: vec![vec![W::Acc::default(); d + 1]; CATS] }
    }

    fn add(&mut self, cat: Cat, depth: usize, v: &W) {
        if !v.is_nil() {
            W::acc(&mut self.by_depth[cat as usize][depth], v);
        }
    }
}

struct State<W> {
    depth: usize,
    z: u32,
    p: BigUint,
    q: BigUint,
    ln_pi: f64,
    mass: W,
    ln_mass: f64,
}

struct Engine<W: Weight, S: RowSource<W>> {
    d: usize,
    n: u32,
    source: S,
    level1: Row<W>,
    rows: Vec<OnceCell<Row<W>>>,
    /// `reach[r][z]`: weight (over `L^r`) of reaching level `+r` with a
    /// non-empty subtree from `z`.
    reach: Vec<Option<Vec<W>>>,
    unit_powers: Vec<W>,
    ln_d1: f64,
    ln_unit: f64,
    ln_ratio_cum: Vec<f64>,
    tally: Tally<W>,
    visited: u64,
}

enum Outcome<W> {
    Resolved,
    Children(Vec<State<W>>),
}

impl<W: Weight, S: RowSource<W>> Engine<W, S> {
    fn new(d: u32, n: u32, source: S) -> Self {
        let d = d as usize;
        let level1 = source.level1();
        let unit = source.unit();
        let mut unit_powers = Vec::with_capacity(d + 1);
        let mut acc = W::ident();
        for _ in 0..=d {
            unit_powers.push(acc.clone());
            acc = acc.mul(&unit);
        }
        let ln_d1 = level1.tail[0].ln();
        let ln_unit = unit.ln();
        let mut ln_ratio_cum = vec![0.0; n as usize];
        for z in 1..n as usize {
            ln_ratio_cum[z] = ln_ratio_cum[z - 1] + (z as f64).ln() - ((n as usize - z) as f64).ln();
        }
        Engine {
            d,
            n,
            source,
            level1,
            rows: (0..n).map(|_| OnceCell::new()).collect(),
            reach: vec![None; d + 1],
            unit_powers,
            ln_d1,
            ln_unit,
            ln_ratio_cum,
            tally: Tally::new(d),
            visited: 0,
        }
    }

    fn row(&self, z: u32) -> &Row<W> {
        self.rows[z as usize].get_or_init(|| self.source.step(z))
    }

    fn reach(&mut self, r: usize) -> &[W] {
        if self.reach[r].is_none() {
            let v = if r == 0 {
                let one = self.unit_powers[0].clone();
                (0..self.n).map(|z| if z == 0 { W::nil() } else { one.clone() }).collect()
            } else {
                let prev = self.reach(r - 1).to_vec();
                (0..self.n)
                    .map(|z| {
                        if z == 0 {
                            return W::nil();
                        }
                        let row = self.row(z);
                        let mut s = W::nil();
                        for (x, w) in row.val.iter().enumerate() {
                            if !w.is_nil() && !prev[x].is_nil() {
                                s = s.add(&w.mul(&prev[x]));
                            }
                        }
                        s
                    })
                    .collect()
            };
            self.reach[r] = Some(v);
        }
        self.reach[r].as_deref().unwrap()
    }

    /// `ln ∏_{j=1}^{r} (z-j)/(n-z+j)`.
    fn ln_best_future(&self, z: u32, r: usize) -> f64 {
        let hi = z as usize - 1;
        self.ln_ratio_cum[hi] - self.ln_ratio_cum[hi - r]
    }

    fn ln_worst_future(&self, r: usize) -> f64 {
        self.ln_ratio_cum[r]
    }

    /// Settles the final level for a prefix with product `p/q` whose last
    /// subtree size is `z` (or the level-1 law when `z` is `None`).
    fn last_level(&mut self, depth: usize, z: Option<u32>, p: &BigUint, q: &BigUint, mass: &W) {
        let n = self.n;
        let nq = q * n;
        let pq = p + q;
        let (quot, rem) = nq.div_rem(&pq);
        let row = match z {
            Some(z) => self.row(z),
            None => &self.level1,
        };
        let len = row.val.len();
        let t = u64::try_from(&quot).map_or(len, |v| (v as usize).saturating_add(1).min(len));
        let tie_x = if Zero::is_zero(&rem) { u64::try_from(&quot).ok().map(|v| v as usize) } else { None };
        let strict = mass.mul(&row.tail[t]);
        let tie = match tie_x {
            Some(x) if x >= 1 && x < len => row.val[x].clone(),
            _ => W::nil(),
        };
        let zero = mass.mul(&row.val[0]);
        let infected_success = row.tail[1.min(len)].sub(&row.tail[t]).sub(&tie);
        let success = mass.mul(&infected_success);
        let tie = mass.mul(&tie);
        let at = depth + 1;
        self.tally.add(Cat::StrictError, at, &strict);
        self.tally.add(Cat::Tie, at, &tie);
        self.tally.add(Cat::ZeroBranch, at, &zero);
        self.tally.add(Cat::SuccessInfected, at, &success);
    }

    fn expand_root(&mut self) -> Vec<State<W>> {
        let one = BigUint::one();
        let unit0 = self.unit_powers[0].clone();
        if self.d == 1 {
            self.last_level(0, None, &one, &one, &unit0);
            return Vec::new();
        }
        let d = self.d;
        let unreachable = self.level1.tail[0].sub(&self.level1.tail[d.min(self.level1.val.len())]);
        self.tally.add(Cat::ZeroBranch, 1, &unreachable);
        let n = self.n;
        (d as u32..n)
            .filter(|&x| !self.level1.val[x as usize].is_nil())
            .map(|x| {
                let mass = self.level1.val[x as usize].clone();
                State {
                    depth: 1,
                    z: x,
                    p: BigUint::from(x),
                    q: BigUint::from(n - x),
                    ln_pi: self.ln_ratio_cum[x as usize] - self.ln_ratio_cum[x as usize - 1],
                    ln_mass: mass.ln() - self.ln_d1,
                    mass,
                }
            })
            .collect()
    }

    fn expand(&mut self, s: State<W>) -> Outcome<W> {
        self.visited += 1;
        let r = self.d - s.depth;
        if (s.z as usize) <= r {
            self.tally.add(Cat::ZeroBranch, s.depth, &s.mass);
            return Outcome::Resolved;
        }
        if s.p <= s.q || s.ln_pi + self.ln_best_future(s.z, r) < -LOG_MARGIN {
            self.tally.add(Cat::PrunedSuccess, s.depth, &s.mass);
            return Outcome::Resolved;
        }
        if s.ln_pi + self.ln_worst_future(r) > LOG_MARGIN {
            let hit = self.reach(r)[s.z as usize].clone();
            let miss = self.unit_powers[r].sub(&hit);
            self.tally.add(Cat::StrictError, s.depth + r, &s.mass.mul(&hit));
            self.tally.add(Cat::ZeroBranch, s.depth + r, &s.mass.mul(&miss));
            return Outcome::Resolved;
        }
        if r == 1 {
            self.last_level(s.depth, Some(s.z), &s.p, &s.q, &s.mass);
            return Outcome::Resolved;
        }
        let n = self.n;
        let ln_den = self.ln_d1 + s.depth as f64 * self.ln_unit;
        let (unreachable, kids): (W, Vec<(u32, W)>) = {
            let row = self.row(s.z);
            let unreachable = row.tail[0].sub(&row.tail[r]);
            let kids = (r as u32..s.z)
                .filter(|&x| !row.val[x as usize].is_nil())
                .map(|x| (x, row.val[x as usize].clone()))
                .collect();
            (unreachable, kids)
        };
        self.tally.add(Cat::ZeroBranch, s.depth + 1, &s.mass.mul(&unreachable));
        let children = kids
            .into_iter()
            .map(|(x, w)| {
                let mass = s.mass.mul(&w);
                State {
                    depth: s.depth + 1,
                    z: x,
                    p: &s.p * x,
                    q: &s.q * (n - x),
                    ln_pi: s.ln_pi + self.ln_ratio_cum[x as usize] - self.ln_ratio_cum[x as usize - 1],
                    ln_mass: mass.ln() - ln_den,
                    mass,
                }
            })
            .collect();
        Outcome::Children(children)
    }
}

struct Ranked<W>(State<W>);

impl<W> PartialEq for Ranked<W> {
    fn eq(&self, o: &Self) -> bool {
        self.0.ln_mass.total_cmp(&o.0.ln_mass).is_eq()
    }
}

impl<W> Eq for Ranked<W> {}

impl<W> PartialOrd for Ranked<W> {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl<W> Ord for Ranked<W> {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.ln_mass.total_cmp(&o.0.ln_mass)
    }
}

#[derive(Debug, Clone, Copy)]
struct Params {
    delta: u32,
    d: u32,
    n: u32,
}

impl Params {
    fn budget_error(&self, limit: u64) -> Error {
        Error::Budget { limit, delta: self.delta, d: self.d, n: self.n }
    }
}

/// Depth-first over all unsettled prefixes; fails once `budget` prefixes
/// have been visited.
fn run_complete<W: Weight, S: RowSource<W>>(e: &mut Engine<W, S>, params: Params, budget: u64) -> Result<()> {
    let mut stack = e.expand_root();
    while let Some(s) = stack.pop() {
        if e.visited >= budget {
            return Err(params.budget_error(budget));
        }
        if let Outcome::Children(c) = e.expand(s) {
            stack.extend(c);
        }
    }
    Ok(())
}

/// Heaviest prefix first; whatever is left when `budget` runs out is
/// recorded as unresolved.
fn run_bounded<W: Weight, S: RowSource<W>>(e: &mut Engine<W, S>, budget: u64) {
    let mut heap: BinaryHeap<Ranked<W>> = e.expand_root().into_iter().map(Ranked).collect();
    while let Some(Ranked(s)) = heap.pop() {
        if e.visited >= budget {
            e.tally.add(Cat::Unresolved, s.depth, &s.mass);
            continue;
        }
        if let Outcome::Children(c) = e.expand(s) {
            heap.extend(c.into_iter().map(Ranked));
        }
    }
}

/// Probability mass of every way the two-suspect comparison can end.
/// The six parts always sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainBreakdown {
    /// `s₂` infected and strictly more central than the source.
    pub strict_error: Probability,
    /// `s₂` infected and exactly as central as the source.
    pub tie: Probability,
    /// `s₂` infected and strictly less central.
    pub success_infected: Probability,
    /// `s₂` not infected.
    pub zero_branch: Probability,
    /// Prefixes cut early because the source already wins; `s₂` may or may
    /// not be infected.
    pub pruned_success: Probability,
    /// Prefixes left unexplored by a bounded run.
    pub unresolved: Probability,
    pub states: u64,
}

impl ChainBreakdown {
    /// Error probability with ties costing ½.
    pub fn error(&self) -> Probability {
        match (&self.strict_error, &self.tie) {
            (Probability::Exact(a), Probability::Exact(b)) => {
                Probability::Exact(a + b / BigRational::from_integer(BigInt::from(2)))
            }
            (a, b) => Probability::Float(a.to_f64() + 0.5 * b.to_f64()),
        }
    }

    pub fn pc(&self) -> Probability {
        self.error().complement()
    }

    pub fn parts(&self) -> [&Probability; 6] {
        [
            &self.strict_error,
            &self.tie,
            &self.success_infected,
            &self.zero_branch,
            &self.pruned_success,
            &self.unresolved,
        ]
    }

    pub fn total(&self) -> Probability {
        let parts = self.parts();
        if parts.iter().all(|p| p.is_exact()) {
            let mut t = BigRational::zero();
            for p in parts {
                t += p.as_exact().unwrap();
            }
            Probability::Exact(t)
        } else {
            let mut s = CompensatedSum::default();
            for p in parts {
                s.add(p.to_f64());
            }
            Probability::Float(s.value())
        }
    }
}

const CAT_LIST: [Cat; CATS] =
    [Cat::StrictError, Cat::Tie, Cat::SuccessInfected, Cat::ZeroBranch, Cat::PrunedSuccess, Cat::Unresolved];

fn finish_exact(e: &Engine<BigUint, ExactRows>) -> ChainBreakdown {
    let d = e.d;
    let den = &e.level1.tail[0] * &e.unit_powers[d - 1];
    let mut out: Vec<Probability> = CAT_LIST
        .iter()
        .map(|&c| {
            let mut num = BigUint::zero();
            for h in 1..=d {
                let v = &e.tally.by_depth[c as usize][h];
                if !Zero::is_zero(v) {
                    num += v * &e.unit_powers[d - h];
                }
            }
            Probability::Exact(BigRational::new(BigInt::from(num), BigInt::from(den.clone())))
        })
        .collect();
    let unresolved = out.pop().unwrap();
    let pruned_success = out.pop().unwrap();
    let zero_branch = out.pop().unwrap();
    let success_infected = out.pop().unwrap();
    let tie = out.pop().unwrap();
    let strict_error = out.pop().unwrap();
    ChainBreakdown { strict_error, tie, success_infected, zero_branch, pruned_success, unresolved, states: e.visited }
}

fn finish_float(e: &Engine<f64, FloatRows>) -> ChainBreakdown {
    let sum = |c: Cat| {
        let mut s = CompensatedSum::default();
        for acc in &e.tally.by_depth[c as usize] {
            s.add(acc.value());
        }
        Probability::Float(s.value())
    };
    ChainBreakdown {
        strict_error: sum(Cat::StrictError),
        tie: sum(Cat::Tie),
        success_infected: sum(Cat::SuccessInfected),
        zero_branch: sum(Cat::ZeroBranch),
        pruned_success: sum(Cat::PrunedSuccess),
        unresolved: sum(Cat::Unresolved),
        states: e.visited,
    }
}

fn check_two(delta: u32, d: u32, n: u32) -> Result<()> {
    check_delta(delta)?;
    check_n(n)?;
    if d == 0 {
        return Err(Error::Domain("suspect distance d must be at least 1".into()));
    }
    if d >= n {
        return Err(Error::Argument(format!("no chain to enumerate when d = {d} >= n = {n}")));
    }
    Ok(())
}

/// Full enumeration of the two-suspect chain; requires `d < n`.
pub fn two_suspect_breakdown(delta: u32, d: u32, n: u32, arith: Arithmetic, budget: u64) -> Result<ChainBreakdown> {
    check_two(delta, d, n)?;
    let params = Params { delta, d, n };
    if arith.is_exact_for(n) {
        let mut e = Engine::new(d, n, ExactRows::new(delta, n));
        run_complete(&mut e, params, budget)?;
        Ok(finish_exact(&e))
    } else {
        let mut e = Engine::new(d, n, FloatRows { delta, n });
        run_complete(&mut e, params, budget)?;
        Ok(finish_float(&e))
    }
}

/// Detection probability for two suspects at distance `d`, averaged over
/// which of them is the source (the two cases are symmetric).
pub fn pc_two_suspects(delta: u32, d: u32, n: u32, arith: Arithmetic) -> Result<DetectionResult> {
    check_delta(delta)?;
    check_n(n)?;
    if d == 0 {
        return Err(Error::Domain("suspect distance d must be at least 1".into()));
    }
    let scenario = Scenario::TwoAtD;
    if d >= n {
        // The second suspect cannot be infected.
        return Ok(DetectionResult { value: Probability::one(), method: Method::ClosedForm, scenario });
    }
    let b = two_suspect_breakdown(delta, d, n, arith, DEFAULT_CHAIN_BUDGET)?;
    Ok(DetectionResult { value: b.pc(), method: Method::ChainEnumeration, scenario })
}

/// Rigorous exact bounds on the two-suspect detection probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcInterval {
    pub lower: Probability,
    pub upper: Probability,
    pub breakdown: ChainBreakdown,
}

impl PcInterval {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

/// Exact-arithmetic bounds from a bounded best-first enumeration. Mass left
/// unexplored after `budget` prefixes counts as error for the lower bound
/// and as success for the upper bound.
pub fn pc_two_suspects_bounds(delta: u32, d: u32, n: u32, budget: u64) -> Result<PcInterval> {
    check_delta(delta)?;
    check_n(n)?;
    if d == 0 {
        return Err(Error::Domain("suspect distance d must be at least 1".into()));
    }
    if d >= n {
        let one = Probability::one();
        let zero = Probability::zero();
        let breakdown = ChainBreakdown {
            strict_error: zero.clone(),
            tie: zero.clone(),
            success_infected: zero.clone(),
            zero_branch: one.clone(),
            pruned_success: zero.clone(),
            unresolved: zero,
            states: 0,
        };
        return Ok(PcInterval { lower: one.clone(), upper: one, breakdown });
    }
    let mut e = Engine::new(d, n, ExactRows::new(delta, n));
    run_bounded(&mut e, budget);
    let breakdown = finish_exact(&e);
    let upper = breakdown.pc();
    let lower = match (&upper, &breakdown.unresolved) {
        (Probability::Exact(u), Probability::Exact(x)) => Probability::Exact(u - x),
        _ => unreachable!("bounded runs are exact"),
    };
    Ok(PcInterval { lower, upper, breakdown })
}

/// The published line-graph (`δ = 2`) two-suspect expression
/// `1/2 - 2^(-n) Σ_{z=lo}^{hi} C(n-1, z)`, with `[lo, hi]` equal to
/// `[(n-d-1)/2, (n+d+1)/2]` for odd `n-d` and `[(n-d)/2, (n+d-2)/2]` for
/// even `n-d`.
pub fn line_expression(n: u32, d: u32) -> BigRational {
    let (n_i, d_i) = (n as i64, d as i64);
    let (lo, hi) = if (n_i - d_i).rem_euclid(2) == 1 {
        ((n_i - d_i - 1) / 2, (n_i + d_i + 1) / 2)
    } else {
        ((n_i - d_i) / 2, (n_i + d_i - 2) / 2)
    };
    let row = binomial_row(n as u64 - 1);
    let mut s = BigUint::zero();
    for z in lo.max(0)..=hi.min(n_i - 1) {
        s += &row[z as usize];
    }
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    half - BigRational::new(BigInt::from(s), BigInt::from(BigUint::one() << n))
}

/// Detection probability for two suspects on a line, derived from the
/// deterministic chain `z_h = z_1 - (h-1)`: the source loses when
/// `2 z_1 > n - 1 + d` and ties when `2 z_1 = n - 1 + d`.
pub fn two_suspect_corrected(n: u32, d: u32) -> BigRational {
    if d >= n {
        return BigRational::one();
    }
    let m = n as u64 - 1;
    let row = binomial_row(m);
    let edge = m + d as u64;
    let mut twice_err = BigUint::zero();
    for z in (edge / 2 + 1)..=m {
        twice_err += &row[z as usize] * 2u32;
    }
    if edge.is_multiple_of(2) {
        twice_err += &row[(edge / 2) as usize];
    }
    BigRational::one() - BigRational::new(BigInt::from(twice_err), BigInt::from(BigUint::one() << (m + 1)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrataRow {
    pub n: u32,
    pub d: u32,
    pub enumeration_pc: f64,
    pub expression: f64,
    /// Enumeration equals the expression read as a detection probability.
    pub reads_as_pc: bool,
    /// Enumeration equals one minus the expression.
    pub reads_as_pe: bool,
    pub corrected_matches: bool,
    /// All six chain parts sum to exactly 1.
    pub mass_conserved: bool,
}

/// Compares the line-graph enumeration with the published expression under
/// both readings, for every `(n, d)` in the given ranges with `d < n`.
pub fn errata_audit(ns: std::ops::RangeInclusive<u32>, ds: std::ops::RangeInclusive<u32>) -> Result<Vec<ErrataRow>> {
    let mut rows = Vec::new();
    for n in ns {
        for d in ds.clone() {
            if d >= n {
                continue;
            }
            let b = two_suspect_breakdown(2, d, n, Arithmetic::Exact, DEFAULT_CHAIN_BUDGET)?;
            let pc = b.pc().as_exact().cloned().expect("exact run");
            let expr = line_expression(n, d);
            rows.push(ErrataRow {
                n,
                d,
                enumeration_pc: rational_to_f64(&pc),
                expression: rational_to_f64(&expr),
                reads_as_pc: pc == expr,
                reads_as_pe: pc == BigRational::one() - &expr,
                corrected_matches: pc == two_suspect_corrected(n, d),
                mass_conserved: b.total() == Probability::one(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::urn::path_chain_joint;

    fn small(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    /// Every chain `n > z_1 > … > z_d` (zeros allowed once the chain is
    /// empty), classified directly.
    fn brute_pc(delta: u32, d: u32, n: u32) -> BigRational {
        fn walk(delta: u32, d: u32, n: u32, z: &mut Vec<u32>, err: &mut BigRational) {
            if z.len() == d as usize {
                if *z.last().unwrap() == 0 {
                    return;
                }
                let (mut p, mut q) = (BigUint::one(), BigUint::one());
                for &x in z.iter() {
                    p *= x;
                    q *= n - x;
                }
                let w = path_chain_joint(delta, n, z, Arithmetic::Exact).unwrap();
                let w = w.as_exact().unwrap().clone();
                if p > q {
                    *err += w;
                } else if p == q {
                    *err += w / BigRational::from_integer(BigInt::from(2));
                }
                return;
            }
            let top = z.last().copied().unwrap_or(n);
            let choices: Vec<u32> = if top == 0 { vec![0] } else { (0..top).collect() };
            for x in choices {
                z.push(x);
                walk(delta, d, n, z, err);
                z.pop();
            }
        }
        let mut err = BigRational::zero();
        walk(delta, d, n, &mut Vec::new(), &mut err);
        BigRational::one() - err
    }

    fn exact_pc(delta: u32, d: u32, n: u32) -> BigRational {
        pc_two_suspects(delta, d, n, Arithmetic::Exact).unwrap().value.as_exact().unwrap().clone()
    }

    #[test]
    fn examples() {
        assert_eq!(exact_pc(2, 1, 2), small(3, 4));
        assert_eq!(exact_pc(3, 5, 5), small(1, 1));
        assert!(matches!(pc_two_suspects(3, 0, 5, Arithmetic::Exact), Err(Error::Domain(_))));
    }

    #[test]
    fn matches_brute_force() {
        for delta in 2..6 {
            for n in 2..11 {
                for d in 1..n.min(5) {
                    assert_eq!(exact_pc(delta, d, n), brute_pc(delta, d, n), "delta={delta} d={d} n={n}");
                }
            }
        }
    }

    #[test]
    fn mass_is_conserved() {
        for (delta, d, n) in [(2, 3, 20), (3, 1, 9), (3, 4, 30), (4, 2, 17), (6, 3, 25)] {
            let b = two_suspect_breakdown(delta, d, n, Arithmetic::Exact, DEFAULT_CHAIN_BUDGET).unwrap();
            assert_eq!(b.total(), Probability::one());
            let f = two_suspect_breakdown(delta, d, n, Arithmetic::Float, DEFAULT_CHAIN_BUDGET).unwrap();
            assert!((f.total().to_f64() - 1.0).abs() < 1e-12);
            assert!((f.pc().to_f64() - b.pc().to_f64()).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let e = two_suspect_breakdown(3, 6, 60, Arithmetic::Exact, 10).unwrap_err();
        assert!(matches!(e, Error::Budget { limit: 10, delta: 3, d: 6, n: 60 }));
    }

    #[test]
    fn bounds_bracket_exact_value() {
        for (delta, d, n) in [(3, 3, 20), (4, 4, 18)] {
            let exact = exact_pc(delta, d, n);
            for budget in [1, 10, 100, 1_000_000] {
                let b = pc_two_suspects_bounds(delta, d, n, budget).unwrap();
                let (lo, hi) = (b.lower.as_exact().unwrap(), b.upper.as_exact().unwrap());
                assert!(lo <= &exact && &exact <= hi);
                assert_eq!(b.breakdown.total(), Probability::one());
            }
            assert!(pc_two_suspects_bounds(delta, d, n, u64::MAX).unwrap().is_exact());
        }
    }

    #[test]
    fn corrected_line_form_matches_enumeration() {
        for n in 2..40 {
            for d in 1..n.min(6) {
                assert_eq!(exact_pc(2, d, n), two_suspect_corrected(n, d), "n={n} d={d}");
            }
        }
    }

    #[test]
    fn published_expression_at_small_n() {
        // n = 2, d = 1: the expression is 0 while the enumeration gives 3/4.
        assert_eq!(line_expression(2, 1), BigRational::zero());
    }
}
