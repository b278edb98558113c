//! Pólya urns, the subtree-split law of a regular tree, the path chain used
//! for two suspects, and the regularized incomplete Beta function.
//!
//! A Pólya urn starts with `b_j` balls of color `j`; each draw returns the
//! ball together with `ε` more of the same color. After `m` draws the count
//! vector `x` has probability
//!
//! ```text
//! m! / ∏ x_j! · ∏ rising(b_j, ε, x_j) / rising(Σb, ε, m)
//! ```
//!
//! where `rising(b, ε, k) = b (b+ε) … (b+(k-1)ε)`.

use num_bigint::BigUint;
use num_traits::One;
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::probability::{Arithmetic, Probability};

/// `b (b+ε) … (b+(m-1)ε)` as an exact integer.
pub fn rising(b: u64, eps: u64, m: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 0..m {
        acc *= b + i * eps;
    }
    acc
}

/// Natural log of [`rising`]; `-inf` when the product is zero.
pub fn ln_rising(b: u64, eps: u64, m: u64) -> f64 {
    if m == 0 {
        return 0.0;
    }
    if b == 0 {
        return f64::NEG_INFINITY;
    }
    if eps == 0 {
        return m as f64 * (b as f64).ln();
    }
    let e = eps as f64;
    let start = b as f64 / e;
    m as f64 * e.ln() + ln_gamma(start + m as f64) - ln_gamma(start)
}

pub fn ln_binomial(m: u64, k: u64) -> f64 {
    ln_gamma(m as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((m - k) as f64 + 1.0)
}

/// Row `C(m, 0..=m)` of Pascal's triangle.
pub fn binomial_row(m: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(m as usize + 1);
    let mut c = BigUint::one();
    row.push(c.clone());
    for k in 0..m {
        c = c * (m - k) / (k + 1);
        row.push(c.clone());
    }
    row
}

pub fn factorial(m: u64) -> BigUint {
    rising(1, 1, m)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyaSpec {
    initial: Vec<u64>,
    increment: u64,
    draws: u64,
}

impl PolyaSpec {
    /// Individual colors may start empty (they can then never be drawn), but
    /// the urn as a whole must hold at least one ball.
    pub fn new(initial: Vec<u64>, increment: u64, draws: u64) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::Argument("urn needs at least one color".into()));
        }
        if initial.iter().sum::<u64>() == 0 {
            return Err(Error::Argument("urn needs at least one ball".into()));
        }
        Ok(PolyaSpec { initial, increment, draws })
    }

    pub fn initial(&self) -> &[u64] {
        &self.initial
    }

    pub fn increment(&self) -> u64 {
        self.increment
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn total(&self) -> u64 {
        self.initial.iter().sum()
    }
}

pub fn polya_joint(spec: &PolyaSpec, counts: &[u64], arith: Arithmetic) -> Result<Probability> {
    if counts.len() != spec.initial.len() {
        return Err(Error::Argument(format!("expected {} counts, got {}", spec.initial.len(), counts.len())));
    }
    if counts.iter().sum::<u64>() != spec.draws {
        return Err(Error::Argument(format!("counts must sum to {} draws", spec.draws)));
    }
    let eps = spec.increment;
    if arith.is_exact_for(spec.draws.min(u32::MAX as u64) as u32) {
        let mut num = factorial(spec.draws);
        let mut den = rising(spec.total(), eps, spec.draws);
        for (&b, &x) in spec.initial.iter().zip(counts) {
            num *= rising(b, eps, x);
            den *= factorial(x);
        }
        Ok(Probability::from_biguints(num, den))
    } else {
        let mut ln = ln_gamma(spec.draws as f64 + 1.0) - ln_rising(spec.total(), eps, spec.draws);
        for (&b, &x) in spec.initial.iter().zip(counts) {
            ln += ln_rising(b, eps, x) - ln_gamma(x as f64 + 1.0);
        }
        Ok(Probability::Float(ln.exp()))
    }
}

fn check_delta(delta: u32) -> Result<()> {
    if delta < 2 {
        return Err(Error::Domain(format!("delta must be at least 2, got {delta}")));
    }
    Ok(())
}

/// Joint law of the infected counts in the `delta` subtrees around the
/// source after `n - 1` further infections.
pub fn tree_split_joint(delta: u32, counts: &[u64], n: u32, arith: Arithmetic) -> Result<Probability> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    if counts.len() != delta as usize {
        return Err(Error::Argument(format!("expected {delta} subtree counts, got {}", counts.len())));
    }
    let spec = PolyaSpec::new(vec![1; delta as usize], delta as u64 - 2, n as u64 - 1)?;
    polya_joint(&spec, counts, arith)
}

/// Law of the infected count in one subtree of the source: the two-color urn
/// `(1, δ-1)` with increment `δ-2` after `n - 1` draws.
pub fn tree_split_marginal(delta: u32, x1: u32, n: u32, arith: Arithmetic) -> Result<Probability> {
    check_delta(delta)?;
    if n == 0 || x1 >= n {
        return Err(Error::Argument(format!("subtree count {x1} outside 0..{n}")));
    }
    let spec = PolyaSpec::new(vec![1, delta as u64 - 1], delta as u64 - 2, n as u64 - 1)?;
    polya_joint(&spec, &[x1 as u64, (n - 1 - x1) as u64], arith)
}

/// A full probability mass function over `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub enum Masses {
    /// Integer numerators over one shared denominator.
    Exact {
        num: Vec<BigUint>,
        den: BigUint,
    },
    Float(Vec<f64>),
}

impl Masses {
    pub fn len(&self) -> usize {
        match self {
            Masses::Exact { num, .. } => num.len(),
            Masses::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> Probability {
        match self {
            Masses::Exact { num, den } => Probability::from_biguints(num[i].clone(), den.clone()),
            Masses::Float(v) => Probability::Float(v[i]),
        }
    }
}

/// The whole of [`tree_split_marginal`] for `x1 = 0..n`, in O(n) big-integer
/// products.
pub fn tree_split_marginal_table(delta: u32, n: u32, arith: Arithmetic) -> Result<Masses> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    let eps = delta as u64 - 2;
    let m = n as u64 - 1;
    if arith.is_exact_for(n) {
        let own = prefix_rising(1, eps, m);
        let rest = prefix_rising(delta as u64 - 1, eps, m);
        let binom = binomial_row(m);
        let num = (0..=m as usize).map(|x| &binom[x] * &own[x] * &rest[m as usize - x]).collect();
        Ok(Masses::Exact { num, den: rising(delta as u64, eps, m) })
    } else {
        let ln_den = ln_rising(delta as u64, eps, m);
        let v = (0..=m)
            .map(|x| {
                (ln_binomial(m, x) + ln_rising(1, eps, x) + ln_rising(delta as u64 - 1, eps, m - x) - ln_den).exp()
            })
            .collect();
        Ok(Masses::Float(v))
    }
}

/// `[rising(b, ε, 0), …, rising(b, ε, m)]`.
pub fn prefix_rising(b: u64, eps: u64, m: u64) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(m as usize + 1);
    let mut acc = BigUint::one();
    out.push(acc.clone());
    for i in 0..m {
        acc *= b + i * eps;
        out.push(acc.clone());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    alpha: f64,
    beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Argument(format!("Beta parameters must be positive, got ({alpha}, {beta})")));
        }
        Ok(BetaParams { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Regularized incomplete Beta function `I_x(α, β)` (continued fraction).
pub fn incomplete_beta(x: f64, p: BetaParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Argument(format!("x must lie in [0, 1], got {x}")));
    }
    // Closed forms when one parameter is 1.
    if p.alpha == 1.0 {
        return Ok(1.0 - (1.0 - x).powf(p.beta));
    }
    if p.beta == 1.0 {
        return Ok(x.powf(p.alpha));
    }
    Ok(beta_reg(p.alpha, p.beta, x))
}

/// Beta parameters of the limiting subtree fraction on a `delta`-regular tree.
pub fn split_beta_params(delta: u32) -> Result<BetaParams> {
    if delta < 3 {
        return Err(Error::Domain(format!("the subtree fraction has a Beta limit only for delta >= 3, got {delta}")));
    }
    let e = (delta - 2) as f64;
    BetaParams::new(1.0 / e, (delta - 1) as f64 / e)
}

/// Limit CDF of `X₁/n` at `x`.
pub fn limit_split_cdf(delta: u32, x: f64) -> Result<f64> {
    incomplete_beta(x, split_beta_params(delta)?)
}

/// `1 - I_{1/2}(α, β)` evaluated as `I_{1/2}(β, α)`, which keeps full
/// relative precision when the complement is tiny.
pub fn limit_split_upper_half(delta: u32) -> Result<f64> {
    let p = split_beta_params(delta)?;
    incomplete_beta(0.5, BetaParams::new(p.beta, p.alpha)?)
}

/// Joint probability of `Z₁ = z₁, …, Z_d = z_d`, the subtree sizes along the
/// path from the source toward a second suspect at distance `d`.
///
/// Once a subtree is empty all later ones are empty too, so trailing zeros
/// are accepted.
pub fn path_chain_joint(delta: u32, n: u32, z: &[u32], arith: Arithmetic) -> Result<Probability> {
    check_delta(delta)?;
    if z.is_empty() {
        return Err(Error::Argument("chain needs at least one level".into()));
    }
    if z[0] >= n {
        return Err(Error::Argument(format!("z1 = {} must be below n = {n}", z[0])));
    }
    for w in z.windows(2) {
        let ok = if w[0] == 0 { w[1] == 0 } else { w[1] < w[0] };
        if !ok {
            return Err(Error::Argument(format!("chain must strictly descend until zero: {z:?}")));
        }
    }
    let mut p = tree_split_marginal(delta, z[0], n, arith)?;
    for w in z.windows(2) {
        let step = path_chain_step(delta, w[0], w[1], arith)?;
        p = multiply(&p, &step);
    }
    Ok(p)
}

/// `P(Z_h = next | Z_{h-1} = prev)`: the urn `(1, δ-2)` with increment
/// `δ-2` after `prev - 1` draws.
pub fn path_chain_step(delta: u32, prev: u32, next: u32, arith: Arithmetic) -> Result<Probability> {
    check_delta(delta)?;
    if prev == 0 {
        return Ok(if next == 0 { Probability::one() } else { Probability::zero() });
    }
    if next >= prev {
        return Err(Error::Argument(format!("next count {next} must be below {prev}")));
    }
    let spec = PolyaSpec::new(vec![1, delta as u64 - 2], delta as u64 - 2, prev as u64 - 1)?;
    polya_joint(&spec, &[next as u64, (prev - 1 - next) as u64], arith)
}

pub(crate) fn multiply(a: &Probability, b: &Probability) -> Probability {
    match (a, b) {
        (Probability::Exact(x), Probability::Exact(y)) => Probability::Exact(x * y),
        _ => Probability::Float(a.to_f64() * b.to_f64()),
    }
}
