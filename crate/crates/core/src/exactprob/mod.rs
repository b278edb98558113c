//! Exact finite-`n` detection probabilities on regular trees and their
//! `n → ∞` limits.
//!
//! The building block is the chance that one particular neighbor of the
//! source ends up with at least half of the infected nodes,
//!
//! ```text
//! P_e1 = ½·P(X₁ = n/2) + Σ_{x > n/2} P(X₁ = x),
//! ```
//!
//! where `X₁` is the infected count in that neighbor's subtree. A source with
//! `m` suspect neighbors is then detected with probability `1 - m·P_e1`.

mod two;

pub use two::{
    errata_audit, line_expression, pc_two_suspects, pc_two_suspects_bounds, two_suspect_breakdown,
    two_suspect_corrected, ChainBreakdown, ErrataRow, PcInterval, DEFAULT_CHAIN_BUDGET,
};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::probability::{Arithmetic, Probability};
use crate::urn::{
    binomial_row, limit_split_cdf, limit_split_upper_half, ln_binomial, tree_split_marginal_table, Masses,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    NeighborSum,
    ChainEnumeration,
    Asymptotic,
    LowerBound,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::NeighborSum => "neighbor-sum",
            Method::ChainEnumeration => "chain-enumeration",
            Method::Asymptotic => "asymptotic",
            Method::LowerBound => "lower-bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    AllSuspects,
    ConnectedK,
    TwoAtD,
    GeneralKBound,
}

impl Scenario {
    pub fn label(self) -> &'static str {
        match self {
            Scenario::AllSuspects => "all-suspects",
            Scenario::ConnectedK => "connected-k",
            Scenario::TwoAtD => "two-at-d",
            Scenario::GeneralKBound => "general-k-bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionResult {
    pub value: Probability,
    pub method: Method,
    pub scenario: Scenario,
}

fn check_delta(delta: u32) -> Result<()> {
    if delta < 2 {
        return Err(Error::Domain(format!("delta must be at least 2, got {delta}")));
    }
    Ok(())
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    Ok(())
}

fn rational(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn small(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `P_e1`: probability that a fixed neighbor's subtree holds more than half
/// of the `n` infected nodes, counting exactly half as ½.
pub fn neighbor_error_mass(delta: u32, n: u32, arith: Arithmetic) -> Result<Probability> {
    check_delta(delta)?;
    check_n(n)?;
    let table = tree_split_marginal_table(delta, n, arith)?;
    let lo = n as usize / 2 + 1;
    let tie = n.is_multiple_of(2).then_some(n as usize / 2);
    Ok(match table {
        Masses::Exact { num, den } => {
            let mut twice = BigUint::default();
            for v in &num[lo.min(num.len())..] {
                twice += v;
            }
            twice *= 2u32;
            if let Some(t) = tie {
                twice += &num[t];
            }
            Probability::Exact(rational(twice, den * 2u32))
        }
        Masses::Float(v) => {
            let mut s = crate::probability::CompensatedSum::default();
            for &x in v[lo.min(v.len())..].iter().rev() {
                s.add(x);
            }
            if let Some(t) = tie {
                s.add(0.5 * v[t]);
            }
            Probability::Float(s.value())
        }
    })
}

/// `1 - m·P_e1`: success probability for a source with `m` suspect
/// neighbors.
pub fn pc_conditional(delta: u32, m: u32, n: u32, arith: Arithmetic) -> Result<Probability> {
    check_delta(delta)?;
    if m > delta {
        return Err(Error::Argument(format!("m = {m} exceeds delta = {delta}")));
    }
    Ok(one_minus_scaled(&neighbor_error_mass(delta, n, arith)?, &small(m as i64, 1)))
}

fn one_minus_scaled(pe1: &Probability, factor: &BigRational) -> Probability {
    match pe1 {
        Probability::Exact(r) => Probability::Exact(BigRational::one() - factor * r),
        Probability::Float(x) => Probability::Float(1.0 - crate::probability::rational_to_f64(factor) * x),
    }
}

/// `C(n-1, ⌊(n-1)/2⌋) / 2^(n-1)`: the central binomial weight behind the
/// line (`delta = 2`) formulas.
fn central_binomial(n: u32, exact: bool) -> Probability {
    let m = n as u64 - 1;
    if exact {
        let c = binomial_row(m).swap_remove(m as usize / 2);
        Probability::Exact(rational(c, BigUint::one() << m))
    } else {
        Probability::Float((ln_binomial(m, m / 2) - m as f64 * std::f64::consts::LN_2).exp())
    }
}

fn affine(a: &BigRational, b: &BigRational, p: &Probability) -> Probability {
    match p {
        Probability::Exact(r) => Probability::Exact(a + b * r),
        Probability::Float(x) => {
            Probability::Float(crate::probability::rational_to_f64(a) + crate::probability::rational_to_f64(b) * x)
        }
    }
}

pub fn pc_all_suspects(delta: u32, n: u32, arith: Arithmetic) -> Result<DetectionResult> {
    check_delta(delta)?;
    check_n(n)?;
    let exact = arith.is_exact_for(n);
    let done = |value, method| Ok(DetectionResult { value, method, scenario: Scenario::AllSuspects });
    if n == 1 {
        return done(Probability::one(), Method::ClosedForm);
    }
    match delta {
        2 => done(affine(&small(0, 1), &BigRational::one(), &central_binomial(n, exact)), Method::ClosedForm),
        3 => {
            let odd = 2 * (n / 2) as i64 + 1;
            let v = if exact {
                Probability::Exact(small(1, 4) + small(3, 4 * odd))
            } else {
                Probability::Float(0.25 + 0.75 / odd as f64)
            };
            done(v, Method::ClosedForm)
        }
        _ => done(pc_conditional(delta, delta, n, arith)?, Method::NeighborSum),
    }
}

pub fn pc_connected(delta: u32, k: u64, n: u32, arith: Arithmetic) -> Result<DetectionResult> {
    check_delta(delta)?;
    check_n(n)?;
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let exact = arith.is_exact_for(n);
    let done = |value, method| Ok(DetectionResult { value, method, scenario: Scenario::ConnectedK });
    if k == 1 || n == 1 {
        return done(Probability::one(), Method::ClosedForm);
    }
    let k = k as i64;
    match delta {
        2 => done(affine(&small(1, k), &small(k - 1, k), &central_binomial(n, exact)), Method::ClosedForm),
        3 => {
            let den = 4 * (n / 2) as i64 + 2;
            let v = if exact {
                Probability::Exact(small(k + 1, 2 * k) + small(k - 1, k * den))
            } else {
                Probability::Float((k + 1) as f64 / (2 * k) as f64 + (k - 1) as f64 / (k as f64 * den as f64))
            };
            done(v, Method::ClosedForm)
        }
        _ => {
            // A tree on k suspects has k-1 edges, so a uniform source has
            // 2(k-1)/k suspect neighbors on average.
            let pe1 = neighbor_error_mass(delta, n, arith)?;
            done(one_minus_scaled(&pe1, &small(2 * (k - 1), k)), Method::NeighborSum)
        }
    }
}

/// Worst case over all `k`-suspect patterns, attained by connected suspects.
pub fn pc_general_lower_bound(delta: u32, k: u64, n: u32, arith: Arithmetic) -> Result<DetectionResult> {
    let r = pc_connected(delta, k, n, arith)?;
    Ok(DetectionResult { value: r.value, method: Method::LowerBound, scenario: Scenario::GeneralKBound })
}

fn check_limit_delta(delta: u32) -> Result<()> {
    if delta < 3 {
        return Err(Error::Domain(format!("limit defined for delta >= 3, got {delta}")));
    }
    Ok(())
}

/// Limit of [`pc_all_suspects`] as `n → ∞`.
pub fn phi1(delta: u32) -> Result<f64> {
    check_limit_delta(delta)?;
    Ok(1.0 - delta as f64 * limit_split_upper_half(delta)?)
}

/// Limit of [`pc_connected`] as `n → ∞`.
pub fn phi2(delta: u32, k: u64) -> Result<f64> {
    check_limit_delta(delta)?;
    if k == 0 {
        return Err(Error::Argument("k must be at least 1".into()));
    }
    let factor = 2.0 * (k - 1) as f64 / k as f64;
    Ok(1.0 - factor * limit_split_upper_half(delta)?)
}

/// Limit of [`pc_two_suspects`] for adjacent suspects.
pub fn phi3(delta: u32) -> Result<f64> {
    check_limit_delta(delta)?;
    limit_split_cdf(delta, 0.5)
}

/// Known `n → ∞` limits of the two-suspect detection probability:
/// `φ₃(δ)` at `d = 1`, and `2 ln 2 - 1/2` for `δ = 3, d = 2`.
pub fn two_suspect_limit(delta: u32, d: u32) -> Option<f64> {
    match (delta, d) {
        (2, _) => Some(0.5),
        (_, 1) => phi3(delta).ok(),
        (3, 2) => Some(2.0 * std::f64::consts::LN_2 - 0.5),
        _ => None,
    }
}
