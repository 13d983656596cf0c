//! Closed-form computation and communication loads, in exact rationals.
//!
//! Per-round quantities are returned in units of `T` bits. The achievable
//! communication load is
//!
//! ```text
//! L = 1/(2X) * sum_{g=1}^{s-1} sum_{|A|=g} prod_{i in A} (x_i - 1)
//!   + s / (X (2s - 1)) * prod_{i=1}^{s} (x_i - 1)
//! ```
//!
//! The optimality ratio against the best possible shuffle for this placement
//! is known to lie in `[1, 4]`; the lower bound itself is not computed here.

use itertools::Itertools;
use serde::Serialize;
use thiserror::Error;

use crate::design::DesignParams;
use crate::rational::{int, Rational, RationalJson};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("round {gamma} out of range {min}..={max}")]
pub struct RoundOutOfRange {
    pub gamma: usize,
    pub min: usize,
    pub max: usize,
}

/// `sum_{A subset [s], |A| = g} prod_{i in A} (x_i - 1)`.
pub fn subset_product_sum(params: &DesignParams, gamma: usize) -> i128 {
    params
        .x()
        .iter()
        .map(|&v| v as i128 - 1)
        .combinations(gamma)
        .map(|c| c.into_iter().product::<i128>())
        .sum()
}

/// Computation load `r = s`.
pub fn computation_load(params: &DesignParams) -> usize {
    params.s()
}

/// Method A bits of round `g < s`, in units of `T`:
/// `(eta1 eta2 X / 2) * sum_{|A|=g} prod (x_i - 1)`.
pub fn round_a_bits(params: &DesignParams, gamma: usize) -> Result<Rational, RoundOutOfRange> {
    let s = params.s();
    if gamma == 0 || gamma >= s {
        return Err(RoundOutOfRange {
            gamma,
            min: 1,
            max: s - 1,
        });
    }
    let scale = (params.eta1() * params.eta2() * params.lattice_size()) as i128;
    Ok(Rational::new(scale * subset_product_sum(params, gamma), 2))
}

/// Method B bits of the last round, in units of `T`:
/// `s eta1 eta2 X prod (x_i - 1) / (2s - 1)`.
pub fn round_s_bits(params: &DesignParams) -> Rational {
    let s = params.s() as i128;
    let scale = (params.eta1() * params.eta2() * params.lattice_size()) as i128;
    let prod: i128 = params.x().iter().map(|&v| v as i128 - 1).product();
    Rational::new(s * scale * prod, 2 * s - 1)
}

/// Method B bits of round `g`, in units of `T`:
/// `g / (2g - 1) * eta1 eta2 X * sum_{|A|=g} prod (x_i - 1)`.
pub fn round_b_bits(params: &DesignParams, gamma: usize) -> Result<Rational, RoundOutOfRange> {
    let s = params.s();
    if gamma == 0 || gamma > s {
        return Err(RoundOutOfRange { gamma, min: 1, max: s });
    }
    let g = gamma as i128;
    let scale = (params.eta1() * params.eta2() * params.lattice_size()) as i128;
    Ok(Rational::new(g * scale * subset_product_sum(params, gamma), 2 * g - 1))
}

/// The achievable communication load, evaluated term by term from the
/// aggregate expression (not from the per-round counts).
pub fn communication_load_formula(params: &DesignParams) -> Rational {
    let s = params.s() as i128;
    let x = params.lattice_size() as i128;
    let first: i128 = (1..params.s()).map(|g| subset_product_sum(params, g)).sum();
    let prod: i128 = params.x().iter().map(|&v| v as i128 - 1).product();
    Rational::new(first, 2 * x) + Rational::new(s * prod, x * (2 * s - 1))
}

/// Load if every round uses Method B.
pub fn all_b_load(params: &DesignParams) -> Rational {
    let qn = int((params.num_files() * params.num_functions()) as i128);
    (1..=params.s())
        .map(|g| round_b_bits(params, g).expect("round in range"))
        .sum::<Rational>()
        / qn
}

/// Closed-form results for one parameter set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadFormulaResult {
    pub computation_load: usize,
    pub communication_load: Rational,
    /// Rounds `1..s-1`, units of `T`.
    pub per_round_a_bits: Vec<Rational>,
    pub round_s_bits: Rational,
    /// Rounds `1..s`, units of `T`.
    pub per_round_b_bits: Vec<Rational>,
    pub all_b_load: Rational,
}

impl LoadFormulaResult {
    /// Per-round units of `T` for the default strategy (A rounds then round s).
    pub fn default_round_bits(&self) -> Vec<Rational> {
        let mut v = self.per_round_a_bits.clone();
        v.push(self.round_s_bits);
        v
    }

    pub fn to_json(&self) -> LoadFormulaJson {
        LoadFormulaJson {
            computation_load: self.computation_load,
            communication_load: self.communication_load.into(),
            per_round_a_bits: self.per_round_a_bits.iter().map(Into::into).collect(),
            round_s_bits: self.round_s_bits.into(),
            per_round_b_bits: self.per_round_b_bits.iter().map(Into::into).collect(),
            all_b_load: self.all_b_load.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadFormulaJson {
    pub computation_load: usize,
    pub communication_load: RationalJson,
    pub per_round_a_bits: Vec<RationalJson>,
    pub round_s_bits: RationalJson,
    pub per_round_b_bits: Vec<RationalJson>,
    pub all_b_load: RationalJson,
}

pub fn evaluate(params: &DesignParams) -> LoadFormulaResult {
    let s = params.s();
    LoadFormulaResult {
        computation_load: computation_load(params),
        communication_load: communication_load_formula(params),
        per_round_a_bits: (1..s)
            .map(|g| round_a_bits(params, g).expect("round in range"))
            .collect(),
        round_s_bits: round_s_bits(params),
        per_round_b_bits: (1..=s)
            .map(|g| round_b_bits(params, g).expect("round in range"))
            .collect(),
        all_b_load: all_b_load(params),
    }
}
