//! Polynomial expansion of the three base features (t, ΔA, ΔD).

use std::fmt;

use serde::{Deserialize, Serialize};

use super::RegressionError;
use crate::features::SampleRecord;

pub const MAX_DEGREE: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFeature {
    T,
    AreaDiff,
    DistDiff,
}

impl BaseFeature {
    pub const ALL: [BaseFeature; 3] = [Self::T, Self::AreaDiff, Self::DistDiff];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::T => "t",
            Self::AreaDiff => "area_diff",
            Self::DistDiff => "dist_diff",
        }
    }

    pub fn value(self, record: &SampleRecord) -> f64 {
        match self {
            Self::T => record.t,
            Self::AreaDiff => record.area_diff,
            Self::DistDiff => record.dist_diff,
        }
    }
}

impl fmt::Display for BaseFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BaseFeature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                format!("unknown base feature {s:?} (expected t, area_diff or dist_diff)")
            })
    }
}

/// One monomial `t^a · ΔA^b · ΔD^c` of total degree ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonomialDescriptor {
    /// Exponents of (t, area_diff, dist_diff).
    pub exponents: [u32; 3],
    pub display_name: String,
}

impl MonomialDescriptor {
    pub fn new(exponents: [u32; 3]) -> Self {
        Self {
            display_name: display_name(exponents),
            exponents,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn eval(&self, base: [f64; 3]) -> f64 {
        base.iter()
            .zip(self.exponents)
            .map(|(&x, e)| x.powi(e as i32))
            .product()
    }
}

/// `dist_diff^1`, `area_diff^2` for pure powers; `t*dist_diff`,
/// `t^2*area_diff` for mixed terms.
fn display_name(exponents: [u32; 3]) -> String {
    let factors: Vec<(BaseFeature, u32)> = BaseFeature::ALL
        .into_iter()
        .zip(exponents)
        .filter(|&(_, e)| e > 0)
        .collect();
    match factors.as_slice() {
        [(b, e)] => format!("{b}^{e}"),
        _ => factors
            .iter()
            .map(|&(b, e)| {
                if e == 1 {
                    b.to_string()
                } else {
                    format!("{b}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*"),
    }
}

/// Ordered monomial set for a degree over a subset of the base features.
///
/// Canonical order is graded lexicographic: ascending total degree, and
/// within a degree descending lexicographic on the exponent triple, so that
/// degree 1 yields `t, area_diff, dist_diff`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolynomialBasis {
    degree: u32,
    bases: Vec<BaseFeature>,
    monomials: Vec<MonomialDescriptor>,
}

impl PolynomialBasis {
    pub fn new(degree: u32, bases: &[BaseFeature]) -> Result<Self, RegressionError> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(RegressionError::InvalidDegree(degree));
        }
        let mut bases = bases.to_vec();
        bases.sort();
        bases.dedup();
        if bases.is_empty() {
            return Err(RegressionError::NoBaseFeatures);
        }
        let active = |i: usize| bases.iter().any(|b| b.index() == i);
        let mut monomials = Vec::new();
        for total in 1..=degree {
            for a in (0..=total).rev() {
                for b in (0..=total - a).rev() {
                    let exps = [a, b, total - a - b];
                    if exps.iter().enumerate().all(|(i, &e)| e == 0 || active(i)) {
                        monomials.push(MonomialDescriptor::new(exps));
                    }
                }
            }
        }
        Ok(Self {
            degree,
            bases,
            monomials,
        })
    }

    pub fn full(degree: u32) -> Result<Self, RegressionError> {
        Self::new(degree, &BaseFeature::ALL)
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn bases(&self) -> &[BaseFeature] {
        &self.bases
    }

    pub fn monomials(&self) -> &[MonomialDescriptor] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn expand(&self, record: &SampleRecord) -> Vec<f64> {
        let base = base_values(record);
        self.monomials.iter().map(|m| m.eval(base)).collect()
    }
}

pub fn base_values(record: &SampleRecord) -> [f64; 3] {
    [record.t, record.area_diff, record.dist_diff]
}

/// All monomials of total degree 1..=`degree` in the three base features,
/// in canonical order, evaluated at `record`.
pub fn expand_polynomial(
    record: &SampleRecord,
    degree: u32,
) -> Result<Vec<(MonomialDescriptor, f64)>, RegressionError> {
    let basis = PolynomialBasis::full(degree)?;
    let values = basis.expand(record);
    Ok(basis.monomials.into_iter().zip(values).collect())
}
