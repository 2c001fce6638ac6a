//! Scalar observables on phase points, used by the concentration and
//! invariance experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::dot;
use crate::hamiltonians::{self, Model, PhasePoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "arg")]
pub enum Observable {
    /// Constant function.
    Constant(f64),
    /// `||phi||_{L2}`.
    L2Norm,
    /// `||phi||_{L2}^2`.
    L2NormSq,
    /// `<phi, g>` for a direction `g` in flat coordinates.
    Projection(Vec<f64>),
    /// `||phi - p||_{L2}` for a reference point `p` in flat coordinates.
    DistanceTo(Vec<f64>),
    /// Cosine coefficient `a_k` (of `P` for NLS).
    ModeCos(usize),
    /// Sine coefficient `b_k` (of `P` for NLS).
    ModeSin(usize),
    /// `sqrt(a_k^2 + b_k^2)`, summed over both components for NLS.
    ModeModulus(usize),
    /// Hamiltonian of the model at coupling `beta`.
    Energy(f64),
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Constant(c) => format!("constant({c})"),
            Observable::L2Norm => "l2_norm".into(),
            Observable::L2NormSq => "l2_norm_sq".into(),
            Observable::Projection(_) => "projection".into(),
            Observable::DistanceTo(_) => "distance".into(),
            Observable::ModeCos(k) => format!("a{k}"),
            Observable::ModeSin(k) => format!("b{k}"),
            Observable::ModeModulus(k) => format!("mode{k}_modulus"),
            Observable::Energy(_) => "energy".into(),
        }
    }

    /// Whether `|F(x) - F(y)| <= ||x - y||_{L2}` holds for every pair of points.
    pub fn is_one_lipschitz(&self) -> bool {
        match self {
            Observable::Constant(_)
            | Observable::L2Norm
            | Observable::DistanceTo(_)
            | Observable::ModeCos(_)
            | Observable::ModeSin(_)
            | Observable::ModeModulus(_) => true,
            Observable::Projection(g) => dot(g, g) <= 1.0 + 1e-12,
            Observable::L2NormSq | Observable::Energy(_) => false,
        }
    }

    pub fn evaluate(&self, model: Model, point: &PhasePoint) -> Result<f64> {
        let m = point.truncation();
        let coords = point.coords();
        let check_len = |v: &[f64]| {
            if v.len() == coords.len() {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: coords.len(),
                    got: v.len(),
                })
            }
        };
        let check_mode = |k: usize| {
            if k >= 1 && k <= m {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("mode {k} outside 1..={m}")))
            }
        };
        Ok(match self {
            Observable::Constant(c) => *c,
            Observable::L2Norm => point.l2_norm_sq().sqrt(),
            Observable::L2NormSq => point.l2_norm_sq(),
            Observable::Projection(g) => {
                check_len(g)?;
                dot(&coords, g)
            }
            Observable::DistanceTo(p) => {
                check_len(p)?;
                coords.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            }
            Observable::ModeCos(k) => {
                check_mode(*k)?;
                coords[*k]
            }
            Observable::ModeSin(k) => {
                check_mode(*k)?;
                coords[m + *k]
            }
            Observable::ModeModulus(k) => {
                check_mode(*k)?;
                let block = 2 * m + 1;
                (0..coords.len() / block)
                    .map(|c| {
                        let base = c * block;
                        coords[base + k].powi(2) + coords[base + m + k].powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            }
            Observable::Energy(beta) => hamiltonians::energy(model, point, *beta)?,
        })
    }
}

/// Unit direction along the `a_1` coordinate, a convenient 1-Lipschitz projection.
pub fn unit_first_mode(model: Model, m: usize) -> Observable {
    let mut g = vec![0.0; model.components() * (2 * m + 1)];
    g[1] = 1.0;
    Observable::Projection(g)
}
