//! Energies and Gibbs potentials for periodic KdV, mKdV and cubic NLS.
//!
//! Everything is expressed in the unitary coordinates of [`FourierField`].
//! With `phi = a0 + sqrt(2) sum (a_j cos jx + b_j sin jx)`,
//!
//! ```text
//! int (phi')^2 dx/2pi = sum_j j^2 (a_j^2 + b_j^2)
//! ```
//!
//! and every nonlinear integral is evaluated exactly on the dealiased grid
//! (`n >= 4M + 2`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FourierField, GridField};
use crate::spectral::dealiased_grid_size;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Kdv,
    Mkdv,
    Nls,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Kdv => "kdv",
            Model::Mkdv => "mkdv",
            Model::Nls => "nls",
        })
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kdv" => Ok(Model::Kdv),
            "mkdv" => Ok(Model::Mkdv),
            "nls" => Ok(Model::Nls),
            other => Err(Error::UnsupportedModel(other.to_string())),
        }
    }
}

impl Model {
    /// Sign `s` in the Gibbs weight `exp(s * beta * W)`. KdV and mKdV carry
    /// the focusing `+` of their Hamiltonians; the NLS Hamiltonian enters as
    /// `exp(-H)` with a positive quartic term.
    pub fn weight_sign(self) -> f64 {
        match self {
            Model::Kdv | Model::Mkdv => 1.0,
            Model::Nls => -1.0,
        }
    }

    /// Number of real fields (1, or 2 for the `(P, Q)` pair of NLS).
    pub fn components(self) -> usize {
        match self {
            Model::Nls => 2,
            _ => 1,
        }
    }
}

/// Model, inverse temperature, particle number and truncation of an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub model: Model,
    pub beta: f64,
    #[serde(rename = "N")]
    pub particle_number: f64,
    #[serde(rename = "M")]
    pub truncation: usize,
}

impl EnsembleParams {
    /// `beta = 0` is accepted as the Gaussian reference limit.
    pub fn new(model: Model, beta: f64, particle_number: f64, truncation: usize) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
        }
        if !(particle_number > 0.0 && particle_number.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "particle number must be > 0, got {particle_number}"
            )));
        }
        if truncation == 0 {
            return Err(Error::InvalidParameter("truncation M must be >= 1".into()));
        }
        Ok(Self {
            model,
            beta,
            particle_number,
            truncation,
        })
    }

    /// Dimension of the coefficient space.
    pub fn dim(&self) -> usize {
        self.model.components() * (2 * self.truncation + 1)
    }
}

/// Complex field `u = P + iQ` of the cubic Schrodinger equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NlsField {
    pub p: FourierField,
    pub q: FourierField,
}

impl NlsField {
    pub fn new(p: FourierField, q: FourierField) -> Result<Self> {
        p.check_same(&q)?;
        Ok(Self { p, q })
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            p: FourierField::zeros(m),
            q: FourierField::zeros(m),
        }
    }

    pub fn truncation(&self) -> usize {
        self.p.truncation()
    }

    /// `int (P^2 + Q^2) dx/2pi`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.p.l2_norm_sq() + self.q.l2_norm_sq()
    }
}

/// A point of the truncated phase space of one of the three models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhasePoint {
    Real(FourierField),
    Nls(NlsField),
}

impl PhasePoint {
    pub fn zeros(model: Model, m: usize) -> Self {
        match model {
            Model::Nls => PhasePoint::Nls(NlsField::zeros(m)),
            _ => PhasePoint::Real(FourierField::zeros(m)),
        }
    }

    /// Rebuilds a point from flat coordinates (`[P.., Q..]` for NLS).
    pub fn from_coords(model: Model, coords: Vec<f64>) -> Result<Self> {
        match model {
            Model::Nls => {
                if !coords.len().is_multiple_of(2) {
                    return Err(Error::DimensionMismatch {
                        expected: coords.len() + 1,
                        got: coords.len(),
                    });
                }
                let half = coords.len() / 2;
                let q = FourierField::from_coords(coords[half..].to_vec())?;
                let p = FourierField::from_coords(coords[..half].to_vec())?;
                Ok(PhasePoint::Nls(NlsField { p, q }))
            }
            _ => Ok(PhasePoint::Real(FourierField::from_coords(coords)?)),
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        match self {
            PhasePoint::Real(f) => f.coords().to_vec(),
            PhasePoint::Nls(u) => {
                let mut c = u.p.coords().to_vec();
                c.extend_from_slice(u.q.coords());
                c
            }
        }
    }

    pub fn truncation(&self) -> usize {
        match self {
            PhasePoint::Real(f) => f.truncation(),
            PhasePoint::Nls(u) => u.truncation(),
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            PhasePoint::Real(f) => f.l2_norm_sq(),
            PhasePoint::Nls(u) => u.l2_norm_sq(),
        }
    }

    pub fn as_real(&self) -> Option<&FourierField> {
        match self {
            PhasePoint::Real(f) => Some(f),
            PhasePoint::Nls(_) => None,
        }
    }

    pub fn as_nls(&self) -> Option<&NlsField> {
        match self {
            PhasePoint::Nls(u) => Some(u),
            PhasePoint::Real(_) => None,
        }
    }

    fn check_model(&self, model: Model) -> Result<()> {
        match (self, model) {
            (PhasePoint::Nls(_), Model::Nls) => Ok(()),
            (PhasePoint::Real(_), Model::Kdv | Model::Mkdv) => Ok(()),
            _ => Err(Error::UnsupportedModel(format!(
                "{model} does not match the phase point kind"
            ))),
        }
    }
}

/// `1/2 int (phi')^2 dx/2pi`.
pub fn kinetic(f: &FourierField) -> f64 {
    0.5 * f.derivative().l2_norm_sq()
}

/// `1/2 a0^2 + 1/2 sum j^2 (a_j^2 + b_j^2)`, the quadratic part of the
/// convexity potentials.
pub fn quadratic_part(f: &FourierField) -> f64 {
    0.5 * f.a0() * f.a0() + kinetic(f)
}

fn quadratic_grad(f: &FourierField) -> Vec<f64> {
    let m = f.truncation();
    f.coords()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = FourierField::wavenumber_of(m, i).max(1) as f64;
            k * k * c
        })
        .collect()
}

fn kinetic_grad(f: &FourierField) -> Vec<f64> {
    let mut g = quadratic_grad(f);
    g[0] = 0.0;
    g
}

/// KdV Hamiltonian `1/2 int (phi')^2 - beta/6 int phi^3`.
pub fn energy_kdv(f: &FourierField, beta: f64) -> f64 {
    kinetic(f) - beta / 6.0 * f.power_mean(3)
}

pub fn grad_energy_kdv(f: &FourierField, beta: f64) -> FourierField {
    let cubic = grad_power_mean(f, 3);
    combine(kinetic_grad(f), cubic.coords(), -beta / 6.0)
}

/// Energy on spheres with Lagrange multiplier: `H - lambda/2 int phi^2`.
pub fn energy_constrained(f: &FourierField, beta: f64, lambda: f64) -> f64 {
    energy_kdv(f, beta) - 0.5 * lambda * f.l2_norm_sq()
}

/// Convexity potential of the KdV ensemble,
/// `V = a0^2/2 + 1/2 sum j^2 (a_j^2 + b_j^2) - beta/6 int phi^3`.
pub fn potential_v(f: &FourierField, beta: f64) -> f64 {
    quadratic_part(f) - beta / 6.0 * f.power_mean(3)
}

pub fn grad_v(f: &FourierField, beta: f64) -> FourierField {
    let cubic = grad_power_mean(f, 3);
    combine(quadratic_grad(f), cubic.coords(), -beta / 6.0)
}

/// `V_K`: full quadratic part, cubic term built from the modes `j >= K+1` only.
pub fn potential_v_tail(f: &FourierField, beta: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("tail cutoff K must be >= 1".into()));
    }
    let m = f.truncation();
    let mut tail = FourierField::zeros(m);
    for j in (k + 1)..=m {
        tail.set(j, false, f.a(j));
        tail.set(j, true, f.b(j));
    }
    Ok(quadratic_part(f) - beta / 6.0 * tail.power_mean(3))
}

/// mKdV Hamiltonian `1/2 int (phi')^2 - beta/12 int phi^4`.
pub fn energy_mkdv(f: &FourierField, beta: f64) -> f64 {
    kinetic(f) - beta / 12.0 * f.power_mean(4)
}

pub fn grad_energy_mkdv(f: &FourierField, beta: f64) -> FourierField {
    let quartic = grad_power_mean(f, 4);
    combine(kinetic_grad(f), quartic.coords(), -beta / 12.0)
}

/// NLS Hamiltonian `1/2 int ((Q')^2 + (P')^2) + beta/4 int (P^2 + Q^2)^2`.
pub fn energy_nls(u: &NlsField, beta: f64) -> f64 {
    kinetic(&u.p) + kinetic(&u.q) + beta * nls_quartic(u)
}

pub fn grad_energy_nls(u: &NlsField, beta: f64) -> NlsField {
    let (gp, gq) = grad_nls_quartic(u);
    NlsField {
        p: combine(kinetic_grad(&u.p), gp.coords(), beta),
        q: combine(kinetic_grad(&u.q), gq.coords(), beta),
    }
}

/// `1/4 int (P^2 + Q^2)^2 dx/2pi`.
pub fn nls_quartic(u: &NlsField) -> f64 {
    let n = dealiased_grid_size(u.truncation());
    let p = u.p.to_grid(n).expect("dealiased grid");
    let q = u.q.to_grid(n).expect("dealiased grid");
    let s: f64 = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(a, b)| {
            let r = a * a + b * b;
            r * r
        })
        .sum();
    0.25 * s / n as f64
}

fn grad_nls_quartic(u: &NlsField) -> (FourierField, FourierField) {
    let m = u.truncation();
    let n = dealiased_grid_size(m);
    let p = u.p.to_grid(n).expect("dealiased grid");
    let q = u.q.to_grid(n).expect("dealiased grid");
    let (mut gp, mut gq) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for (a, b) in p.values().iter().zip(q.values()) {
        let r = a * a + b * b;
        gp.push(r * a);
        gq.push(r * b);
    }
    let gp = FourierField::from_grid(&GridField::new(gp).expect("grid"), m).expect("grid");
    let gq = FourierField::from_grid(&GridField::new(gq).expect("grid"), m).expect("grid");
    (gp, gq)
}

/// Coefficient gradient of `int phi^p dx/2pi`, i.e. `p * proj_M(phi^{p-1})`.
fn grad_power_mean(f: &FourierField, p: i32) -> FourierField {
    let m = f.truncation();
    let g = f.to_dealiased_grid().map(|v| v.powi(p - 1));
    FourierField::from_grid(&g, m)
        .expect("dealiased grid")
        .scaled(p as f64)
}

fn combine(base: Vec<f64>, other: &[f64], s: f64) -> FourierField {
    let coords = base.iter().zip(other).map(|(a, b)| a + s * b).collect();
    FourierField::from_coords(coords).expect("finite gradient")
}

/// Interaction functional `W` whose Gibbs weight is `exp(sign * beta * W)`:
/// `int phi^3 / 6` (KdV), `int phi^4 / 12` (mKdV), `int |u|^4 / 4` (NLS).
pub fn interaction(model: Model, point: &PhasePoint) -> Result<f64> {
    point.check_model(model)?;
    Ok(match (model, point) {
        (Model::Kdv, PhasePoint::Real(f)) => f.power_mean(3) / 6.0,
        (Model::Mkdv, PhasePoint::Real(f)) => f.power_mean(4) / 12.0,
        (Model::Nls, PhasePoint::Nls(u)) => nls_quartic(u),
        _ => unreachable!(),
    })
}

/// Hamiltonian of `model` at `point`.
pub fn energy(model: Model, point: &PhasePoint, beta: f64) -> Result<f64> {
    point.check_model(model)?;
    Ok(match (model, point) {
        (Model::Kdv, PhasePoint::Real(f)) => energy_kdv(f, beta),
        (Model::Mkdv, PhasePoint::Real(f)) => energy_mkdv(f, beta),
        (Model::Nls, PhasePoint::Nls(u)) => energy_nls(u, beta),
        _ => unreachable!(),
    })
}

/// Coefficient gradient of [`energy`], flat layout.
pub fn energy_grad(model: Model, point: &PhasePoint, beta: f64) -> Result<Vec<f64>> {
    point.check_model(model)?;
    Ok(match (model, point) {
        (Model::Kdv, PhasePoint::Real(f)) => grad_energy_kdv(f, beta).into_coords(),
        (Model::Mkdv, PhasePoint::Real(f)) => grad_energy_mkdv(f, beta).into_coords(),
        (Model::Nls, PhasePoint::Nls(u)) => PhasePoint::Nls(grad_energy_nls(u, beta)).coords(),
        _ => unreachable!(),
    })
}

/// Convexity potential `quadratic_part - sign * beta * W` of each model, where
/// `exp(sign * beta * W)` is the Gibbs weight. For NLS the quartic term thus
/// enters with the `+` sign of its Hamiltonian.
pub fn gibbs_potential(model: Model, point: &PhasePoint, beta: f64) -> Result<f64> {
    let w = interaction(model, point)?;
    let quad = match point {
        PhasePoint::Real(f) => quadratic_part(f),
        PhasePoint::Nls(u) => quadratic_part(&u.p) + quadratic_part(&u.q),
    };
    Ok(quad - model.weight_sign() * beta * w)
}

pub fn gibbs_potential_grad(model: Model, point: &PhasePoint, beta: f64) -> Result<Vec<f64>> {
    point.check_model(model)?;
    Ok(match (model, point) {
        (Model::Kdv, PhasePoint::Real(f)) => grad_v(f, beta).into_coords(),
        (Model::Mkdv, PhasePoint::Real(f)) => {
            combine(quadratic_grad(f), grad_power_mean(f, 4).coords(), -beta / 12.0).into_coords()
        }
        (Model::Nls, PhasePoint::Nls(u)) => {
            let (gp, gq) = grad_nls_quartic(u);
            let p = combine(quadratic_grad(&u.p), gp.coords(), beta);
            let q = combine(quadratic_grad(&u.q), gq.coords(), beta);
            PhasePoint::Nls(NlsField { p, q }).coords()
        }
        _ => unreachable!(),
    })
}
