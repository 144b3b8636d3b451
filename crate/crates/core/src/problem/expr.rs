//! Expression trees for objectives and constraints declared in problem files.
//!
//! Only total operations are offered (no division, non-negative integer
//! powers), so a validated expression evaluates to a finite number for every
//! finite input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Expr {
    Const { value: f64 },
    /// Decision coordinate `u[index]`.
    U { index: usize },
    /// Disturbance coordinate `δ[index]`.
    Delta { index: usize },
    Add { args: Vec<Expr> },
    Mul { args: Vec<Expr> },
    Sub { lhs: Box<Expr>, rhs: Box<Expr> },
    Neg { arg: Box<Expr> },
    Pow { base: Box<Expr>, exp: u32 },
}

const MAX_POW: u32 = 16;

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const { value }
    }

    pub fn u(index: usize) -> Self {
        Expr::U { index }
    }

    pub fn delta(index: usize) -> Self {
        Expr::Delta { index }
    }

    pub fn add(args: Vec<Expr>) -> Self {
        Expr::Add { args }
    }

    pub fn mul(args: Vec<Expr>) -> Self {
        Expr::Mul { args }
    }

    pub fn sub(lhs: Expr, rhs: Expr) -> Self {
        Expr::Sub {
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn pow(base: Expr, exp: u32) -> Self {
        Expr::Pow {
            base: Box::new(base),
            exp,
        }
    }

    /// Checks variable indices against the problem dimensions. A
    /// `delta_dim` of `None` forbids disturbance references (objectives).
    pub fn validate(&self, u_dim: usize, delta_dim: Option<usize>) -> Result<()> {
        match self {
            Expr::Const { value } if !value.is_finite() => {
                Err(Error::invalid(format!("non-finite constant {value}")))
            }
            Expr::Const { .. } => Ok(()),
            Expr::U { index } if *index >= u_dim => Err(Error::invalid(format!(
                "u[{index}] out of range for decision dimension {u_dim}"
            ))),
            Expr::U { .. } => Ok(()),
            Expr::Delta { index } => match delta_dim {
                None => Err(Error::invalid("objective may not reference the disturbance")),
                Some(d) if *index >= d => Err(Error::invalid(format!(
                    "delta[{index}] out of range for disturbance dimension {d}"
                ))),
                Some(_) => Ok(()),
            },
            Expr::Add { args } | Expr::Mul { args } => {
                args.iter().try_for_each(|a| a.validate(u_dim, delta_dim))
            }
            Expr::Sub { lhs, rhs } => {
                lhs.validate(u_dim, delta_dim)?;
                rhs.validate(u_dim, delta_dim)
            }
            Expr::Neg { arg } => arg.validate(u_dim, delta_dim),
            Expr::Pow { exp, .. } if *exp > MAX_POW => {
                Err(Error::invalid(format!("power {exp} exceeds limit {MAX_POW}")))
            }
            Expr::Pow { base, .. } => base.validate(u_dim, delta_dim),
        }
    }

    pub fn eval(&self, u: &[f64], delta: &[f64]) -> f64 {
        match self {
            Expr::Const { value } => *value,
            Expr::U { index } => u[*index],
            Expr::Delta { index } => delta[*index],
            Expr::Add { args } => args.iter().map(|a| a.eval(u, delta)).sum(),
            Expr::Mul { args } => args.iter().map(|a| a.eval(u, delta)).product(),
            Expr::Sub { lhs, rhs } => lhs.eval(u, delta) - rhs.eval(u, delta),
            Expr::Neg { arg } => -arg.eval(u, delta),
            Expr::Pow { base, exp } => base.eval(u, delta).powi(*exp as i32),
        }
    }
}
