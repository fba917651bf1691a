//! Right-hand sides `f(x, u, Du)` and Dirichlet data presets.

use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{shape_matrix, Signature};
use crate::symfunc::sigma_matrix;

const FREQS: [f64; 3] = [1.0, 2.0, 3.0];

fn wave(n: usize) -> DVector<f64> {
    DVector::from_iterator(n, FREQS.iter().copied().cycle().take(n))
}

/// Smooth reference solution `|x|^2/2 + a sin(w.x)` with `w = (1, 2, 3)`
/// truncated to the dimension: value, gradient and Hessian.
pub fn manufactured_exact(x: &[f64], amplitude: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let xv = DVector::from_column_slice(x);
    let w = wave(n);
    let phase = w.dot(&xv);
    let u = 0.5 * xv.norm_squared() + amplitude * phase.sin();
    let du = &xv + amplitude * phase.cos() * &w;
    let d2u = DMatrix::identity(n, n) - amplitude * phase.sin() * &w * w.transpose();
    (u, du, d2u)
}

fn default_amplitude() -> f64 {
    0.1
}

/// Named right-hand sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum RhsSpec {
    /// `f = value`.
    Constant { value: f64 },
    /// `f = n (1 + amplitude sin x_0)`.
    Sine {
        #[serde(default = "default_half")]
        amplitude: f64,
    },
    /// `f = F(u*) + c_u (u - u*) + c_p (|Du|^2 - |Du*|^2)` where `F(u*)` is the
    /// operator applied to [`manufactured_exact`], so `u*` solves the problem.
    Manufactured {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default)]
        c_u: f64,
        #[serde(default)]
        c_p: f64,
    },
    /// `f = amplitude * exp(-u)`.
    ExpDecay { amplitude: f64 },
}

fn default_half() -> f64 {
    0.5
}

/// `f` and its partial derivatives in `u` and `Du`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsValue {
    pub f: f64,
    pub f_u: f64,
    pub f_p: DVector<f64>,
}

impl RhsSpec {
    pub fn eval(&self, x: &[f64], u: f64, p: &DVector<f64>, signature: Signature) -> Result<RhsValue> {
        let n = x.len();
        let zero = DVector::zeros(n);
        Ok(match *self {
            RhsSpec::Constant { value } => RhsValue { f: value, f_u: 0.0, f_p: zero },
            RhsSpec::Sine { amplitude } => {
                RhsValue { f: n as f64 * (1.0 + amplitude * x[0].sin()), f_u: 0.0, f_p: zero }
            }
            RhsSpec::Manufactured { amplitude, c_u, c_p } => {
                let (us, dus, d2us) = manufactured_exact(x, amplitude);
                let k = n as i64 - 1;
                let base = match signature {
                    Signature::Euclidean => sigma_matrix(k, &d2us)?,
                    Signature::Minkowski => sigma_matrix(k, &shape_matrix(&dus, &d2us, signature)?.matrix)?,
                };
                RhsValue {
                    f: base + c_u * (u - us) + c_p * (p.norm_squared() - dus.norm_squared()),
                    f_u: c_u,
                    f_p: 2.0 * c_p * p,
                }
            }
            RhsSpec::ExpDecay { amplitude } => {
                let v = amplitude * (-u).exp();
                RhsValue { f: v, f_u: -v, f_p: zero }
            }
        })
    }
}

/// Named Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPreset {
    /// `|x|^2 / 2`
    Quadratic,
    /// `sqrt(1 + |x|^2)`
    Hyperboloid,
    /// [`manufactured_exact`]
    Manufactured,
    /// `0`
    Zero,
}

/// Dirichlet data: a named preset or an expression in `x0, x1, x2`
/// (aliases `x, y, z`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Preset {
        preset: BoundaryPreset,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    Expr {
        expr: String,
    },
}

impl BoundarySpec {
    pub fn preset(preset: BoundaryPreset) -> Self {
        BoundarySpec::Preset { preset, amplitude: default_amplitude() }
    }

    /// Compiles the data into an evaluator.
    pub fn compile(&self) -> Result<BoundaryFn> {
        match self {
            BoundarySpec::Preset { preset, amplitude } => Ok(BoundaryFn::Preset(*preset, *amplitude)),
            BoundarySpec::Expr { expr } => {
                let node = build_operator_tree::<DefaultNumericTypes>(expr)
                    .map_err(|e| Error::InvalidInput(format!("boundary expression: {e}")))?;
                Ok(BoundaryFn::Expr(Box::new(node)))
            }
        }
    }
}

/// Evaluator produced by [`BoundarySpec::compile`].
pub enum BoundaryFn {
    Preset(BoundaryPreset, f64),
    Expr(Box<Node<DefaultNumericTypes>>),
}

impl BoundaryFn {
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            BoundaryFn::Preset(p, amplitude) => Ok(match p {
                BoundaryPreset::Quadratic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
                BoundaryPreset::Hyperboloid => (1.0 + x.iter().map(|v| v * v).sum::<f64>()).sqrt(),
                BoundaryPreset::Manufactured => manufactured_exact(x, *amplitude).0,
                BoundaryPreset::Zero => 0.0,
            }),
            BoundaryFn::Expr(node) => {
                let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
                for (a, &v) in x.iter().enumerate() {
                    let set = |ctx: &mut HashMapContext<DefaultNumericTypes>, name: String| {
                        ctx.set_value(name, Value::Float(v))
                            .map_err(|e| Error::InvalidInput(format!("boundary expression: {e}")))
                    };
                    set(&mut ctx, format!("x{a}"))?;
                    if let Some(alias) = ["x", "y", "z"].get(a) {
                        set(&mut ctx, alias.to_string())?;
                    }
                }
                let v = node
                    .eval_number_with_context(&ctx)
                    .map_err(|e| Error::InvalidInput(format!("boundary expression: {e}")))?;
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!("boundary expression is not finite at {x:?}")));
                }
                Ok(v)
            }
        }
    }
}

/// Radial right-hand sides `f(rho)` for the sphere problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum RadialRhs {
    /// `coef * rho^exponent`
    Power {
        coef: f64,
        exponent: f64,
    },
    Constant {
        value: f64,
    },
}

impl RadialRhs {
    pub fn eval(&self, rho: f64) -> f64 {
        match *self {
            RadialRhs::Power { coef, exponent } => coef * rho.powf(exponent),
            RadialRhs::Constant { value } => value,
        }
    }
}
