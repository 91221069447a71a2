//! Closed-form scalar expressions in chart coordinates `x1 … xn` (and an
//! optional curve parameter `t`), evaluated together with an exact directional
//! derivative by forward-mode dual numbers.

mod dual;
mod parser;

pub use dual::Dual;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("expression dimension must be positive")]
    ZeroDimension,
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier `{name}` at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("variable x{index} at {pos} out of range for dimension {dimension}")]
    VariableOutOfRange {
        index: usize,
        dimension: usize,
        pos: usize,
    },
    #[error("exponent at {pos} must be an integer constant")]
    NonIntegerExponent { pos: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sqrt of non-positive value {0}")]
    SqrtNonPositive(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("curve parameter `t` used without a value")]
    MissingParam,
    #[error("non-finite result")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Param,
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, i32),
    Func(Func, Box<Node>),
}

/// Parsed, immutable expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    dimension: usize,
    source: String,
}

/// Parse `text` over coordinates `x1 … x{dimension}`; `t` is accepted only
/// when `allow_param` is set.
pub fn parse(text: &str, dimension: usize, allow_param: bool) -> Result<Expression, ParseError> {
    parser::parse(text, dimension, allow_param)
}

struct Inputs<'a> {
    point: &'a [f64],
    direction: &'a [f64],
    param: Option<Dual>,
}

impl Expression {
    fn from_parts(root: Node, dimension: usize, source: &str) -> Self {
        Self {
            root,
            dimension,
            source: source.trim().to_string(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn uses_coordinates(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Var(_) => true,
                Node::Const(_) | Node::Param => false,
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    walk(a) || walk(b)
                }
                Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) => walk(a),
            }
        }
        walk(&self.root)
    }

    /// Value and directional derivative `Df(point)·direction`.
    pub fn eval_dual(&self, point: &[f64], direction: &[f64]) -> Result<(f64, f64), EvalError> {
        let d = self.eval_inputs(&Inputs {
            point,
            direction,
            param: None,
        })?;
        Ok((d.re, d.eps))
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        let zeros = vec![0.0; point.len()];
        self.eval_dual(point, &zeros).map(|(v, _)| v)
    }

    /// Evaluation with a value for the curve parameter; `t.eps` seeds the
    /// derivative along the parameter.
    pub fn eval_with_param(
        &self,
        point: &[f64],
        direction: &[f64],
        t: Dual,
    ) -> Result<Dual, EvalError> {
        self.eval_inputs(&Inputs {
            point,
            direction,
            param: Some(t),
        })
    }

    fn eval_inputs(&self, inputs: &Inputs<'_>) -> Result<Dual, EvalError> {
        for len in [inputs.point.len(), inputs.direction.len()] {
            if len != self.dimension {
                return Err(EvalError::DimensionMismatch {
                    expected: self.dimension,
                    got: len,
                });
            }
        }
        let v = eval_node(&self.root, inputs)?;
        if v.re.is_finite() && v.eps.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn eval_node(node: &Node, inp: &Inputs<'_>) -> Result<Dual, EvalError> {
    Ok(match node {
        Node::Const(c) => Dual::constant(*c),
        Node::Var(i) => Dual::new(inp.point[*i], inp.direction[*i]),
        Node::Param => inp.param.ok_or(EvalError::MissingParam)?,
        Node::Add(a, b) => eval_node(a, inp)? + eval_node(b, inp)?,
        Node::Sub(a, b) => eval_node(a, inp)? - eval_node(b, inp)?,
        Node::Mul(a, b) => eval_node(a, inp)? * eval_node(b, inp)?,
        Node::Div(a, b) => {
            let den = eval_node(b, inp)?;
            if den.re == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            eval_node(a, inp)? / den
        }
        Node::Neg(a) => -eval_node(a, inp)?,
        Node::Pow(a, n) => {
            let base = eval_node(a, inp)?;
            if *n < 0 && base.re == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            base.powi(*n)
        }
        Node::Func(f, a) => {
            let x = eval_node(a, inp)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Sqrt => {
                    if x.re <= 0.0 {
                        return Err(EvalError::SqrtNonPositive(x.re));
                    }
                    x.sqrt()
                }
            }
        }
    })
}
