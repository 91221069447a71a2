//! Built-in example catalog.
//!
//! | name         | chart | metric             | one-form                        |
//! |--------------|-------|--------------------|---------------------------------|
//! | `flat-const` | ℝ³    | Euclidean          | `0.5 dx1`                       |
//! | `helical`    | ℝ³    | Euclidean          | `0.5 (cos x3 dx1 + sin x3 dx2)` |
//! | `shear`      | ℝ²    | Euclidean          | `(x1/2) dx2`                    |
//! | `warped-2d`  | ℝ²    | `dx1² + e^{2x1} dx2²` | `0.5 dx1`                    |
//!
//! `shear` is the failure case: `|β♯|` varies, so no compatible connection
//! exists.

use std::fmt;
use std::str::FromStr;

use crate::geometry::{DomainBox, FieldSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Example {
    FlatConst,
    Helical,
    Shear,
    Warped2d,
}

/// Curve given by component expressions in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveDef {
    pub components: Vec<String>,
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

impl Example {
    pub const ALL: [Example; 4] = [
        Example::FlatConst,
        Example::Helical,
        Example::Shear,
        Example::Warped2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Example::FlatConst => "flat-const",
            Example::Helical => "helical",
            Example::Shear => "shear",
            Example::Warped2d => "warped-2d",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            Example::FlatConst | Example::Helical => 3,
            Example::Shear | Example::Warped2d => 2,
        }
    }

    pub fn metric(self) -> Vec<Vec<String>> {
        let n = self.dimension();
        let mut rows: Vec<Vec<String>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { "1" } else { "0" }.to_string()).collect())
            .collect();
        if self == Example::Warped2d {
            rows[1][1] = "exp(2*x1)".into();
        }
        rows
    }

    pub fn beta(self) -> Vec<String> {
        let b: &[&str] = match self {
            Example::FlatConst => &["0.5", "0", "0"],
            Example::Helical => &["0.5*cos(x3)", "0.5*sin(x3)", "0"],
            Example::Shear => &["0", "x1/2"],
            Example::Warped2d => &["0.5", "0"],
        };
        b.iter().map(|s| s.to_string()).collect()
    }

    pub fn domain(self) -> DomainBox {
        let (n, half) = match self {
            Example::FlatConst => (3, 1.0),
            Example::Helical => (3, 2.0),
            Example::Shear => (2, 0.9),
            Example::Warped2d => (2, 1.0),
        };
        DomainBox {
            min: vec![-half; n],
            max: vec![half; n],
        }
    }

    pub fn field_spec(self) -> FieldSpec {
        FieldSpec::new(self.dimension(), &self.metric(), &self.beta(), self.domain())
            .expect("built-in example is well formed")
    }

    /// The point the worked values refer to.
    pub fn reference_point(self) -> Vec<f64> {
        match self {
            Example::Shear => vec![0.5, 0.0],
            _ => vec![0.0; self.dimension()],
        }
    }

    pub fn curves(self) -> Vec<CurveDef> {
        let c = |comps: &[&str], t1: f64| CurveDef {
            components: comps.iter().map(|s| s.to_string()).collect(),
            t0: 0.0,
            t1,
            steps: 1000,
        };
        match self {
            Example::FlatConst => vec![c(&["0.6*t", "0.8*t", "0"], 1.0)],
            Example::Helical => vec![
                c(&["0", "0", "t"], std::f64::consts::FRAC_PI_2),
                c(&["0.6*t", "0.3*t^2", "0.8*t"], 1.0),
            ],
            Example::Shear => vec![c(&["0.5", "t"], 0.5)],
            Example::Warped2d => vec![c(&["0.6*t", "0.8*t"], 1.0)],
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Example {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Example::ALL.iter().map(|e| e.name()).collect();
                format!("unknown example `{s}` (expected one of {})", names.join(", "))
            })
    }
}
