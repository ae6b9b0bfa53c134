//! Coefficient expressions over the coordinates `x`, `y`.
//!
//! Grammar: numbers, `x`, `y`, `pi`, `+ - * / ^`, parentheses and the
//! functions `exp`, `log` (natural), `sin`, `cos`.

use std::f64::consts::PI;
use std::fmt;

use meval::{ContextProvider, FuncEvalError};

#[derive(Clone, Copy)]
struct Point([f64; 2]);

impl ContextProvider for Point {
    fn get_var(&self, name: &str) -> Option<f64> {
        match name {
            "x" => Some(self.0[0]),
            "y" => Some(self.0[1]),
            "pi" => Some(PI),
            _ => None,
        }
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> Result<f64, FuncEvalError> {
        let f: fn(f64) -> f64 = match name {
            "exp" => f64::exp,
            "log" => f64::ln,
            "sin" => f64::sin,
            "cos" => f64::cos,
            _ => return Err(FuncEvalError::UnknownFunction),
        };
        match args {
            [a] => Ok(f(*a)),
            _ => Err(FuncEvalError::NumberArgs(1)),
        }
    }
}

#[derive(Clone)]
pub struct Expression {
    source: String,
    expr: meval::Expr,
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({:?})", self.source)
    }
}

impl Expression {
    /// Parses `source` and checks that every name resolves.
    pub fn parse(source: &str) -> Result<Self, String> {
        let expr: meval::Expr = source
            .parse()
            .map_err(|e| format!("cannot parse {source:?}: {e}"))?;
        expr.eval_with_context(Point([0.5, 0.5]))
            .map_err(|e| format!("in {source:?}: {e}"))?;
        Ok(Self {
            source: source.to_string(),
            expr,
        })
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.expr
            .eval_with_context(Point(x))
            .expect("names were resolved at parse time")
    }
}
