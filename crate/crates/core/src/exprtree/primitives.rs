use std::fmt;
use std::str::FromStr;

/// Magnitude bound applied to every intermediate value during evaluation.
pub const CLAMP: f64 = 1e30;

/// The closed function set used by the inner GP loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Function {
    Add,
    Sub,
    Mul,
    /// Analytical quotient `x / sqrt(1 + y^2)`.
    Aq,
    /// `sqrt(|x|)`.
    Sqrt,
    /// `log(1 + |x|)`.
    Log,
    Abs,
    Square,
    /// `sin(pi * x)`.
    SinPi,
    /// `cos(pi * x)`.
    CosPi,
    Max,
    Min,
    Neg,
}

impl Function {
    pub const ALL: [Function; 13] = [
        Function::Add,
        Function::Sub,
        Function::Mul,
        Function::Aq,
        Function::Sqrt,
        Function::Log,
        Function::Abs,
        Function::Square,
        Function::SinPi,
        Function::CosPi,
        Function::Max,
        Function::Min,
        Function::Neg,
    ];

    pub fn arity(self) -> usize {
        match self {
            Function::Add
            | Function::Sub
            | Function::Mul
            | Function::Aq
            | Function::Max
            | Function::Min => 2,
            Function::Sqrt
            | Function::Log
            | Function::Abs
            | Function::Square
            | Function::SinPi
            | Function::CosPi
            | Function::Neg => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Function::Add => "add",
            Function::Sub => "sub",
            Function::Mul => "mul",
            Function::Aq => "aq",
            Function::Sqrt => "sqrt",
            Function::Log => "log",
            Function::Abs => "abs",
            Function::Square => "square",
            Function::SinPi => "sin_pi",
            Function::CosPi => "cos_pi",
            Function::Max => "max",
            Function::Min => "min",
            Function::Neg => "neg",
        }
    }

    /// Scalar semantics. Total on finite inputs; callers clamp the result.
    #[inline]
    pub fn apply1(self, x: f64) -> f64 {
        match self {
            Function::Sqrt => x.abs().sqrt(),
            Function::Log => x.abs().ln_1p(),
            Function::Abs => x.abs(),
            Function::Square => x * x,
            Function::SinPi => (std::f64::consts::PI * x).sin(),
            Function::CosPi => (std::f64::consts::PI * x).cos(),
            Function::Neg => -x,
            _ => unreachable!("{} is not unary", self.symbol()),
        }
    }

    #[inline]
    pub fn apply2(self, x: f64, y: f64) -> f64 {
        match self {
            Function::Add => x + y,
            Function::Sub => x - y,
            Function::Mul => x * y,
            Function::Aq => x / (1.0 + y * y).sqrt(),
            Function::Max => x.max(y),
            Function::Min => x.min(y),
            _ => unreachable!("{} is not binary", self.symbol()),
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Function {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Function::ALL
            .iter()
            .copied()
            .find(|func| func.symbol() == s)
            .ok_or_else(|| format!("unknown function `{s}`"))
    }
}

/// Clamp to the evaluation range; NaN collapses to zero.
#[inline]
pub fn clamp(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(-CLAMP, CLAMP)
    }
}
