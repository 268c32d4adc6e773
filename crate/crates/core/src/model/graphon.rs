use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Array2;

use crate::error::{Error, Result};

/// The thirteen analytic benchmark graphons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `xy`
    Product,
    /// `exp(-(x^0.7 + y^0.7))`
    ExpPower,
    /// `(x^2 + y^2 + sqrt(x) + sqrt(y)) / 4`
    PolySqrt,
    /// `(x + y) / 2`
    Mean,
    /// `1 / (1 + exp(-10 (x^2 + y^2)))`
    SigmoidSquares,
    /// `1 / (1 + exp(-(max^2 + min^4)))`.
    ///
    /// The published formula for this family is truncated; this is a
    /// reconstruction and is not used for any accuracy claim.
    SigmoidMax,
    /// `exp(-max^0.75)`
    ExpMax,
    /// `exp(-(min + sqrt(x) + sqrt(y)) / 2)`
    ExpMinSqrt,
    /// `log(1 + max)`
    LogMax,
    /// `|x - y|`
    AbsDiff,
    /// `1 - |x - y|`
    OneMinusAbsDiff,
    /// Two diagonal blocks of height 0.8.
    Blocks,
    /// Two off-diagonal blocks of height 0.8.
    Bipartite,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::Product,
        Family::ExpPower,
        Family::PolySqrt,
        Family::Mean,
        Family::SigmoidSquares,
        Family::SigmoidMax,
        Family::ExpMax,
        Family::ExpMinSqrt,
        Family::LogMax,
        Family::AbsDiff,
        Family::OneMinusAbsDiff,
        Family::Blocks,
        Family::Bipartite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Product => "xy",
            Family::ExpPower => "exp-power",
            Family::PolySqrt => "poly-sqrt",
            Family::Mean => "mean",
            Family::SigmoidSquares => "sigmoid-squares",
            Family::SigmoidMax => "sigmoid-max",
            Family::ExpMax => "exp-max",
            Family::ExpMinSqrt => "exp-min-sqrt",
            Family::LogMax => "log-max",
            Family::AbsDiff => "abs-diff",
            Family::OneMinusAbsDiff => "one-minus-abs-diff",
            Family::Blocks => "blocks",
            Family::Bipartite => "bipartite",
        }
    }

    /// Families whose graphs cannot be aligned by sorting degrees.
    pub fn is_hard_to_align(self) -> bool {
        matches!(
            self,
            Family::AbsDiff | Family::OneMinusAbsDiff | Family::Blocks | Family::Bipartite
        )
    }

    fn eval(self, x: f64, y: f64) -> f64 {
        // Arguments arrive ordered (lo <= hi) so every formula is bitwise symmetric.
        let (lo, hi) = (x, y);
        match self {
            Family::Product => lo * hi,
            Family::ExpPower => (-(lo.powf(0.7) + hi.powf(0.7))).exp(),
            Family::PolySqrt => (lo * lo + hi * hi + lo.sqrt() + hi.sqrt()) / 4.0,
            Family::Mean => (lo + hi) / 2.0,
            Family::SigmoidSquares => 1.0 / (1.0 + (-10.0 * (lo * lo + hi * hi)).exp()),
            Family::SigmoidMax => 1.0 / (1.0 + (-(hi * hi + lo.powi(4))).exp()),
            Family::ExpMax => (-hi.powf(0.75)).exp(),
            Family::ExpMinSqrt => (-(lo + lo.sqrt() + hi.sqrt()) / 2.0).exp(),
            Family::LogMax => (1.0 + hi).ln(),
            Family::AbsDiff => hi - lo,
            Family::OneMinusAbsDiff => 1.0 - (hi - lo),
            Family::Blocks => {
                if (lo < 0.5) == (hi < 0.5) {
                    0.8
                } else {
                    0.0
                }
            }
            Family::Bipartite => {
                if (lo < 0.5) != (hi < 0.5) {
                    0.8
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL.iter().copied().find(|f| f.name() == s).ok_or_else(|| {
            let names: Vec<_> = Family::ALL.iter().map(|f| f.name()).collect();
            Error::domain(format!(
                "unknown graphon family `{s}`; expected one of: {}",
                names.join(", ")
            ))
        })
    }
}

/// A ground-truth graphon: either an analytic family or a symmetric grid of
/// values looked up by nearest cell.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphonSpec {
    Analytic(Family),
    Grid(Arc<Array2<f64>>),
}

impl GraphonSpec {
    pub fn grid(values: Array2<f64>) -> Result<Self> {
        let (r, c) = values.dim();
        if r == 0 || r != c {
            return Err(Error::dims("non-empty square grid", format!("{r}x{c}")));
        }
        for ((i, j), &v) in values.indexed_iter() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("grid entry ({i},{j}) = {v} outside [0,1]")));
            }
            if v != values[[j, i]] {
                return Err(Error::domain(format!("grid is not symmetric at ({i},{j})")));
            }
        }
        Ok(GraphonSpec::Grid(Arc::new(values)))
    }

    /// The constant graphon `W(x, y) = p`.
    pub fn constant(p: f64) -> Result<Self> {
        GraphonSpec::grid(Array2::from_elem((1, 1), p))
    }

    pub fn label(&self) -> String {
        match self {
            GraphonSpec::Analytic(f) => f.name().to_string(),
            GraphonSpec::Grid(g) => format!("grid{}", g.nrows()),
        }
    }

    pub(crate) fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        match self {
            GraphonSpec::Analytic(f) => f.eval(lo, hi).clamp(0.0, 1.0),
            GraphonSpec::Grid(g) => {
                let r = g.nrows();
                let cell = |t: f64| ((t * r as f64).floor() as usize).min(r - 1);
                g[[cell(lo), cell(hi)]]
            }
        }
    }
}

impl From<Family> for GraphonSpec {
    fn from(f: Family) -> Self {
        GraphonSpec::Analytic(f)
    }
}

pub fn evaluate_graphon(spec: &GraphonSpec, x: f64, y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::domain(format!("graphon arguments ({x}, {y}) outside [0,1]")));
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Samples the graphon at the midpoints of an `r x r` grid.
pub fn discretize_graphon(spec: &GraphonSpec, r: usize) -> Result<Array2<f64>> {
    if r == 0 {
        return Err(Error::domain("resolution must be positive"));
    }
    let mid: Vec<f64> = (0..r).map(|i| (i as f64 + 0.5) / r as f64).collect();
    let mut out = Array2::zeros((r, r));
    for i in 0..r {
        for j in i..r {
            let v = spec.eval_unchecked(mid[i], mid[j]);
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    Ok(out)
}
