use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Solar,
    Wind,
    Consumer,
}

/// Polynomial cost `lin·v + quad·v² + quart·v⁴ + constant` on `[0, 1]`.
///
/// The three families differ in which terms are free:
///
/// * solar: `v + a·v² + b·v⁴`
/// * wind: `v + a·v² + c`
/// * consumer: `a·v² + b·v⁴ + c`, with `a > 0` so the derivative stays
///   positive away from the origin.
///
/// Fields are private; construct through [`CostFunction::solar`],
/// [`CostFunction::wind`] or [`CostFunction::consumer`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostFunction {
    kind: CostKind,
    lin: f64,
    quad: f64,
    quart: f64,
    constant: f64,
}

fn check_coef(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "cost coefficient {name} must be finite and nonnegative, got {value}"
        )))
    }
}

fn check_domain(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain { value: v })
    }
}

impl CostFunction {
    pub fn solar(a: f64, b: f64) -> Result<Self> {
        check_coef("a", a)?;
        check_coef("b", b)?;
        Ok(Self {
            kind: CostKind::Solar,
            lin: 1.0,
            quad: a,
            quart: b,
            constant: 0.0,
        })
    }

    pub fn wind(a: f64, c: f64) -> Result<Self> {
        check_coef("a", a)?;
        check_coef("c", c)?;
        Ok(Self {
            kind: CostKind::Wind,
            lin: 1.0,
            quad: a,
            quart: 0.0,
            constant: c,
        })
    }

    pub fn consumer(a: f64, b: f64, c: f64) -> Result<Self> {
        check_coef("a", a)?;
        check_coef("b", b)?;
        check_coef("c", c)?;
        if a <= 0.0 {
            return Err(Error::Config(
                "consumer cost needs a strictly positive quadratic coefficient".into(),
            ));
        }
        Ok(Self {
            kind: CostKind::Consumer,
            lin: 0.0,
            quad: a,
            quart: b,
            constant: c,
        })
    }

    /// Builds a cost of the given kind from the `(a, b, c)` triple used in
    /// configuration files. Coefficients that the family does not use must be
    /// zero.
    pub fn from_coefficients(kind: CostKind, coef: Coefficients) -> Result<Self> {
        let Coefficients { a, b, c } = coef;
        match kind {
            CostKind::Solar if c != 0.0 => Err(Error::Config(
                "solar costs carry no constant term (c must be 0)".into(),
            )),
            CostKind::Wind if b != 0.0 => Err(Error::Config(
                "wind costs carry no quartic term (b must be 0)".into(),
            )),
            CostKind::Solar => Self::solar(a, b),
            CostKind::Wind => Self::wind(a, c),
            CostKind::Consumer => Self::consumer(a, b, c),
        }
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            a: self.quad,
            b: self.quart,
            c: self.constant,
        }
    }

    pub fn kind(&self) -> CostKind {
        self.kind
    }

    pub fn lin_coef(&self) -> f64 {
        self.lin
    }

    pub fn quad_coef(&self) -> f64 {
        self.quad
    }

    pub fn quart_coef(&self) -> f64 {
        self.quart
    }

    pub fn const_coef(&self) -> f64 {
        self.constant
    }

    pub fn eval(&self, v: f64) -> Result<f64> {
        check_domain(v)?;
        Ok(self.eval_unchecked(v))
    }

    pub fn deriv(&self, v: f64) -> Result<f64> {
        check_domain(v)?;
        Ok(self.deriv_unchecked(v))
    }

    pub(crate) fn eval_unchecked(&self, v: f64) -> f64 {
        let v2 = v * v;
        self.lin * v + self.quad * v2 + self.quart * v2 * v2 + self.constant
    }

    pub(crate) fn deriv_unchecked(&self, v: f64) -> f64 {
        self.lin + 2.0 * self.quad * v + 4.0 * self.quart * v * v * v
    }

    pub(crate) fn second_deriv_unchecked(&self, v: f64) -> f64 {
        2.0 * self.quad + 12.0 * self.quart * v * v
    }
}

/// Raw `(a, b, c)` coefficient triple as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c: f64,
}
