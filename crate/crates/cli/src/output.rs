//! CSV rows and number formatting.

use std::io::Write;

use ccsim_core::Rational;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::Result;

pub const CURVE_HEADER: [&str; 14] = [
    "M",
    "M_exact",
    "formula_rate",
    "formula_rate_exact",
    "bound_rate",
    "bound_rate_exact",
    "measured_rate",
    "measured_rate_exact",
    "measured_std_err",
    "trials",
    "scheme",
    "seed",
    "label",
    "note",
];

pub const TRIAL_HEADER: [&str; 10] = [
    "scheme",
    "M",
    "M_exact",
    "trial",
    "trial_seed",
    "rate",
    "rate_exact",
    "users",
    "decoded",
    "label",
];

/// A value that is either an exact rational or only known as a float.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(f64),
}

impl Value {
    pub fn exact(r: Rational) -> Self {
        Value::Exact(big(r))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(x) => *x,
        }
    }

    /// The decimal and exact columns.
    fn columns(v: Option<&Value>) -> [String; 2] {
        match v {
            None => [String::new(), String::new()],
            Some(Value::Approx(x)) => [sig12(*x), String::new()],
            Some(Value::Exact(r)) => [sig12(r.to_f64().unwrap_or(f64::NAN)), fmt_big(r)],
        }
    }
}

pub fn big(r: Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn fmt_rational(r: Rational) -> String {
    fmt_big(&big(r))
}

/// `p/q`, or `p` for integers.
pub fn fmt_big(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal with 12 significant digits and trailing zeros removed.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci
        .split_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-6..15).contains(&exp) {
        let prec = (11 - exp).max(0) as usize;
        trim(format!("{x:.prec$}"))
    } else {
        let (mantissa, e) = sci.split_once('e').unwrap_or((&sci, "0"));
        format!("{}e{e}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// One point of a rate curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub m: Rational,
    pub formula: Option<Value>,
    pub bound: Option<Value>,
    pub measured: Option<Value>,
    pub std_err: Option<f64>,
    pub trials: usize,
    pub scheme: String,
    pub seed: u64,
    pub label: String,
    pub note: String,
}

impl CurveRow {
    pub fn new(m: Rational, scheme: &str, seed: u64) -> Self {
        Self {
            m,
            formula: None,
            bound: None,
            measured: None,
            std_err: None,
            trials: 0,
            scheme: scheme.to_string(),
            seed,
            label: String::new(),
            note: String::new(),
        }
    }

    fn record(&self) -> Vec<String> {
        let [f, fx] = Value::columns(self.formula.as_ref());
        let [b, bx] = Value::columns(self.bound.as_ref());
        let [r, rx] = Value::columns(self.measured.as_ref());
        vec![
            sig12(self.m.to_f64().unwrap_or(f64::NAN)),
            fmt_rational(self.m),
            f,
            fx,
            b,
            bx,
            r,
            rx,
            self.std_err.map(sig12).unwrap_or_default(),
            if self.measured.is_some() {
                self.trials.to_string()
            } else {
                String::new()
            },
            self.scheme.clone(),
            self.seed.to_string(),
            self.label.clone(),
            self.note.clone(),
        ]
    }
}

/// One simulated trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub scheme: String,
    pub m: Rational,
    pub trial: usize,
    pub trial_seed: u64,
    pub rate: BigRational,
    pub users: usize,
    pub decoded: bool,
    pub label: String,
}

impl TrialRow {
    fn record(&self) -> Vec<String> {
        vec![
            self.scheme.clone(),
            sig12(self.m.to_f64().unwrap_or(f64::NAN)),
            fmt_rational(self.m),
            self.trial.to_string(),
            self.trial_seed.to_string(),
            sig12(self.rate.to_f64().unwrap_or(f64::NAN)),
            fmt_big(&self.rate),
            self.users.to_string(),
            self.decoded.to_string(),
            self.label.clone(),
        ]
    }
}

pub fn write_curve<W: Write>(out: W, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trials<W: Write>(out: W, rows: &[TrialRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccsim_core::rational;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(4.0), "4");
        assert_eq!(sig12(2.0 / 3.0), "0.666666666667");
        assert_eq!(sig12(48.90890230020664), "48.9089023002");
        assert_eq!(sig12(9.999999999999995), "10");
        assert_eq!(sig12(1.5e-9), "1.5e-9");
        assert_eq!(sig12(-0.25), "-0.25");
    }

    #[test]
    fn exact_column() {
        assert_eq!(fmt_rational(rational(3, 2)), "3/2");
        assert_eq!(fmt_rational(rational(4, 1)), "4");
    }

    #[test]
    fn curve_csv_has_header_and_quotes_labels() {
        let mut row = CurveRow::new(rational(1, 1), "su", 0);
        row.formula = Some(Value::exact(rational(10, 1)));
        row.label = "H={3} I={1,2}".into();
        let mut buf = Vec::new();
        write_curve(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CURVE_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "1,1,10,10,,,,,,,su,0,\"H={3} I={1,2}\","
        );
    }
}
