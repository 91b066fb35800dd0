//! Parsing of preset expressions such as `cos2(0.5, 0.25)` or `grad(bump(0.5,0.3))`.

use crate::error::{Error, Result};
use crate::field::{OneFormField, ScalarField};
use crate::manifold::Manifold;

/// Parsed preset expression: a name with numeric or nested arguments.
#[derive(Clone, Debug, PartialEq)]
pub enum PresetExpr {
    Number(f64),
    Call { name: String, args: Vec<PresetExpr> },
}

impl PresetExpr {
    pub fn name(&self) -> Option<&str> {
        match self {
            PresetExpr::Call { name, .. } => Some(name),
            PresetExpr::Number(_) => None,
        }
    }

    /// All arguments as numbers, checking the expected count.
    pub fn numeric_args(&self, expected: usize) -> Result<Vec<f64>> {
        let PresetExpr::Call { name, args } = self else {
            return Err(Error::UnknownPreset(format!("{self:?}")));
        };
        if args.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "{name} takes {expected} argument(s), got {}",
                args.len()
            )));
        }
        args.iter()
            .map(|a| match a {
                PresetExpr::Number(v) => Ok(*v),
                other => Err(Error::InvalidParameter(format!("{name}: expected a number, got {other:?}"))),
            })
            .collect()
    }
}

const MAX_DEPTH: usize = 16;

pub fn parse(input: &str) -> Result<PresetExpr> {
    let mut p = Parser { s: input.as_bytes(), pos: 0 };
    let e = p.expr(0)?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::InvalidParameter(format!(
            "preset parse error at byte {}: {what} in {:?}",
            self.pos,
            String::from_utf8_lossy(self.s)
        ))
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self, depth: usize) -> Result<PresetExpr> {
        if depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        self.ws();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.call(depth),
            Some(c) if c.is_ascii_digit() || matches!(c, b'-' | b'+' | b'.') => self.number(),
            _ => Err(self.err("expected a name or a number")),
        }
    }

    fn number(&mut self) -> Result<PresetExpr> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, b'-' | b'+' | b'.') {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).map_err(|_| self.err("invalid utf-8"))?;
        let v: f64 = text.parse().map_err(|_| self.err("invalid number"))?;
        if !v.is_finite() {
            return Err(self.err("non-finite number"));
        }
        Ok(PresetExpr::Number(v))
    }

    fn call(&mut self, depth: usize) -> Result<PresetExpr> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let name = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.ws();
        let mut args = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            self.ws();
            if self.peek() == Some(b')') {
                self.pos += 1;
            } else {
                loop {
                    args.push(self.expr(depth + 1)?);
                    self.ws();
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected ',' or ')'")),
                    }
                }
            }
        }
        Ok(PresetExpr::Call { name, args })
    }
}

pub fn manifold(name: &str) -> Result<Manifold> {
    match name.trim() {
        "flat_torus" => Ok(Manifold::FlatTorus),
        "unit_sphere" => Ok(Manifold::UnitSphere),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Scalar field presets with their parameter signatures, in listing order.
pub const SCALAR_PRESETS: &[&str] = &["coscos", "bump(c,r)", "cosx", "cosy", "sinx", "siny", "zcoord", "const(c)"];

/// 1-form presets with their parameter signatures, in listing order.
pub const ONE_FORM_PRESETS: &[&str] = &["grad(field)", "rot(field)", "e1", "e2", "sinx_e1"];

pub fn scalar_field(expr: &PresetExpr) -> Result<ScalarField> {
    let name = expr.name().ok_or_else(|| Error::UnknownPreset(format!("{expr:?}")))?;
    let f = match name {
        "coscos" => {
            expr.numeric_args(0)?;
            ScalarField::coscos()
        }
        "bump" => {
            let a = expr.numeric_args(2)?;
            if !(a[1] > 0.0 && a[1] <= 1.0) {
                return Err(Error::InvalidParameter(format!("bump radius must be in (0, 1], got {}", a[1])));
            }
            ScalarField::bump(a[0], a[1])
        }
        "cosx" => nullary(expr, ScalarField::cos_wave(0, 1.0))?,
        "cosy" => nullary(expr, ScalarField::cos_wave(1, 1.0))?,
        "sinx" => nullary(expr, ScalarField::sin_wave(0, 1.0))?,
        "siny" => nullary(expr, ScalarField::sin_wave(1, 1.0))?,
        "zcoord" => nullary(expr, ScalarField::coordinate(2))?,
        "const" => ScalarField::constant(expr.numeric_args(1)?[0]),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(f)
}

fn nullary<T>(expr: &PresetExpr, v: T) -> Result<T> {
    expr.numeric_args(0)?;
    Ok(v)
}

pub fn one_form(expr: &PresetExpr) -> Result<OneFormField> {
    let PresetExpr::Call { name, args } = expr else {
        return Err(Error::UnknownPreset(format!("{expr:?}")));
    };
    let inner = || -> Result<ScalarField> {
        match args.as_slice() {
            [a] => scalar_field(a),
            _ => Err(Error::InvalidParameter(format!("{name} takes one field argument"))),
        }
    };
    Ok(match name.as_str() {
        "grad" => OneFormField::gradient(&inner()?),
        "rot" => OneFormField::rotated_gradient(&inner()?),
        "e1" => nullary(expr, OneFormField::constant([1.0, 0.0, 0.0]))?,
        "e2" => nullary(expr, OneFormField::constant([0.0, 1.0, 0.0]))?,
        "sinx_e1" => nullary(
            expr,
            OneFormField::from_components([
                ScalarField::sin_wave(0, 1.0),
                ScalarField::constant(0.0),
                ScalarField::constant(0.0),
            ]),
        )?,
        other => return Err(Error::UnknownPreset(other.to_string())),
    })
}
