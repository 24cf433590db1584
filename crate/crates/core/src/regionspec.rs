//! JSON region documents.
//!
//! ```json
//! {"kind": "union", "of": [
//!     {"kind": "ball", "center": [0, 0], "radius": 1},
//!     {"kind": "polar_star", "rho": "1 + cos(theta)"}
//! ]}
//! ```
//!
//! Every node may carry `"bounds": {"lo": [...], "hi": [...]}`, which clips
//! the figure to that box. Errors name the offending field by path, e.g.
//! `of[1].radius`.

use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr};
use crate::func::RangeMethod;
use crate::geometry::{Interval, Point};
use crate::region::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Hypograph { f: String, a: f64, b: f64, range: RangeMethod },
    PolarStar { rho: String, range: RangeMethod },
    Union { of: Vec<RegionSpec> },
    Intersect { of: Vec<RegionSpec> },
    Complement { of: Box<RegionSpec>, within: BoxSpec },
    Dense { lo: Vec<f64>, hi: Vec<f64> },
    Product { of: Vec<RegionSpec> },
}

/// A parsed, not yet validated, region document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSpec {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoxSpec>,
}

/// Parses and validates a region document.
pub fn parse_region(doc: &str) -> Result<Region> {
    RegionSpec::from_json(doc)?.build()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BallFields {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HypographFields {
    f: String,
    a: f64,
    b: f64,
    #[serde(default)]
    range: RangeMethod,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolarFields {
    rho: String,
    #[serde(default)]
    range: RangeMethod,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ListFields {
    of: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ComplementFields {
    of: Value,
    within: BoxSpec,
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema { path: if path.is_empty() { "$".into() } else { path.into() }, message: message.into() }
}

fn field(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

fn typed<T: DeserializeOwned>(fields: Map<String, Value>, path: &str) -> Result<T> {
    serde_path_to_error::deserialize(Value::Object(fields)).map_err(|e| {
        let inner = e.path().to_string();
        let at = if inner == "." { path.to_string() } else { field(path, &inner) };
        schema(&at, e.into_inner().to_string())
    })
}

impl RegionSpec {
    pub fn from_json(doc: &str) -> Result<RegionSpec> {
        let value: Value = serde_json::from_str(doc).map_err(|e| schema("", e.to_string()))?;
        Self::from_value(&value, "")
    }

    fn from_value(value: &Value, path: &str) -> Result<RegionSpec> {
        let Value::Object(obj) = value else {
            return Err(schema(path, "expected an object"));
        };
        let mut fields = obj.clone();
        let kind = match fields.remove("kind") {
            Some(Value::String(k)) => k,
            Some(_) => return Err(schema(&field(path, "kind"), "expected a string")),
            None => return Err(schema(path, "missing field `kind`")),
        };
        let bounds = match fields.remove("bounds") {
            Some(b) => Some(typed::<BoxSpec>(b.as_object().cloned().ok_or_else(|| schema(&field(path, "bounds"), "expected an object"))?, &field(path, "bounds"))?),
            None => None,
        };
        let children = |of: Vec<Value>| -> Result<Vec<RegionSpec>> {
            of.iter().enumerate().map(|(i, v)| Self::from_value(v, &format!("{}[{i}]", field(path, "of")))).collect()
        };
        let shape = match kind.as_str() {
            "ball" => {
                let f: BallFields = typed(fields, path)?;
                Shape::Ball { center: f.center, radius: f.radius }
            }
            "box" | "dense" => {
                let f: BoxSpec = typed(fields, path)?;
                if kind == "box" {
                    Shape::Box { lo: f.lo, hi: f.hi }
                } else {
                    Shape::Dense { lo: f.lo, hi: f.hi }
                }
            }
            "hypograph" => {
                let f: HypographFields = typed(fields, path)?;
                Shape::Hypograph { f: f.f, a: f.a, b: f.b, range: f.range }
            }
            "polar_star" => {
                let f: PolarFields = typed(fields, path)?;
                Shape::PolarStar { rho: f.rho, range: f.range }
            }
            "union" => Shape::Union { of: children(typed::<ListFields>(fields, path)?.of)? },
            "intersect" => Shape::Intersect { of: children(typed::<ListFields>(fields, path)?.of)? },
            "product" => Shape::Product { of: children(typed::<ListFields>(fields, path)?.of)? },
            "complement" => {
                let f: ComplementFields = typed(fields, path)?;
                Shape::Complement { of: Box::new(Self::from_value(&f.of, &field(path, "of"))?), within: f.within }
            }
            other => {
                return Err(schema(
                    &field(path, "kind"),
                    format!("unknown kind `{other}`; expected one of ball, box, hypograph, polar_star, union, intersect, complement, dense, product"),
                ))
            }
        };
        Ok(RegionSpec { shape, bounds })
    }

    /// Validates the document and lowers it onto region constructors.
    pub fn build(&self) -> Result<Region> {
        self.build_at("")
    }

    fn build_at(&self, path: &str) -> Result<Region> {
        let at = |name: &str| field(path, name);
        let lift = |name: &str| {
            let p = at(name);
            move |e: Error| match e {
                Error::Schema { .. } => e,
                other => schema(&p, other.to_string()),
            }
        };
        let region = match &self.shape {
            Shape::Ball { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(schema(&at("radius"), "radius must be positive"));
                }
                let c = Point::new(center.clone()).map_err(lift("center"))?;
                Region::ball(&c, *radius).map_err(lift("radius"))?
            }
            Shape::Box { lo, hi } => Region::cuboid(box_of(lo, hi, path)?),
            Shape::Dense { lo, hi } => Region::dense(box_of(lo, hi, path)?),
            Shape::Hypograph { f, a, b, range } => {
                let e = one_variable(f, &at("f"))?;
                if !(a < b) {
                    return Err(schema(&at("b"), format!("need a < b, got a = {a}, b = {b}")));
                }
                Region::hypograph(Arc::new(e), *a, *b, *range).map_err(lift("f"))?
            }
            Shape::PolarStar { rho, range } => {
                let e = one_variable(rho, &at("rho"))?;
                Region::polar_star(Arc::new(e), *range).map_err(lift("rho"))?
            }
            Shape::Union { of } | Shape::Intersect { of } | Shape::Product { of } => {
                if of.is_empty() {
                    return Err(schema(&at("of"), "needs at least one region"));
                }
                let parts = of
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s.build_at(&format!("{}[{i}]", at("of"))))
                    .collect::<Result<Vec<_>>>()?;
                match &self.shape {
                    Shape::Union { .. } => Region::union(parts),
                    Shape::Intersect { .. } => Region::intersect(parts),
                    _ => Region::product(parts),
                }
                .map_err(lift("of"))?
            }
            Shape::Complement { of, within } => {
                let inner = of.build_at(&at("of"))?;
                let w = box_of(&within.lo, &within.hi, &at("within"))?;
                Region::complement_within(inner, w).map_err(lift("within"))?
            }
        };
        match &self.bounds {
            Some(b) => {
                let b = box_of(&b.lo, &b.hi, &at("bounds"))?;
                region.with_bounds(b).map_err(lift("bounds"))
            }
            None => Ok(region),
        }
    }
}

fn box_of(lo: &[f64], hi: &[f64], path: &str) -> Result<Interval> {
    Interval::new(lo.to_vec(), hi.to_vec()).map_err(|e| schema(path, e.to_string()))
}

fn one_variable(src: &str, path: &str) -> Result<Expr> {
    let e = parse_expression(src).map_err(|e| schema(path, e.to_string()))?;
    if e.arity() > 1 {
        return Err(schema(path, format!("`{src}` must use a single variable")));
    }
    Ok(e)
}
