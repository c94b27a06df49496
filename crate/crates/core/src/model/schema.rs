//! On-disk problem format.
//!
//! Problems are stored as JSON documents with the layout
//!
//! ```json
//! {
//!   "n": 2,
//!   "base": {
//!     "ridge": 0.1,
//!     "quad_terms": [{"c": 1.0, "a": [1.0, -1.0], "b": 0.0}],
//!     "box": {"l": [null, 0.0], "u": [null, 1.0]}
//!   },
//!   "terms": [
//!     {"loss": {"kind": "square"}, "a": [1.0, 0.0], "b": -1.0,
//!      "weight": 1.0, "alpha": 0.5}
//!   ]
//! }
//! ```
//!
//! `null` box entries mean unbounded (`-inf` below, `+inf` above). A `null`
//! `alpha` means `+inf`, i.e. the term is never clipped. Loss kinds are
//! `"square"`, `"huber"` (requires `"delta"`), and `"logistic"` (requires
//! `"label"`). Dimensions are explicit and strictly validated; no
//! broadcasting.

use serde::{Deserialize, Serialize};

use super::{AffineExpr, BaseObjective, ClippedTerm, LossAtom, Problem, QuadTerm};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ProblemDoc {
    n: usize,
    base: BaseDoc,
    terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
struct BaseDoc {
    ridge: f64,
    quad_terms: Vec<QuadDoc>,
    #[serde(rename = "box")]
    bounds: BoxDoc,
}

#[derive(Serialize, Deserialize)]
struct QuadDoc {
    c: f64,
    a: Vec<f64>,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct BoxDoc {
    l: Vec<Option<f64>>,
    u: Vec<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    loss: LossDoc,
    a: Vec<f64>,
    b: f64,
    weight: f64,
    alpha: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct LossDoc {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<f64>,
}

/// Parse a problem document; the result is fully validated.
pub fn parse_problem(text: &str) -> Result<Problem> {
    let doc: ProblemDoc = serde_json::from_str(text)?;
    let mut terms = Vec::with_capacity(doc.terms.len());
    for (i, t) in doc.terms.into_iter().enumerate() {
        let loss = match t.loss.kind.as_str() {
            "square" => LossAtom::Square,
            "huber" => LossAtom::Huber {
                delta: t.loss.delta.ok_or_else(|| {
                    Error::Validation(format!("terms[{i}]: huber loss requires \"delta\""))
                })?,
            },
            "logistic" => LossAtom::Logistic {
                label: t.loss.label.ok_or_else(|| {
                    Error::Validation(format!("terms[{i}]: logistic loss requires \"label\""))
                })?,
            },
            other => {
                return Err(Error::UnknownLossKind {
                    kind: other.to_string(),
                    term_index: i,
                })
            }
        };
        terms.push(ClippedTerm {
            loss,
            expr: AffineExpr::new(t.a, t.b),
            weight: t.weight,
            alpha: t.alpha.unwrap_or(f64::INFINITY),
        });
    }
    let base = BaseObjective {
        ridge: doc.base.ridge,
        quad_terms: doc
            .base
            .quad_terms
            .into_iter()
            .map(|q| QuadTerm {
                c: q.c,
                expr: AffineExpr::new(q.a, q.b),
            })
            .collect(),
        lower: doc
            .base
            .bounds
            .l
            .into_iter()
            .map(|v| v.unwrap_or(f64::NEG_INFINITY))
            .collect(),
        upper: doc
            .base
            .bounds
            .u
            .into_iter()
            .map(|v| v.unwrap_or(f64::INFINITY))
            .collect(),
    };
    Problem::new(doc.n, base, terms)
}

/// Serialize a problem to the documented JSON format.
///
/// Output is deterministic: `parse_problem(serialize_problem(p))` is
/// structurally equal to `p`, and equal problems serialize byte-identically.
pub fn serialize_problem(p: &Problem) -> String {
    let doc = ProblemDoc {
        n: p.n,
        base: BaseDoc {
            ridge: p.base.ridge,
            quad_terms: p
                .base
                .quad_terms
                .iter()
                .map(|q| QuadDoc {
                    c: q.c,
                    a: q.expr.a.clone(),
                    b: q.expr.b,
                })
                .collect(),
            bounds: BoxDoc {
                l: p.base
                    .lower
                    .iter()
                    .map(|&v| if v == f64::NEG_INFINITY { None } else { Some(v) })
                    .collect(),
                u: p.base
                    .upper
                    .iter()
                    .map(|&v| if v == f64::INFINITY { None } else { Some(v) })
                    .collect(),
            },
        },
        terms: p
            .terms
            .iter()
            .map(|t| TermDoc {
                loss: match t.loss {
                    LossAtom::Square => LossDoc {
                        kind: "square".into(),
                        delta: None,
                        label: None,
                    },
                    LossAtom::Huber { delta } => LossDoc {
                        kind: "huber".into(),
                        delta: Some(delta),
                        label: None,
                    },
                    LossAtom::Logistic { label } => LossDoc {
                        kind: "logistic".into(),
                        delta: None,
                        label: Some(label),
                    },
                },
                a: t.expr.a.clone(),
                b: t.expr.b,
                weight: t.weight,
                alpha: if t.alpha == f64::INFINITY {
                    None
                } else {
                    Some(t.alpha)
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("problem serialization cannot fail")
}
