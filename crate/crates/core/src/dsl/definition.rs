//! Line-oriented definition files for state families and chart maps.
//!
//! ```text
//! # comment
//! family hopf_s3
//! param theta in [0, pi]
//! param phi in [0, 2*pi)
//! const r = 1
//! state: [ r*cos(theta/2), r*sin(theta/2)*exp(i*phi) ]
//! ```
//!
//! A chart file uses a `chart <ident>` header, an optional `twist [s1, ..]`
//! line of ±1 signs and a `map: [..]` terminator instead of `state:`.
//! Bound and constant values may be constant expressions such as `2*pi`;
//! they must evaluate to finite reals.

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use super::expr::{parse_expression, parse_expression_list, EvalError, Expr, Func, ParseError};
use crate::coords::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefinitionKind {
    Family,
    Chart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDecl {
    pub name: String,
    pub bounds: Interval,
}

/// A validated family (or chart) definition.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDefinition {
    pub kind: DefinitionKind,
    pub name: String,
    pub parameters: Vec<ParameterDecl>,
    pub constants: BTreeMap<String, f64>,
    pub components: Vec<Expr>,
    pub twist: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DefinitionError {
    #[error("line {line}: {source}")]
    Syntax {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: {message}")]
    Directive { line: usize, message: String },
    #[error("duplicate parameter `{0}`")]
    DuplicateParameter(String),
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error("component {component} references undeclared symbol `{symbol}`")]
    UndeclaredSymbol { symbol: String, component: usize },
    #[error("component list is empty")]
    EmptyComponents,
    #[error("at least one parameter is required")]
    NoParameters,
    #[error("parameter `{name}`: lower bound {lower} must be below upper bound {upper}")]
    BoundViolation { name: String, lower: f64, upper: f64 },
    #[error("line {line}: value is not a finite real constant: {message}")]
    BadValue { line: usize, message: String },
    #[error("missing `{0}` terminator")]
    MissingTerminator(&'static str),
    #[error("twist has {got} entries but the map has {expected} components")]
    TwistArity { expected: usize, got: usize },
}

fn is_reserved(name: &str) -> bool {
    name == "i" || name == "pi" || Func::from_name(name).is_some()
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn const_value(src: &str, line: usize) -> Result<f64, DefinitionError> {
    let expr = parse_expression(src).map_err(|source| DefinitionError::Syntax { line, source })?;
    let v = expr
        .eval_with(&|_| None)
        .map_err(|e: EvalError| DefinitionError::BadValue {
            line,
            message: e.to_string(),
        })?;
    if v.im != 0.0 {
        return Err(DefinitionError::BadValue {
            line,
            message: format!("`{}` has an imaginary part", src.trim()),
        });
    }
    Ok(v.re)
}

fn directive(line: usize, message: impl Into<String>) -> DefinitionError {
    DefinitionError::Directive {
        line,
        message: message.into(),
    }
}

fn parse_param(rest: &str, line: usize) -> Result<ParameterDecl, DefinitionError> {
    let (name, range) = rest
        .split_once(" in ")
        .ok_or_else(|| directive(line, "expected `param <ident> in [<lo>, <hi>)` or `]`"))?;
    let name = name.trim();
    if !is_ident(name) {
        return Err(directive(line, format!("`{name}` is not an identifier")));
    }
    if is_reserved(name) {
        return Err(DefinitionError::Reserved(name.to_string()));
    }
    let range = range.trim();
    let upper_closed = match range.chars().last() {
        Some(']') => true,
        Some(')') => false,
        _ => return Err(directive(line, "bounds must end with `]` or `)`")),
    };
    let inner = range
        .strip_prefix('[')
        .ok_or_else(|| directive(line, "bounds must start with `[`"))?;
    let inner = &inner[..inner.len() - 1];
    let (lo, hi) = inner
        .split_once(',')
        .ok_or_else(|| directive(line, "bounds need two comma-separated values"))?;
    let lower = const_value(lo, line)?;
    let upper = const_value(hi, line)?;
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(DefinitionError::BoundViolation {
            name: name.to_string(),
            lower,
            upper,
        });
    }
    Ok(ParameterDecl {
        name: name.to_string(),
        bounds: Interval {
            lower,
            upper,
            upper_closed,
        },
    })
}

/// Parses and validates a family or chart definition file.
pub fn parse_family_file(src: &str) -> Result<FamilyDefinition, DefinitionError> {
    let mut kind = None;
    let mut name = None;
    let mut parameters: Vec<ParameterDecl> = Vec::new();
    let mut constants = BTreeMap::new();
    let mut twist = None;
    let mut components = None;

    let lines: Vec<&str> = src.lines().collect();
    let mut idx = 0;
    while idx < lines.len() {
        let line_no = idx + 1;
        let raw = lines[idx];
        idx += 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if components.is_some() {
            return Err(directive(line_no, "content after the component list"));
        }
        let (head, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
        let rest = rest.trim();
        match head {
            "family" | "chart" => {
                if kind.is_some() {
                    return Err(directive(line_no, "header declared twice"));
                }
                if !is_ident(rest) {
                    return Err(directive(line_no, format!("`{rest}` is not an identifier")));
                }
                kind = Some(if head == "family" {
                    DefinitionKind::Family
                } else {
                    DefinitionKind::Chart
                });
                name = Some(rest.to_string());
            }
            "param" => {
                let p = parse_param(rest, line_no)?;
                if parameters.iter().any(|q| q.name == p.name) {
                    return Err(DefinitionError::DuplicateParameter(p.name));
                }
                if constants.contains_key(&p.name) {
                    return Err(DefinitionError::DuplicateSymbol(p.name));
                }
                parameters.push(p);
            }
            "const" => {
                let (cname, value) = rest
                    .split_once('=')
                    .ok_or_else(|| directive(line_no, "expected `const <ident> = <num>`"))?;
                let cname = cname.trim();
                if !is_ident(cname) {
                    return Err(directive(line_no, format!("`{cname}` is not an identifier")));
                }
                if is_reserved(cname) {
                    return Err(DefinitionError::Reserved(cname.to_string()));
                }
                if constants.contains_key(cname) || parameters.iter().any(|q| q.name == cname) {
                    return Err(DefinitionError::DuplicateSymbol(cname.to_string()));
                }
                let v = const_value(value, line_no)?;
                constants.insert(cname.to_string(), v);
            }
            "twist" => {
                let list = parse_expression_list(rest, 0)
                    .map_err(|source| DefinitionError::Syntax { line: line_no, source })?;
                let mut signs = Vec::with_capacity(list.len());
                for e in list {
                    let v = e.eval_with(&|_| None).map_err(|e| DefinitionError::BadValue {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                    if v.im != 0.0 || (v.re != 1.0 && v.re != -1.0) {
                        return Err(directive(line_no, "twist entries must be 1 or -1"));
                    }
                    signs.push(v.re);
                }
                twist = Some(signs);
            }
            _ if text.starts_with("state:") || text.starts_with("map:") => {
                let (label, body_start) = if text.starts_with("state:") {
                    ("state", "state:".len())
                } else {
                    ("map", "map:".len())
                };
                let mut body = text[body_start..].to_string();
                // The list may continue over several lines until the brackets balance.
                while bracket_depth(&body) > 0 && idx < lines.len() {
                    body.push(' ');
                    body.push_str(lines[idx].split('#').next().unwrap_or(""));
                    idx += 1;
                }
                let list = parse_expression_list(&body, 0)
                    .map_err(|source| DefinitionError::Syntax { line: line_no, source })?;
                match (label, kind) {
                    ("state", Some(DefinitionKind::Chart)) => {
                        return Err(directive(line_no, "chart files end with `map:`"))
                    }
                    ("map", Some(DefinitionKind::Family) | None) => {
                        return Err(directive(line_no, "`map:` requires a `chart` header"))
                    }
                    _ => {}
                }
                components = Some(list);
            }
            other => return Err(directive(line_no, format!("unknown directive `{other}`"))),
        }
    }

    let kind = kind.unwrap_or(DefinitionKind::Family);
    let components = components.ok_or(DefinitionError::MissingTerminator(match kind {
        DefinitionKind::Family => "state:",
        DefinitionKind::Chart => "map:",
    }))?;
    if parameters.is_empty() {
        return Err(DefinitionError::NoParameters);
    }
    if components.is_empty() {
        return Err(DefinitionError::EmptyComponents);
    }
    let declared: HashSet<&str> = parameters
        .iter()
        .map(|p| p.name.as_str())
        .chain(constants.keys().map(String::as_str))
        .collect();
    for (component, e) in components.iter().enumerate() {
        if let Some(symbol) = e.free_symbols().into_iter().find(|s| !declared.contains(s.as_str())) {
            return Err(DefinitionError::UndeclaredSymbol { symbol, component });
        }
    }
    if let Some(t) = &twist {
        if t.len() != components.len() {
            return Err(DefinitionError::TwistArity {
                expected: components.len(),
                got: t.len(),
            });
        }
    }
    Ok(FamilyDefinition {
        kind,
        name: name.unwrap_or_else(|| "family".to_string()),
        parameters,
        constants,
        components,
        twist,
    })
}

fn bracket_depth(s: &str) -> i64 {
    s.chars().fold(0, |d, c| match c {
        '[' => d + 1,
        ']' => d - 1,
        _ => d,
    })
}
