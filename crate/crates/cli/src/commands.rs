use std::collections::BTreeMap;
use std::path::Path;

use qmetric::charts::{wick_chart, ChartMap, MetricTensor};
use qmetric::curvature::{default_scheme, flatness_scan, riemann, MetricField};
use qmetric::dsl::{canonical_print, parse_expression, parse_family_file, DefinitionKind, FamilyDefinition};
use qmetric::metric::{qgt, signature, Convention, HermitianTensor, DEFAULT_ZERO_TOL};
use qmetric::{builtin_family, DifferentiationScheme, Interval, SchemeKind, StateFamily};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::{CurvatureArgs, FamilySource, Format, GridArgs, MetricArgs, OutputArgs, ParseArgs, SchemeArgs};
use crate::error::{exit, CliError};
use crate::output::{emit, to_csv, to_json};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses a real constant; accepts numbers and constant expressions such as `2*pi`.
pub fn parse_real(src: &str) -> Result<f64, CliError> {
    let expr = parse_expression(src).map_err(|e| CliError::config(format!("`{src}`: {e}")))?;
    let v = expr
        .eval_with(&|_| None)
        .map_err(|e| CliError::config(format!("`{src}`: {e}")))?;
    if v.im != 0.0 || !v.re.is_finite() {
        return Err(CliError::config(format!("`{src}` is not a finite real number")));
    }
    Ok(v.re)
}

fn split_assignment<'a>(src: &'a str, what: &str) -> Result<(&'a str, &'a str), CliError> {
    src.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| CliError::config(format!("{what} `{src}` must look like name=value")))
}

pub fn parse_constants(items: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for item in items {
        let (k, v) = split_assignment(item, "--const")?;
        if out.insert(k.to_string(), parse_real(v)?).is_some() {
            return Err(CliError::config(format!("constant `{k}` given twice")));
        }
    }
    Ok(out)
}

pub fn parse_point(src: &str) -> Result<Vec<f64>, CliError> {
    src.split(',').map(|s| parse_real(s.trim())).collect()
}

/// `None` step means the family default (relative) or `fallback`.
pub fn build_scheme(args: &SchemeArgs, fallback: Option<f64>) -> Result<DifferentiationScheme, CliError> {
    let kind = match args.order {
        2 => SchemeKind::Central2,
        4 => SchemeKind::Central4,
        o => return Err(CliError::config(format!("--order must be 2 or 4, got {o}"))),
    };
    Ok(DifferentiationScheme::new(kind, args.h.or(fallback))?)
}

pub fn scheme_json(s: &DifferentiationScheme) -> Value {
    let mut v = json!({
        "kind": s.kind,
        "order": s.order(),
    });
    match s.step {
        Some(h) => v["step"] = json!(h),
        None => v["relative_step"] = json!(s.relative_step),
    }
    v
}

fn read_definition(path: &Path) -> Result<FamilyDefinition, CliError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    parse_family_file(&src).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn check_overrides(def: &FamilyDefinition, consts: &BTreeMap<String, f64>) -> Result<(), CliError> {
    match consts.keys().find(|k| !def.constants.contains_key(*k)) {
        Some(k) => Err(CliError::config(format!("`{}` declares no constant `{k}`", def.name))),
        None => Ok(()),
    }
}

pub fn has_family(src: &FamilySource) -> bool {
    src.family.is_some() || src.family_file.is_some()
}

pub fn load_family(src: &FamilySource) -> Result<StateFamily, CliError> {
    let consts = parse_constants(&src.constants)?;
    match (&src.family, &src.family_file) {
        (Some(name), None) => Ok(builtin_family(name, &consts)?),
        (None, Some(path)) => {
            let def = read_definition(path)?;
            check_overrides(&def, &consts)?;
            Ok(StateFamily::from_definition(&def, &consts)?)
        }
        (Some(_), Some(_)) => Err(CliError::config("give either --family or --family-file, not both")),
        (None, None) => Err(CliError::config("a state family is required (--family or --family-file)")),
    }
}

fn format_or(out: &OutputArgs, default: Format) -> Format {
    out.format.unwrap_or(default)
}

fn complex_matrix_json(q: &HermitianTensor) -> Value {
    let n = q.dim();
    Value::Array(
        (0..n)
            .map(|i| Value::Array((0..n).map(|j| json!([q.q[(i, j)].re, q.q[(i, j)].im])).collect()))
            .collect(),
    )
}

fn real_part_json(q: &HermitianTensor) -> Value {
    let n = q.dim();
    Value::Array(
        (0..n)
            .map(|i| Value::Array((0..n).map(|j| json!(q.q[(i, j)].re)).collect()))
            .collect(),
    )
}

fn convention_name(c: Convention) -> &'static str {
    match c {
        Convention::Projective => "projective",
        Convention::Raw => "raw",
    }
}

pub fn cmd_metric(args: &MetricArgs) -> Result<i32, CliError> {
    let family = load_family(&args.source)?;
    let scheme = build_scheme(&args.scheme, None)?;
    let convention: Convention = args.convention.into();
    let axes = family.chart().axes.clone();
    let points = args.points.iter().map(|p| parse_point(p)).collect::<Result<Vec<_>, _>>()?;
    for p in &points {
        if p.len() != axes.len() {
            return Err(CliError::config(format!(
                "--point has {} coordinates but `{}` expects {} ({})",
                p.len(),
                family.name(),
                axes.len(),
                axes.join(", ")
            )));
        }
    }
    let mut records = Vec::with_capacity(points.len());
    for p in &points {
        let q = qgt(&family, p, &scheme, convention)?;
        let g = q.metric()?;
        records.push((p.clone(), q, signature(&g, DEFAULT_ZERO_TOL)));
    }
    let text = match format_or(&args.output, Format::Json) {
        Format::Json => {
            let pts: Vec<Value> = records
                .iter()
                .map(|(p, q, sig)| {
                    json!({
                        "coords": p,
                        "qgt": complex_matrix_json(q),
                        "metric": real_part_json(q),
                        "signature": sig,
                    })
                })
                .collect();
            to_json(&json!({
                "command": "metric",
                "version": VERSION,
                "family": family.name(),
                "axes": axes,
                "constants": family.constants(),
                "convention": convention_name(convention),
                "scheme": scheme_json(&scheme),
                "zero_tol": DEFAULT_ZERO_TOL,
                "points": pts,
            }))?
        }
        Format::Csv => {
            let n = axes.len();
            let mut header = axes.clone();
            for a in &axes {
                for b in &axes {
                    header.push(format!("re_q_{a}_{b}"));
                    header.push(format!("im_q_{a}_{b}"));
                }
            }
            header.extend(["n_plus", "n_minus", "n_zero"].map(String::from));
            let rows: Vec<Vec<f64>> = records
                .iter()
                .map(|(p, q, sig)| {
                    let mut row = p.clone();
                    for i in 0..n {
                        for j in 0..n {
                            row.push(q.q[(i, j)].re);
                            row.push(q.q[(i, j)].im);
                        }
                    }
                    row.extend([sig.n_plus as f64, sig.n_minus as f64, sig.n_zero as f64]);
                    row
                })
                .collect();
            to_csv(&header, &rows)?
        }
    };
    emit(&text, args.output.out.as_deref())?;
    Ok(exit::OK)
}

/// Sampling box with infinite ends replaced by `[-1, 1]`.
fn boxed(field: MetricField) -> MetricField {
    let sampling = field
        .sampling()
        .iter()
        .map(|iv| {
            if iv.is_finite() {
                *iv
            } else {
                let lower = if iv.lower.is_finite() { iv.lower } else { -1.0 };
                let upper = if iv.upper.is_finite() { iv.upper } else { lower + 2.0 };
                Interval::closed(lower, upper)
            }
        })
        .collect();
    field.with_sampling(sampling)
}

fn parse_assemble(src: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = src.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!("--assemble expects g11,g22,c, got `{src}`")));
    }
    Ok((parse_real(parts[0])?, parse_real(parts[1])?, parse_real(parts[2])?))
}

fn curvature_field(args: &CurvatureArgs) -> Result<(MetricField, Value), CliError> {
    let sources = [
        args.assemble.is_some(),
        args.builtin.is_some(),
        args.pullback.is_some(),
        args.chart_file.is_some(),
        has_family(&args.source),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(CliError::config(
            "give exactly one of --assemble, --builtin, --pullback, --chart-file, --family, --family-file",
        ));
    }
    let consts = parse_constants(&args.source.constants)?;
    if let Some(spec) = &args.assemble {
        let (g11, g22, c) = parse_assemble(spec)?;
        let g = qmetric::metric::assemble_real_metric(g11, g22, c)?;
        let field = MetricField::constant("assembled", g);
        return Ok((field, json!({"assemble": {"g11": g11, "g22": g22, "c": c}})));
    }
    if let Some(name) = &args.builtin {
        return Ok((MetricField::builtin(name)?, json!({"builtin": name})));
    }
    if let Some(name) = &args.pullback {
        let allowed = |keys: &[&str]| match consts.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(CliError::config(format!("pullback `{name}` has no constant `{k}`"))),
            None => Ok(()),
        };
        return match name.as_str() {
            "hopf" => {
                allowed(&["r"])?;
                let r = consts.get("r").copied().unwrap_or(1.0);
                Ok((MetricField::sphere3(r)?, json!({"pullback": {"chart": "hopf", "r": r}})))
            }
            "wick" => {
                allowed(&["c"])?;
                let c = consts.get("c").copied().unwrap_or(1.0);
                let field = MetricField::pullback(MetricTensor::flat(4), wick_chart(c)?, DifferentiationScheme::default());
                Ok((boxed(field), json!({"pullback": {"chart": "wick", "c": c}})))
            }
            other => Err(CliError::config(format!("unknown pullback chart `{other}` (hopf, wick)"))),
        };
    }
    if let Some(path) = &args.chart_file {
        let def = read_definition(path)?;
        check_overrides(&def, &consts)?;
        let map = ChartMap::from_definition(&def, &consts)?;
        let target = MetricTensor::flat(map.target_dim());
        let name = map.name().to_string();
        let field = MetricField::pullback(target, map, DifferentiationScheme::default());
        return Ok((boxed(field), json!({"chart_file": name})));
    }
    let family = load_family(&args.source)?;
    let name = family.name().to_string();
    let convention: Convention = args.convention.into();
    let state_scheme = DifferentiationScheme::default();
    let meta = json!({"family": {
        "name": name,
        "convention": convention_name(convention),
        "scheme": scheme_json(&state_scheme),
    }});
    Ok((boxed(MetricField::quantum(family, state_scheme, convention)), meta))
}

pub fn cmd_curvature(args: &CurvatureArgs) -> Result<i32, CliError> {
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(CliError::config(format!("--tol must be positive, got {}", args.tol)));
    }
    if args.points == 0 {
        return Err(CliError::config("--points must be at least 1"));
    }
    let scheme = build_scheme(&args.scheme, default_scheme().step)?;
    let (field, source) = curvature_field(args)?;
    let report = flatness_scan(&field, args.points, args.tol, args.seed, &scheme)?;
    let text = match format_or(&args.output, Format::Json) {
        Format::Json => {
            let mut v = serde_json::to_value(&report).map_err(|e| CliError::Numerical(e.to_string()))?;
            v["command"] = json!("curvature");
            v["version"] = json!(VERSION);
            v["source"] = source;
            v["axes"] = json!(field.chart().axes);
            v["scheme"] = scheme_json(&scheme);
            v["scheme"]["outer_step_factor"] = json!(qmetric::curvature::OUTER_STEP_FACTOR);
            to_json(&v)?
        }
        Format::Csv => {
            let mut header = vec!["index".to_string()];
            header.extend(field.chart().axes.iter().cloned());
            header.extend(["max_abs_riemann", "scalar_curvature"].map(String::from));
            let rows: Vec<Vec<f64>> = report
                .points
                .iter()
                .map(|r| {
                    let mut row = vec![r.index as f64];
                    row.extend(&r.coords);
                    row.extend([r.max_abs_riemann, r.scalar_curvature]);
                    row
                })
                .collect();
            to_csv(&header, &rows)?
        }
    };
    emit(&text, args.output.out.as_deref())?;
    Ok(exit::OK)
}

#[derive(Debug, Clone, PartialEq)]
enum Observable {
    ReQ(usize, usize),
    ImQ(usize, usize),
    NPlus,
    NMinus,
    NZero,
    ScalarCurvature,
}

fn parse_observable(name: &str, axes: &[String]) -> Result<Observable, CliError> {
    let pair = |rest: &str| -> Option<(usize, usize)> {
        axes.iter().enumerate().find_map(|(i, a)| {
            let tail = rest.strip_prefix(a.as_str())?.strip_prefix('_')?;
            axes.iter().position(|b| b == tail).map(|j| (i, j))
        })
    };
    let parsed = match name {
        "n_plus" => Some(Observable::NPlus),
        "n_minus" => Some(Observable::NMinus),
        "n_zero" => Some(Observable::NZero),
        "scalar_curvature" => Some(Observable::ScalarCurvature),
        _ => {
            if let Some(rest) = name.strip_prefix("re_q_") {
                pair(rest).map(|(i, j)| Observable::ReQ(i, j))
            } else if let Some(rest) = name.strip_prefix("im_q_") {
                pair(rest).map(|(i, j)| Observable::ImQ(i, j))
            } else {
                None
            }
        }
    };
    parsed.ok_or_else(|| {
        CliError::config(format!(
            "unknown observable `{name}`; expected re_q_<a>_<b>, im_q_<a>_<b>, n_plus, n_minus, n_zero or \
             scalar_curvature with axes {}",
            axes.join(", ")
        ))
    })
}

struct GridAxis {
    index: usize,
    values: Vec<f64>,
}

fn parse_grid_axis(spec: &str, axes: &[String]) -> Result<GridAxis, CliError> {
    let (name, range) = split_assignment(spec, "--axis")?;
    let index = axes
        .iter()
        .position(|a| a == name)
        .ok_or_else(|| CliError::config(format!("unknown axis `{name}`; axes are {}", axes.join(", "))))?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::config(format!("--axis `{spec}` must look like name=min:max:count")));
    }
    let (lo, hi) = (parse_real(parts[0])?, parse_real(parts[1])?);
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("grid count `{}` is not a non-negative integer", parts[2])))?;
    if count == 0 {
        return Err(CliError::config("grid counts must be at least 1"));
    }
    let values = if count == 1 {
        vec![lo]
    } else {
        (0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect()
    };
    Ok(GridAxis { index, values })
}

pub fn cmd_grid(args: &GridArgs) -> Result<i32, CliError> {
    let family = load_family(&args.source)?;
    let scheme = build_scheme(&args.scheme, None)?;
    let convention: Convention = args.convention.into();
    let axes = family.chart().axes.clone();
    if args.axes.len() > 2 {
        return Err(CliError::config(format!(
            "grids take at most 2 free axes, got {}; pin the rest with --at",
            args.axes.len()
        )));
    }
    let free = args
        .axes
        .iter()
        .map(|s| parse_grid_axis(s, &axes))
        .collect::<Result<Vec<_>, _>>()?;
    if free.len() == 2 && free[0].index == free[1].index {
        return Err(CliError::config("the two grid axes must differ"));
    }
    let mut base = vec![f64::NAN; axes.len()];
    for item in &args.at {
        let (name, value) = split_assignment(item, "--at")?;
        let i = axes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| CliError::config(format!("unknown axis `{name}` in --at")))?;
        if free.iter().any(|g| g.index == i) {
            return Err(CliError::config(format!("axis `{name}` is both free and pinned")));
        }
        base[i] = parse_real(value)?;
    }
    for (i, v) in base.iter_mut().enumerate() {
        if v.is_nan() && free.iter().all(|g| g.index != i) {
            let bounds = family.chart().bounds[i];
            if !bounds.is_finite() {
                return Err(CliError::config(format!("axis `{}` is unbounded; pin it with --at", axes[i])));
            }
            *v = bounds.midpoint();
        }
    }
    let observables = if args.observables.is_empty() {
        (0..axes.len()).map(|i| Observable::ReQ(i, i)).collect()
    } else {
        args.observables
            .iter()
            .map(|o| parse_observable(o, &axes))
            .collect::<Result<Vec<_>, _>>()?
    };
    let observable_names: Vec<String> = observables
        .iter()
        .map(|o| match o {
            Observable::ReQ(i, j) => format!("re_q_{}_{}", axes[*i], axes[*j]),
            Observable::ImQ(i, j) => format!("im_q_{}_{}", axes[*i], axes[*j]),
            Observable::NPlus => "n_plus".into(),
            Observable::NMinus => "n_minus".into(),
            Observable::NZero => "n_zero".into(),
            Observable::ScalarCurvature => "scalar_curvature".into(),
        })
        .collect();

    let mut points = Vec::new();
    let outer = &free[0].values;
    let inner: Vec<f64> = free.get(1).map(|g| g.values.clone()).unwrap_or_else(|| vec![f64::NAN]);
    for &a in outer {
        for &b in &inner {
            let mut p = base.clone();
            p[free[0].index] = a;
            if let Some(g) = free.get(1) {
                p[g.index] = b;
            }
            points.push(p);
        }
    }
    let needs_curvature = observables.contains(&Observable::ScalarCurvature);
    let curvature_scheme = default_scheme();
    let field = needs_curvature.then(|| MetricField::quantum(family.clone(), scheme.clone(), convention));
    let rows = points
        .par_iter()
        .map(|p| -> Result<Vec<f64>, CliError> {
            let q = qgt(&family, p, &scheme, convention)?;
            let sig = signature(&q.metric()?, DEFAULT_ZERO_TOL);
            let scalar = match &field {
                Some(f) => riemann(f, p, &curvature_scheme)?.scalar,
                None => f64::NAN,
            };
            let mut row: Vec<f64> = free.iter().map(|g| p[g.index]).collect();
            for o in &observables {
                row.push(match *o {
                    Observable::ReQ(i, j) => q.q[(i, j)].re,
                    Observable::ImQ(i, j) => q.q[(i, j)].im,
                    Observable::NPlus => sig.n_plus as f64,
                    Observable::NMinus => sig.n_minus as f64,
                    Observable::NZero => sig.n_zero as f64,
                    Observable::ScalarCurvature => scalar,
                });
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut header: Vec<String> = free.iter().map(|g| axes[g.index].clone()).collect();
    header.extend(observable_names);
    let text = match format_or(&args.output, Format::Csv) {
        Format::Csv => to_csv(&header, &rows)?,
        Format::Json => {
            let fixed: BTreeMap<&str, f64> = base
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_nan())
                .map(|(i, v)| (axes[i].as_str(), *v))
                .collect();
            let mut v = json!({
                "command": "grid",
                "version": VERSION,
                "family": family.name(),
                "constants": family.constants(),
                "convention": convention_name(convention),
                "scheme": scheme_json(&scheme),
                "zero_tol": DEFAULT_ZERO_TOL,
                "fixed": fixed,
                "columns": header,
                "rows": rows,
            });
            if needs_curvature {
                v["curvature_scheme"] = scheme_json(&curvature_scheme);
            }
            to_json(&v)?
        }
    };
    emit(&text, args.output.out.as_deref())?;
    Ok(exit::OK)
}

pub fn cmd_parse(args: &ParseArgs) -> Result<i32, CliError> {
    let def = read_definition(&args.file)?;
    let params: Vec<Value> = def
        .parameters
        .iter()
        .map(|p| {
            json!({
                "name": p.name,
                "lower": p.bounds.lower,
                "upper": p.bounds.upper,
                "upper_closed": p.bounds.upper_closed,
            })
        })
        .collect();
    let mut v = json!({
        "command": "parse",
        "version": VERSION,
        "kind": match def.kind { DefinitionKind::Family => "family", DefinitionKind::Chart => "chart" },
        "name": def.name,
        "parameters": params,
        "constants": def.constants,
        "components": def.components.iter().map(canonical_print).collect::<Vec<_>>(),
    });
    if let Some(t) = &def.twist {
        v["twist"] = json!(t);
    }
    let text = match format_or(&args.output, Format::Json) {
        Format::Json => to_json(&v)?,
        Format::Csv => return Err(CliError::config("parse reports are JSON only")),
    };
    emit(&text, args.output.out.as_deref())?;
    Ok(exit::OK)
}

