//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use qmetric::charts::{minkowski_line_element, wick_pair_line_element, Displacement};
use qmetric::curvature::{default_scheme, flatness_scan, riemann, sample_points, MetricField};
use qmetric::dsl::{canonical_print, parse_expression, parse_family_file, BinOp, DefinitionError, Expr, Func, ParseError};
use qmetric::metric::{
    assemble_real_metric, eta_coefficients, qgt, signature, signature_of, Convention, SignatureTriple,
    DEFAULT_ZERO_TOL,
};
use qmetric::{builtin_family, inner_product, DifferentiationScheme, StateFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for c in [1.0, 2.5] {
        for _ in 0..1000 {
            let d = Displacement((0..4).map(|_| rng.random_range(-1.0..1.0)).collect());
            let diff = minkowski_line_element(&d, c).unwrap() - wick_pair_line_element(&d, c).unwrap();
            worst = worst.max(diff.abs());
        }
    }
    ensure(worst < 1e-13, || format!("max residual {worst:e}"))?;
    Ok(format!("max residual {worst:.2e} over 2000 displacements"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut cases = vec![(1.0, 1.0, 1.0)];
    for _ in 0..100 {
        cases.push((
            rng.random_range(0.01..10.0),
            rng.random_range(0.01..10.0),
            rng.random_range(0.1..10.0),
        ));
    }
    let mut worst: f64 = 0.0;
    for (g11, g22, c) in cases {
        let r = eta_coefficients(&assemble_real_metric(g11, g22, c).unwrap(), c, 1e-12).unwrap();
        ensure(r.pass, || format!("eta check failed for ({g11}, {g22}, {c})"))?;
        worst = worst.max(r.residual_xy).max(r.residual_zt);
    }
    ensure(worst < 1e-12, || format!("max residual {worst:e}"))?;
    Ok(format!("max residual {worst:.2e} over 101 cases"))
}

fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q()
}

fn criterion_3() -> Outcome {
    let g = assemble_real_metric(1.0, 1.0, 1.0).unwrap();
    let base = signature(&g, DEFAULT_ZERO_TOL);
    ensure(base == SignatureTriple::new(3, 1, 0), || format!("signature {base:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..1000 {
        let sigma: Vec<f64> = (0..4).map(|_| 10f64.powf(rng.random_range(0.0..3.0))).collect();
        let a = random_orthogonal(&mut rng, 4)
            * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sigma))
            * random_orthogonal(&mut rng, 4);
        let m = a.transpose() * g.components() * &a;
        let sym = (&m + m.transpose()) * 0.5;
        let sig = signature_of(&sym, DEFAULT_ZERO_TOL).unwrap();
        ensure(sig == base, || format!("congruence {k} gave {sig:?}"))?;
    }
    Ok("(3,1,0), invariant under 1000 congruences".into())
}

fn criterion_4() -> Outcome {
    let scheme = default_scheme();
    let flat = MetricField::constant("assembled", assemble_real_metric(1.0, 1.0, 1.0).unwrap());
    let report = flatness_scan(&flat, 50, 1e-6, 7, &scheme).unwrap();
    ensure(report.flat && report.global_max < 1e-6, || format!("global max {:e}", report.global_max))?;
    let sphere = flatness_scan(&MetricField::sphere2(), 50, 1e-6, 7, &scheme).unwrap();
    ensure(!sphere.flat, || "2-sphere reported flat".into())?;
    let worst = sphere
        .points
        .iter()
        .map(|r| (r.scalar_curvature - 2.0).abs())
        .fold(0.0, f64::max);
    ensure(worst < 1e-3, || format!("2-sphere scalar curvature off by {worst:e}"))?;
    Ok(format!(
        "flat max |R| {:.1e}; 2-sphere max |R| {:.3}, |S − 2| ≤ {worst:.1e}",
        report.global_max, sphere.global_max
    ))
}

/// Fubini-Study metric from the infidelity of nearby states.
fn overlap_metric(fam: &StateFamily, p: &[f64]) -> DMatrix<f64> {
    let eps = 1e-4;
    let infid = |q: &[f64]| {
        let (a, b) = (fam.evaluate(p).unwrap(), fam.evaluate(q).unwrap());
        1.0 - inner_product(&a, &b).unwrap().norm_sqr() / (a.norm_sqr() * b.norm_sqr())
    };
    let d = |u: [f64; 2]| {
        let plus = [p[0] + eps * u[0], p[1] + eps * u[1]];
        let minus = [p[0] - eps * u[0], p[1] - eps * u[1]];
        0.5 * (infid(&plus) + infid(&minus))
    };
    let g00 = d([1.0, 0.0]) / (eps * eps);
    let g11 = d([0.0, 1.0]) / (eps * eps);
    let g01 = (d([1.0, 1.0]) - d([1.0, -1.0])) / (4.0 * eps * eps);
    DMatrix::from_row_slice(2, 2, &[g00, g01, g01, g11])
}

fn criterion_5() -> Outcome {
    let fam = builtin_family("bloch_cp1", &BTreeMap::new()).unwrap();
    let scheme = DifferentiationScheme::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let p = [rng.random_range(0.05..PI - 0.05), rng.random_range(0.05..2.0 * PI - 0.05)];
        let re = qgt(&fam, &p, &scheme, Convention::Projective).unwrap().real_part();
        let oracle = overlap_metric(&fam, &p);
        let closed = DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.25 * p[0].sin().powi(2)]);
        worst = worst.max((&re - &oracle).amax()).max((&re - &closed).amax());
    }
    ensure(worst < 1e-6, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.2e} at 100 points"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fixed = DifferentiationScheme::central4(1e-3);
    let (mut gauge, mut scale): (f64, f64) = (0.0, 0.0);
    for name in ["bloch_cp1", "hopf_s3", "hopf_s3_nohalf"] {
        let fam = builtin_family(name, &BTreeMap::new()).unwrap();
        let dim = fam.param_dim();
        for _ in 0..10 {
            let lin: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let quad: Vec<f64> = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let gauged = fam.with_phase(move |p| {
                let mut a = 0.0;
                for i in 0..p.len() {
                    a += lin[i] * p[i];
                    for j in 0..p.len() {
                        a += quad[i * p.len() + j] * p[i] * p[j];
                    }
                }
                a
            });
            let lambda = Complex64::from_polar(rng.random_range(0.1..10.0), rng.random_range(0.0..2.0 * PI));
            let scaled = fam.scaled(lambda);
            let p: Vec<f64> = fam
                .chart()
                .bounds
                .iter()
                .map(|b| rng.random_range(b.lower + 0.05..b.upper - 0.05))
                .collect();
            let q0 = qgt(&fam, &p, &fixed, Convention::Projective).unwrap();
            let q1 = qgt(&gauged, &p, &fixed, Convention::Projective).unwrap();
            gauge = gauge.max((q0.q - q1.q).map(|z| z.norm()).amax());
            for conv in [Convention::Projective, Convention::Raw] {
                let a = qgt(&fam, &p, &fixed, conv).unwrap();
                let b = qgt(&scaled, &p, &fixed, conv).unwrap();
                scale = scale.max((a.q - b.q).map(|z| z.norm()).amax());
            }
        }
    }
    ensure(gauge < 1e-6, || format!("gauge change {gauge:e}"))?;
    ensure(scale < 1e-10, || format!("scale change {scale:e}"))?;
    Ok(format!("gauge {gauge:.1e}, scale {scale:.1e}"))
}

fn criterion_7() -> Outcome {
    let fam = builtin_family("hopf_s3", &BTreeMap::new()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut norm: f64 = 0.0;
    for _ in 0..1000 {
        let p = [
            rng.random_range(0.0..=PI),
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..4.0 * PI),
        ];
        norm = norm.max((fam.evaluate(&p).unwrap().norm_sqr() - 1.0).abs());
    }
    ensure(norm < 1e-14, || format!("norm residual {norm:e}"))?;
    let field = MetricField::sphere3(1.0).unwrap();
    let scheme = default_scheme();
    let mut worst: f64 = 0.0;
    for p in sample_points(&field, 10, 7, &scheme).unwrap() {
        let s = riemann(&field, &p, &scheme).unwrap().scalar;
        worst = worst.max((s - 6.0).abs());
    }
    ensure(worst < 1e-2, || format!("S³ scalar curvature off by {worst:e}"))?;
    Ok(format!("norm residual {norm:.1e}; |S − 6| ≤ {worst:.1e}"))
}

const SYMBOLS: [&str; 5] = ["x", "y", "theta", "phi", "c"];
const OPS: [BinOp; 5] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow];

fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    let leaf = depth == 0 || rng.random_bool(0.3);
    if leaf {
        return match rng.random_range(0..5) {
            0 => Expr::Num(rng.random_range(0.0..1e6)),
            1 => Expr::Num(rng.random_range(0..100) as f64),
            2 => Expr::Imag,
            3 => Expr::Pi,
            _ => Expr::Sym(SYMBOLS[rng.random_range(0..SYMBOLS.len())].to_string()),
        };
    }
    match rng.random_range(0..3) {
        0 => Expr::Neg(Box::new(random_expr(rng, depth - 1))),
        1 => Expr::Binary(
            OPS[rng.random_range(0..OPS.len())],
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        _ => Expr::Call(
            Func::ALL[rng.random_range(0..Func::ALL.len())],
            Box::new(random_expr(rng, depth - 1)),
        ),
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..10_000 {
        let ast = random_expr(&mut rng, 6);
        let text = canonical_print(&ast);
        let back = parse_expression(&text).map_err(|e| format!("AST {k}: `{text}` failed to parse: {e}"))?;
        ensure(back == ast, || format!("AST {k}: `{text}` is not a fixpoint"))?;
    }
    ensure(parse_expression("sin(").map(|_| ()).unwrap_err().offset() == 4, || "`sin(` offset".into())?;
    ensure(
        matches!(parse_expression("foo(x)"), Err(ParseError::UnknownFunction { .. })),
        || "unknown function".into(),
    )?;
    ensure(
        matches!(parse_expression("(x+1"), Err(ParseError::Unbalanced { .. })),
        || "unbalanced parentheses".into(),
    )?;
    let cases: [(&str, fn(&DefinitionError) -> bool); 5] = [
        ("family f\nparam x in [0, 1]\nstate: [x*alpha]\n", |e| {
            matches!(e, DefinitionError::UndeclaredSymbol { symbol, .. } if symbol == "alpha")
        }),
        ("family f\nparam x in [0, 1]\nparam x in [0, 2]\nstate: [x]\n", |e| {
            matches!(e, DefinitionError::DuplicateParameter(n) if n == "x")
        }),
        ("family f\nparam x in [0, 1]\nstate: []\n", |e| matches!(e, DefinitionError::EmptyComponents)),
        ("family f\nparam x in [1, 1]\nstate: [x]\n", |e| matches!(e, DefinitionError::BoundViolation { .. })),
        ("family f\nparam x in [0, 1]\nstate: [sin(x]\n", |e| matches!(e, DefinitionError::Syntax { line: 3, .. })),
    ];
    for (src, expected) in cases {
        let err = parse_family_file(src).err().ok_or_else(|| format!("accepted invalid file:\n{src}"))?;
        ensure(expected(&err), || format!("wrong diagnostic `{err}` for:\n{src}"))?;
    }
    let minimal = parse_family_file("param a in [0, 1]\nstate: [exp(i*a)]\n").map_err(|e| e.to_string())?;
    ensure(minimal.components.len() == 1, || "minimal family".into())?;
    Ok("10000 ASTs round-trip; 5 negative family files diagnosed".into())
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qmetric");
    let dir = std::env::temp_dir().join(format!("qmetric-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("verify-{run}.json"));
        let status = Command::new(bin)
            .args(["verify-paper", "--seed", "0", "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.code() == Some(0), || {
            format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
        })?;
        reports.push(std::fs::read(&out).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(reports[0] == reports[1], || "reports differ between runs".into())?;
    let v: serde_json::Value = serde_json::from_slice(&reports[0]).map_err(|e| e.to_string())?;
    ensure(v["pass"] == serde_json::Value::Bool(true), || "overall verdict is not pass".into())?;
    ensure(v["passed"] == 6 && v["total"] == 6, || format!("{}/{} checks", v["passed"], v["total"]))?;
    Ok("6/6 checks, exit 0, byte-identical reports".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("Minkowski line element identity", criterion_1, Duration::from_secs(1)),
        ("eta equalities", criterion_2, Duration::from_secs(1)),
        ("signature and Sylvester invariance", criterion_3, Duration::from_secs(5)),
        ("flatness of the assembled metric", criterion_4, Duration::from_secs(10)),
        ("Anandan metric on CP1", criterion_5, Duration::from_secs(5)),
        ("gauge and scale invariance", criterion_6, Duration::from_secs(5)),
        ("S3 chart norm and curvature", criterion_7, Duration::from_secs(10)),
        ("parser integrity", criterion_8, Duration::from_secs(5)),
        ("verify-paper determinism", criterion_9, Duration::from_secs(30)),
    ];
    let mut failures = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            ensure(elapsed <= *budget, || format!("took {elapsed:.2?}, budget {budget:?}")).map(|_| detail)
        });
        match result {
            Ok(detail) => println!("PASS  {}  {name}: {detail} [{elapsed:.2?}]", k + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL  {}  {name}: {why} [{elapsed:.2?}]", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
