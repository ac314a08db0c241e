use log::info;
use psdrank_core::bounds::{bracket, bracket_full};
use psdrank_core::liftkit::{augment_facet, hex_octahedron_lift, is_biplanar, normalize_hexagon};
use psdrank_core::lmifeas::{verify_ray, SolveOptions};
use psdrank_core::minrank::{
    build_bilinear_system, build_conic_system, conic_violation, decide_rank2, min_psd_rank_decide,
    verify_bilinear, Answer, Certificate, BILINEAR_TOL, CONIC_TOL,
};
use psdrank_core::polyform::{make_m_epsilon, pair_from_matrix, polytope_slack, slack_matrix};
use psdrank_core::psdfact::{rank3_upper_factorize, search_factorization, verify_factorization};
use psdrank_core::symcore::triangular_root;
use psdrank_core::{
    Error, HPolyhedron, NonnegMatrix, PsdFactorization, SearchConfig, SpectraLift, SymMatrix,
    VPolytope, Verdict,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::io::{
    from_value, matrix_csv, matrix_from_value, parse_csv, parse_json, read_input, read_matrix,
    write_output,
};
use crate::{Cli, Format, Opts, Verb};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NO: u8 = 1;
pub const EXIT_UNDETERMINED: u8 = 2;
pub const EXIT_INPUT: u8 = 3;

/// Default verification tolerance for searched factorizations.
const DEFAULT_TOL: f64 = 1e-6;

enum Output {
    Json(Value),
    Text(String),
}

type Outcome = Result<(Output, u8), String>;

pub fn run(cli: &Cli) -> u8 {
    let opts = &cli.opts;
    let outcome = match &cli.verb {
        Verb::Slack => slack(opts),
        Verb::Pair => pair(opts),
        Verb::Mexample => mexample(opts),
        Verb::Hexlift => hexlift(opts),
        Verb::Augment => augment(opts),
        Verb::Factorize => factorize(opts),
        Verb::Rank3fact => rank3fact(opts),
        Verb::Verify => verify(opts),
        Verb::Decide2 => decide2(opts),
        Verb::Minrank => minrank(opts),
        Verb::Bounds { full } => bounds(opts, *full),
    };
    let (out, code) = match outcome {
        Ok(x) => x,
        Err(msg) => (Output::Json(json!({ "error": msg })), EXIT_INPUT),
    };
    let text = match out {
        Output::Json(v) => serde_json::to_string_pretty(&v).expect("JSON values always serialize"),
        Output::Text(t) => t,
    };
    match write_output(opts, &text) {
        Ok(()) => code,
        Err(msg) => {
            eprintln!("{}", json!({ "error": msg }));
            EXIT_INPUT
        }
    }
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize")
}

fn lib(e: Error) -> String {
    e.to_string()
}

fn search_config(opts: &Opts, default_restarts: usize) -> SearchConfig {
    SearchConfig {
        restarts: opts.restarts.unwrap_or(default_restarts),
        tol: opts.tol.unwrap_or(DEFAULT_TOL),
        rng_seed: opts.seed,
        jobs: opts.jobs,
        ..SearchConfig::default()
    }
}

fn require_k(opts: &Opts) -> Result<usize, String> {
    match opts.k {
        Some(k) if k > 0 => Ok(k),
        Some(_) => Err("--k must be positive".into()),
        None => Err("--k is required".into()),
    }
}

fn matrix_output(opts: &Opts, m: &NonnegMatrix) -> Output {
    match opts.format {
        Format::Json => Output::Json(to_json(m)),
        Format::Csv => Output::Text(matrix_csv(m)),
    }
}

fn slack(opts: &Opts) -> Outcome {
    let v = parse_json(&read_input(opts)?)?;
    let p: VPolytope = from_value(v.get("P").ok_or("missing \"P\"")?, "polytope P")?;
    let m = match v.get("Q") {
        Some(q) => {
            let q: HPolyhedron = from_value(q, "polyhedron Q")?;
            slack_matrix(&p, &q)
        }
        None => polytope_slack(&p),
    }
    .map_err(lib)?;
    Ok((matrix_output(opts, &m), EXIT_OK))
}

fn pair(opts: &Opts) -> Outcome {
    let m = read_matrix(opts)?;
    let pair = pair_from_matrix(&m).map_err(lib)?;
    Ok((Output::Json(to_json(&pair)), EXIT_OK))
}

fn mexample(opts: &Opts) -> Outcome {
    let eps = opts.epsilon.ok_or("--epsilon is required")?;
    let m = make_m_epsilon(eps).map_err(lib)?;
    Ok((matrix_output(opts, &m), EXIT_OK))
}

fn read_polygon(opts: &Opts) -> Result<VPolytope, String> {
    let text = read_input(opts)?;
    match opts.format {
        Format::Json => {
            let v = parse_json(&text)?;
            match v {
                Value::Array(_) => VPolytope::new(from_value(&v, "vertex list")?).map_err(lib),
                _ => from_value(&v, "polytope"),
            }
        }
        Format::Csv => VPolytope::new(parse_csv(&text)?).map_err(lib),
    }
}

fn hexlift(opts: &Opts) -> Outcome {
    let hex = read_polygon(opts)?;
    let hc = normalize_hexagon(&hex).map_err(lib)?;
    let (oct, proj) = hex_octahedron_lift(&hc).map_err(lib)?;
    let (biplanar, normals) = is_biplanar(&oct);
    let back = hc.t.inverse().ok_or("singular normalizing map")?;
    let projected: Vec<[f64; 2]> = oct
        .vertices
        .iter()
        .map(|o| back.apply(&proj.mul_vec(o)))
        .collect();
    // every input vertex must be hit by some projected octahedron vertex
    let projection_error = hex
        .vertices()
        .iter()
        .map(|v| {
            projected
                .iter()
                .map(|w| (w[0] - v[0]).abs().max((w[1] - v[1]).abs()))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let quadrant = hc.quadrant_conditions_hold();
    let signs = oct.sign_conditions_hold();
    let pass = quadrant && signs && biplanar && projection_error <= 1e-9;
    let out = json!({
        "canonical": hc,
        "octahedron": oct,
        "proj": proj,
        "quadrant_conditions": quadrant,
        "sign_conditions": signs,
        "biplanar": biplanar,
        "plane_normals": normals,
        "projected_vertices": projected,
        "projection_error": projection_error,
        "pass": pass,
    });
    Ok((Output::Json(out), if pass { EXIT_OK } else { EXIT_NO }))
}

fn augment(opts: &Opts) -> Outcome {
    let v = parse_json(&read_input(opts)?)?;
    let lift: SpectraLift = from_value(v.get("lift").ok_or("missing \"lift\"")?, "lift")?;
    let a0: f64 = from_value(v.get("a0").ok_or("missing \"a0\"")?, "a0")?;
    let a: Vec<f64> = from_value(v.get("a").ok_or("missing \"a\"")?, "a")?;
    let out = augment_facet(&lift, a0, &a).map_err(lib)?;
    Ok((Output::Json(to_json(&out)), EXIT_OK))
}

fn factorization_output(
    m: &NonnegMatrix,
    f: Option<&PsdFactorization>,
    diagnostics: Vec<String>,
) -> Value {
    json!({
        "matrix": m,
        "answer": if f.is_some() { "Found" } else { "NotFound" },
        "factorization": f,
        "diagnostics": diagnostics,
    })
}

fn factorize(opts: &Opts) -> Outcome {
    let m = read_matrix(opts)?;
    let k = require_k(opts)?;
    let cfg = search_config(opts, SearchConfig::default().restarts);
    info!("factorize: k = {k}, {} restarts", cfg.restarts);
    Ok(match search_factorization(&m, k, &cfg) {
        Some(f) => (
            Output::Json(factorization_output(&m, Some(&f), vec![])),
            EXIT_OK,
        ),
        None => (
            Output::Json(factorization_output(
                &m,
                None,
                vec![format!(
                    "no size-{k} factorization after {} restarts",
                    cfg.restarts
                )],
            )),
            EXIT_UNDETERMINED,
        ),
    })
}

fn rank3fact(opts: &Opts) -> Outcome {
    let m = read_matrix(opts)?;
    let cfg = search_config(opts, SearchConfig::default().restarts);
    match rank3_upper_factorize(&m, &cfg) {
        Ok(f) => Ok((
            Output::Json(factorization_output(&m, Some(&f), vec![])),
            EXIT_OK,
        )),
        Err(e @ (Error::SearchFailed(_) | Error::VerificationFailed(_))) => Ok((
            Output::Json(factorization_output(&m, None, vec![e.to_string()])),
            EXIT_UNDETERMINED,
        )),
        Err(e) => Err(lib(e)),
    }
}

fn verdict_output(m: &NonnegMatrix, k: usize, v: &Verdict) -> (Output, u8) {
    let mut out = to_json(v);
    if let Value::Object(map) = &mut out {
        map.insert("matrix".into(), to_json(m));
        map.insert("k".into(), json!(k));
    }
    let code = match v.answer {
        Answer::Yes { .. } => EXIT_OK,
        Answer::NoCertified { .. } => EXIT_NO,
        Answer::NotFound => EXIT_UNDETERMINED,
    };
    (Output::Json(out), code)
}

fn decide2(opts: &Opts) -> Outcome {
    let m = read_matrix(opts)?;
    let v = decide_rank2(&m).map_err(lib)?;
    Ok(verdict_output(&m, 2, &v))
}

fn minrank(opts: &Opts) -> Outcome {
    let m = read_matrix(opts)?;
    let k = require_k(opts)?;
    let cfg = search_config(opts, 64);
    let v = min_psd_rank_decide(&m, k, &cfg).map_err(lib)?;
    Ok(verdict_output(&m, k, &v))
}

fn bounds(opts: &Opts, full: bool) -> Outcome {
    let m = read_matrix(opts)?;
    let report = if full {
        bracket_full(&m, &search_config(opts, SearchConfig::default().restarts))
    } else {
        bracket(&m)
    }
    .map_err(lib)?;
    Ok((Output::Json(to_json(&report)), EXIT_OK))
}

/// Checks whatever the input carries: a factorization, a Yes certificate or a
/// No ray, each against the input's `"matrix"`.
fn verify(opts: &Opts) -> Outcome {
    let v = parse_json(&read_input(opts)?)?;
    let m = matrix_from_value(&v)?;
    let tol = opts.tol.unwrap_or(DEFAULT_TOL) * m.max_entry();
    let mut checks = serde_json::Map::new();
    let mut pass = true;

    if let Some(fv) = v.get("factorization").filter(|f| !f.is_null()) {
        let f: PsdFactorization = from_value(fv, "factorization")?;
        let report = verify_factorization(&m, &f, tol).map_err(lib)?;
        pass &= report.pass;
        checks.insert("factorization".into(), to_json(&report));
    }
    if let Some(cv) = v.get("certificate") {
        let cert: Certificate = from_value(cv, "certificate")?;
        let check = match cert {
            Certificate::Conic(c) => {
                let pair = pair_from_matrix(&m).map_err(lib)?;
                let violation = conic_violation(&c, &pair).map_err(lib)?;
                json!({ "kind": "conic", "violation": violation, "pass": violation <= CONIC_TOL })
            }
            Certificate::Bilinear(c) => {
                let k = triangular_root(c.l.rows()).ok_or("certificate size is not triangular")?;
                let sys = build_bilinear_system(&m, k).map_err(lib)?;
                let report = verify_bilinear(&c, &sys, BILINEAR_TOL).map_err(lib)?;
                json!({ "kind": "bilinear", "report": report, "pass": report.pass })
            }
        };
        pass &= check["pass"].as_bool().unwrap_or(false);
        checks.insert("certificate".into(), check);
    }
    if let Some(rv) = v.get("ray") {
        let ray: Vec<SymMatrix> = from_value(rv, "ray")?;
        let pair = pair_from_matrix(&m).map_err(lib)?;
        let sys = build_conic_system(&pair).map_err(lib)?;
        let ray_ok = verify_ray(&sys.problem, &ray, SolveOptions::default().tol).map_err(lib)?;
        let ok = ray_ok && sys.q_bounded;
        pass &= ok;
        checks.insert(
            "ray".into(),
            json!({ "valid_ray": ray_ok, "outer_bounded": sys.q_bounded, "pass": ok }),
        );
    }
    if checks.is_empty() {
        return Err(
            "nothing to verify: expected \"factorization\", \"certificate\" or \"ray\"".into(),
        );
    }
    checks.insert("pass".into(), json!(pass));
    Ok((
        Output::Json(Value::Object(checks)),
        if pass { EXIT_OK } else { EXIT_NO },
    ))
}
