//! thetarep — build the example algebras, verify their identities, and emit
//! kernel/Kähler/measure grids.
//!
//! ```text
//! thetarep verify --example sklyanin --params phi=pi/2,kappa1=1,psi=0,a0=2,alpha=0
//! thetarep grid   --example su11-v1 --what kahler --grid 128,128,-4,4 --out grid.csv
//! ```
//!
//! Exit codes: 0 all checks pass, 1 at least one check failed, 2 usage or
//! configuration error, 3 computation error.

// `!(t > 0.0)` rejects NaN tolerances along with nonpositive ones.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::process::ExitCode;

use thetarep::error::Error;
use thetarep::kernels::GridSpec;
use thetarep::scenario::{
    emit_grid_csv, run_verification, sklyanin_scenario, su11_scenario, ExampleKind, GridQuantity,
    Scenario, Tolerances,
};

const USAGE: &str = "usage:
  thetarep verify --example <sklyanin|su11-v1|su11-v2> [options]
  thetarep grid   --example <sklyanin|su11-v1|su11-v2> --what <kernel|kahler|measure> [options]

options:
  --params k=v,...      parameters: phi, kappa1, psi, a0, a, hbar, tau, alpha, N, M
                        (values accept pi literals: pi, pi/2, 2pi/3, -pi/4, ...)
  --config <path>       key=value file with the same parameter keys
  --M <int>             truncation (shorthand for params M)
  --grid nu,nv,umin,umax   grid: point counts (>= 64) and u-window
  --tol check=value,... per-check tolerance overrides
  --out <path>          write output to a file instead of stdout
  --format <csv|report> output format (grid: csv, verify: report)
  --threads <n>         worker threads (default: THETAREP_THREADS or 1)";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("{USAGE}");
            ExitCode::from(2)
        }
        Err(CliError::Computation(msg)) => {
            eprintln!("computation error: {msg}");
            ExitCode::from(3)
        }
    }
}

enum CliError {
    Usage(String),
    Computation(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter(m) | Error::Input(m) => CliError::Usage(m),
            other => CliError::Computation(other.to_string()),
        }
    }
}

struct Options {
    command: String,
    example: Option<String>,
    what: Option<String>,
    params: BTreeMap<String, String>,
    tols: Tolerances,
    grid: GridSpec,
    out: Option<String>,
    format: Option<String>,
    threads: usize,
}

fn run(args: &[String]) -> Result<ExitCode, CliError> {
    if args.is_empty() {
        return Err(CliError::Usage("missing command".into()));
    }
    let opts = parse_options(args)?;
    thetarep::par::set_threads(opts.threads);
    match opts.command.as_str() {
        "verify" => cmd_verify(&opts),
        "grid" => cmd_grid(&opts),
        other => Err(CliError::Usage(format!("unknown command '{other}'"))),
    }
}

fn parse_options(args: &[String]) -> Result<Options, CliError> {
    let mut opts = Options {
        command: args[0].clone(),
        example: None,
        what: None,
        params: BTreeMap::new(),
        tols: Tolerances::new(),
        grid: GridSpec::default(),
        out: None,
        format: None,
        threads: 0,
    };
    let mut i = 1;
    let take = |i: &mut usize, args: &[String], flag: &str| -> Result<String, CliError> {
        *i += 1;
        args.get(*i)
            .cloned()
            .ok_or_else(|| CliError::Usage(format!("{flag} requires a value")))
    };
    while i < args.len() {
        match args[i].as_str() {
            "--example" => opts.example = Some(take(&mut i, args, "--example")?),
            "--what" => opts.what = Some(take(&mut i, args, "--what")?),
            "--params" => {
                let v = take(&mut i, args, "--params")?;
                parse_kv_list(&v, &mut opts.params)?;
            }
            "--config" => {
                let path = take(&mut i, args, "--config")?;
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
                for line in text.lines() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    parse_kv_list(line, &mut opts.params)?;
                }
            }
            "--M" => {
                let v = take(&mut i, args, "--M")?;
                opts.params.insert("M".into(), v);
            }
            "--grid" => {
                let v = take(&mut i, args, "--grid")?;
                let parts: Vec<&str> = v.split(',').collect();
                if parts.len() != 4 {
                    return Err(CliError::Usage(format!(
                        "--grid expects nu,nv,umin,umax, got '{v}'"
                    )));
                }
                opts.grid.n_u = parts[0]
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad grid count '{}'", parts[0])))?;
                opts.grid.n_v = parts[1]
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad grid count '{}'", parts[1])))?;
                opts.grid.u_min = parse_number(parts[2])
                    .ok_or_else(|| CliError::Usage(format!("bad grid bound '{}'", parts[2])))?;
                opts.grid.u_max = parse_number(parts[3])
                    .ok_or_else(|| CliError::Usage(format!("bad grid bound '{}'", parts[3])))?;
            }
            "--tol" => {
                let v = take(&mut i, args, "--tol")?;
                for pair in v.split(',') {
                    let (k, val) = pair
                        .split_once('=')
                        .ok_or_else(|| CliError::Usage(format!("bad tolerance '{pair}'")))?;
                    let t: f64 = val
                        .parse()
                        .map_err(|_| CliError::Usage(format!("bad tolerance value '{val}'")))?;
                    if !(t > 0.0) {
                        return Err(CliError::Usage(format!(
                            "tolerance for {k} must be > 0, got {t}"
                        )));
                    }
                    opts.tols.insert(k.to_string(), t);
                }
            }
            "--out" => opts.out = Some(take(&mut i, args, "--out")?),
            "--format" => opts.format = Some(take(&mut i, args, "--format")?),
            "--threads" => {
                let v = take(&mut i, args, "--threads")?;
                opts.threads = v
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad thread count '{v}'")))?;
            }
            other => return Err(CliError::Usage(format!("unknown flag '{other}'"))),
        }
        i += 1;
    }
    Ok(opts)
}

fn parse_kv_list(list: &str, into: &mut BTreeMap<String, String>) -> Result<(), CliError> {
    const KNOWN: &[&str] = &[
        "phi", "kappa1", "psi", "a0", "a", "hbar", "tau", "alpha", "N", "M",
    ];
    for pair in list.split(',') {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("malformed parameter '{pair}'")))?;
        if !KNOWN.contains(&k) {
            return Err(CliError::Usage(format!("unknown parameter key '{k}'")));
        }
        into.insert(k.to_string(), v.to_string());
    }
    Ok(())
}

/// Numbers with exact pi literals: pi, 2pi, pi/2, 2pi/3, -pi/4, 0.5pi, ...
fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some(idx) = s.find("pi") {
        let (coef_str, rest) = s.split_at(idx);
        let rest = &rest[2..];
        let coef = match coef_str {
            "" => 1.0,
            "-" => -1.0,
            "+" => 1.0,
            other => other.parse::<f64>().ok()?,
        };
        let denom = if rest.is_empty() {
            1.0
        } else {
            let stripped = rest.strip_prefix('/')?;
            stripped.parse::<f64>().ok()?
        };
        Some(coef * std::f64::consts::PI / denom)
    } else {
        s.parse::<f64>().ok()
    }
}

fn get_num(
    params: &BTreeMap<String, String>,
    key: &str,
    default: f64,
) -> Result<f64, CliError> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => parse_number(v)
            .ok_or_else(|| CliError::Usage(format!("bad numeric value for {key}: '{v}'"))),
    }
}

fn get_int(params: &BTreeMap<String, String>, key: &str, default: i64) -> Result<i64, CliError> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Usage(format!("bad integer value for {key}: '{v}'"))),
    }
}

fn build_scenario(opts: &Options) -> Result<Scenario, CliError> {
    let example = opts
        .example
        .as_deref()
        .ok_or_else(|| CliError::Usage("--example is required".into()))?;
    let kind = ExampleKind::parse(example)?;
    let p = &opts.params;
    let tau = get_num(p, "tau", 1.0)?;
    let m_trunc = get_int(p, "M", 32)?;
    match kind {
        ExampleKind::Sklyanin => {
            let hbar = get_num(p, "hbar", 1.0)?;
            if (hbar - 1.0).abs() > 1e-15 {
                return Err(CliError::Usage(
                    "the sklyanin relations require hbar = 1".into(),
                ));
            }
            let phi = match (p.get("phi"), p.get("N")) {
                (Some(v), _) => parse_number(v)
                    .ok_or_else(|| CliError::Usage(format!("bad numeric value for phi: '{v}'")))?,
                (None, Some(_)) => {
                    let n = get_int(p, "N", 4)?;
                    if n < 2 {
                        return Err(CliError::Usage("N must be >= 2".into()));
                    }
                    2.0 * std::f64::consts::PI / n as f64
                }
                (None, None) => std::f64::consts::PI / 2.0,
            };
            let kappa1 = get_num(p, "kappa1", 1.0)?;
            let psi = get_num(p, "psi", 0.0)?;
            let a0 = get_num(p, "a0", 2.0)?;
            let alpha = get_num(p, "alpha", 0.0)?;
            Ok(sklyanin_scenario(
                phi, kappa1, psi, a0, alpha, tau, m_trunc, opts.grid,
            )?)
        }
        ExampleKind::Su11V1 | ExampleKind::Su11V2 => {
            let a0 = get_num(p, "a0", 1.25)?;
            let a = get_num(p, "a", 0.0)?;
            let hbar = get_num(p, "hbar", 1.0)?;
            Ok(su11_scenario(
                kind == ExampleKind::Su11V2,
                a0,
                a,
                hbar,
                tau,
                m_trunc,
                opts.grid,
            )?)
        }
    }
}

fn write_output(opts: &Options, content: &str) -> Result<(), CliError> {
    match &opts.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Computation(format!("cannot write {path}: {e}"))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_verify(opts: &Options) -> Result<ExitCode, CliError> {
    if let Some(f) = &opts.format {
        if f != "report" {
            return Err(CliError::Usage(format!(
                "verify emits structured reports; --format {f} is not supported"
            )));
        }
    }
    let sc = build_scenario(opts)?;
    let reports = run_verification(&sc, &opts.tols).map_err(|e| match e {
        Error::Parameter(m) | Error::Input(m) => CliError::Usage(m),
        other => CliError::Computation(other.to_string()),
    })?;
    let mut content = String::new();
    let mut all_pass = true;
    for r in &reports {
        all_pass &= r.pass;
        content.push_str(&r.to_record_line());
        content.push('\n');
    }
    write_output(opts, &content)?;
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_grid(opts: &Options) -> Result<ExitCode, CliError> {
    if let Some(f) = &opts.format {
        if f != "csv" {
            return Err(CliError::Usage(format!(
                "grid emits CSV; --format {f} is not supported"
            )));
        }
    }
    let what = opts
        .what
        .as_deref()
        .ok_or_else(|| CliError::Usage("grid requires --what".into()))?;
    let what = GridQuantity::parse(what)?;
    let sc = build_scenario(opts)?;
    let csv = emit_grid_csv(&sc, what).map_err(|e| CliError::Computation(e.to_string()))?;
    write_output(opts, &csv)?;
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::parse_number;
    use std::f64::consts::PI;

    #[test]
    fn pi_literals() {
        assert_eq!(parse_number("pi"), Some(PI));
        assert_eq!(parse_number("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_number("2pi/3"), Some(2.0 * PI / 3.0));
        assert_eq!(parse_number("-pi/4"), Some(-PI / 4.0));
        assert_eq!(parse_number("0.5pi"), Some(0.5 * PI));
        assert_eq!(parse_number("1.25"), Some(1.25));
        assert_eq!(parse_number("pie"), None);
        assert_eq!(parse_number("pi/x"), None);
    }
}
