use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sixvertex::asymptotics::{
    fit_json, fit_kappa, fit_power_law, kappa_dw, kappa_ht, meixner_q, omega, params_json,
    phase_basis, predict_leading, prediction_json, reduced_norms, theta_ratio, window_length,
    AsymptoticReport, FitReport, MIN_FIT_POINTS,
};
use sixvertex::enumerator::{
    asm_dump_line, config_to_asm, count_configurations, enumerate_dwbc, is_half_turn_symmetric,
    partition_ht, type_histogram, N_MAX_DEFAULT,
};
use sixvertex::hankel::{norms, z_ht, z_ht_via_norms, Family};
use sixvertex::model::{parse_real, weights_from_params, DEFAULT_PRECISION_BITS};
use sixvertex::special::{meixner_norm, ThetaContext};
use sixvertex::verify::{run_suite, CheckReport, Suite};
use sixvertex::{BigFloat, PhaseParams, PhaseRegion, Real, Scalar};

/// Exact and asymptotic partition functions of the half-turn symmetric
/// six-vertex model with domain wall boundary conditions.
#[derive(Parser, Debug)]
#[command(name = "sixvertex", version)]
struct Cli {
    /// Working precision in bits.
    #[arg(long, global = true, env = "SIXVERTEX_PRECISION_BITS", default_value_t = DEFAULT_PRECISION_BITS)]
    precision_bits: u32,

    /// Output format; `plain` unless the command says otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Significant digits of printed numbers (default 15 for plain output,
    /// full precision otherwise).
    #[arg(long, global = true)]
    digits: Option<usize>,

    /// Write output to a file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Plain,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Route {
    Enum,
    Det,
    Norms,
}

#[derive(Args, Debug)]
struct PointArgs {
    /// Phase region: d, af or f.
    #[arg(long, value_parser = parse_phase)]
    phase: PhaseRegion,
    /// Anisotropy; decimals or multiples of pi such as `pi/5`.
    #[arg(long, allow_hyphen_values = true)]
    gamma: String,
    /// Spectral parameter, same syntax as gamma.
    #[arg(long, allow_hyphen_values = true)]
    t: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate DWBC configurations of an N x N lattice.
    Enumerate {
        /// Lattice size N.
        #[arg(long)]
        size: usize,
        /// Only half-turn symmetric configurations.
        #[arg(long)]
        symmetric: bool,
        /// Print only the number of configurations.
        #[arg(long, conflicts_with = "dump_asm")]
        count_only: bool,
        /// One alternating sign matrix per line, row-major.
        #[arg(long)]
        dump_asm: bool,
    },
    /// Partition function Z_2n^HT.
    Partition {
        #[command(flatten)]
        point: PointArgs,
        /// Half the lattice size.
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Route::Det)]
        route: Route,
    },
    /// Orthogonal polynomial norms h_0..h_kmax.
    Norms {
        #[command(flatten)]
        point: PointArgs,
        /// dw or ht.
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long)]
        kmax: usize,
    },
    /// Jacobi theta functions at nome exp(-pi^2 / (2 gamma)).
    Theta {
        /// Anisotropy, gamma > 0; sets the nome.
        #[arg(long)]
        gamma: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
    /// Closed-form large-n predictions, optionally fitted against data.
    Asym {
        #[command(flatten)]
        point: PointArgs,
        /// Predict at this n; from n >= 27 also fit log Z over 8..=n.
        #[arg(long, conflicts_with = "kmax")]
        n: Option<usize>,
        /// Fit the norm-level corrections over k <= kmax.
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Run the verification suite.
    Verify {
        /// fast or full.
        #[arg(long, default_value = "fast", value_parser = parse_suite)]
        suite: Suite,
        /// Only checks whose job name contains this string.
        #[arg(long)]
        only: Option<String>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn parse_phase(s: &str) -> Result<PhaseRegion, String> {
    s.parse()
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

/// A command either succeeded, produced failing checks, or was rejected.
enum Outcome {
    Ok(String),
    ChecksFailed(String),
}

struct Printer {
    format: Format,
    digits: Option<usize>,
}

impl Printer {
    fn num(&self, x: &BigFloat) -> String {
        match (self.format, self.digits) {
            (_, Some(d)) => trim(&x.to_digits(d)),
            (Format::Plain, None) => trim(&x.to_digits(15)),
            _ => x.to_decimal(),
        }
    }
}

/// Drops trailing zeros of the mantissa: `1.50000e0` becomes `1.5`.
fn trim(s: &str) -> String {
    let (mant, exp) = match s.find(['e', 'E', '@']) {
        Some(i) => (&s[..i], &s[i + 1..]),
        None => (s, ""),
    };
    let mant = if mant.contains('.') {
        mant.trim_end_matches('0').trim_end_matches('.')
    } else {
        mant
    };
    if exp.is_empty() || exp.parse::<i64>() == Ok(0) {
        mant.to_string()
    } else {
        format!("{mant}e{exp}")
    }
}

fn point(p: &PointArgs, bits: u32) -> anyhow::Result<PhaseParams<BigFloat>> {
    let gamma = parse_real(&p.gamma, bits).with_context(|| format!("gamma {:?}", p.gamma))?;
    let t = parse_real(&p.t, bits).with_context(|| format!("t {:?}", p.t))?;
    Ok(PhaseParams::new(p.phase, gamma, t, bits)?)
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn json_string(v: &Value) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn enumerate(size: usize, symmetric: bool, count_only: bool, dump_asm: bool, out: &Printer) -> anyhow::Result<String> {
    if dump_asm {
        let mut s = String::new();
        for cfg in enumerate_dwbc(size)? {
            if !symmetric || is_half_turn_symmetric(&cfg) {
                s.push_str(&asm_dump_line(&config_to_asm(&cfg)));
                s.push('\n');
            }
        }
        return Ok(s);
    }
    if count_only {
        let c = count_configurations(size, symmetric)?;
        return Ok(match out.format {
            Format::Json => json_string(&json!({"size": size, "symmetric": symmetric, "count": c}))?,
            Format::Csv => csv_string(&["size", "symmetric", "count"], &[vec![size.to_string(), symmetric.to_string(), c.to_string()]])?,
            Format::Plain => format!("{c}\n"),
        });
    }
    let hist = type_histogram(size, symmetric, N_MAX_DEFAULT)?;
    let total: u64 = hist.values().sum();
    let rows: Vec<Vec<String>> = hist
        .iter()
        .map(|(tc, m)| tc.0.iter().map(|x| x.to_string()).chain([m.to_string()]).collect())
        .collect();
    let header = ["n1", "n2", "n3", "n4", "n5", "n6", "multiplicity"];
    Ok(match out.format {
        Format::Json => json_string(&json!({
            "size": size,
            "symmetric": symmetric,
            "count": total,
            "histogram": hist.iter().map(|(tc, m)| json!({"types": tc.0, "multiplicity": m})).collect::<Vec<_>>(),
        }))?,
        Format::Csv => csv_string(&header, &rows)?,
        Format::Plain => {
            let mut s = format!("# {}\n", header.join(" "));
            for r in &rows {
                s.push_str(&r.join(" "));
                s.push('\n');
            }
            s.push_str(&format!("# total {total}\n"));
            s
        }
    })
}

fn partition(p: &PhaseParams<BigFloat>, args: &PointArgs, n: usize, route: Route, out: &Printer) -> anyhow::Result<String> {
    let value = match route {
        Route::Det => z_ht(p, n)?,
        Route::Norms => z_ht_via_norms(p, n)?,
        Route::Enum => partition_ht(2 * n, &weights_from_params(p)?.w)?,
    };
    let route_name = format!("{route:?}").to_lowercase();
    let v = out.num(&value);
    Ok(match out.format {
        Format::Plain => format!("{v}\n"),
        Format::Json => json_string(&json!({
            "phase": p.phase, "gamma": args.gamma, "t": args.t, "n": n,
            "route": route_name, "precision_bits": p.precision_bits, "z_ht": v,
        }))?,
        Format::Csv => csv_string(
            &["phase", "gamma", "t", "n", "route", "precision_bits", "z_ht"],
            &[vec![p.phase.short_name().into(), args.gamma.clone(), args.t.clone(), n.to_string(), route_name, p.precision_bits.to_string(), v]],
        )?,
    })
}

fn norms_cmd(p: &PhaseParams<BigFloat>, family: Family, kmax: usize, out: &Printer) -> anyhow::Result<String> {
    let ns = norms(p, family, kmax)?;
    let rows: Vec<Vec<String>> = ns.h.iter().enumerate().map(|(k, h)| vec![k.to_string(), out.num(h)]).collect();
    Ok(match out.format {
        Format::Plain => rows.iter().map(|r| format!("{} {}\n", r[0], r[1])).collect(),
        Format::Csv => csv_string(&["k", "h_k"], &rows)?,
        Format::Json => json_string(&json!({
            "params": params_json(p),
            "family": family.to_string(),
            "h": rows.iter().map(|r| json!({"k": r[0].parse::<usize>().unwrap_or(0), "h_k": r[1]})).collect::<Vec<_>>(),
        }))?,
    })
}

fn theta_cmd(gamma: &str, z: &str, bits: u32, out: &Printer) -> anyhow::Result<String> {
    let g = parse_real(gamma, bits)?;
    let zv = parse_real(z, bits)?;
    let ctx = ThetaContext::from_gamma(&g)?;
    let mut rows = vec![("q".to_string(), out.num(ctx.q()))];
    for j in 1..=4u8 {
        rows.push((format!("theta{j}"), out.num(&ctx.theta(j, &zv))));
    }
    rows.push(("theta1_prime0".into(), out.num(&ctx.theta1_prime0())));
    Ok(match out.format {
        Format::Plain => rows.iter().map(|(k, v)| format!("{k} {v}\n")).collect(),
        Format::Csv => csv_string(&["quantity", "value"], &rows.iter().map(|(k, v)| vec![k.clone(), v.clone()]).collect::<Vec<_>>())?,
        Format::Json => {
            let mut m = serde_json::Map::new();
            m.insert("gamma".into(), gamma.into());
            m.insert("z".into(), z.into());
            for (k, v) in rows {
                m.insert(k, v.into());
            }
            json_string(&Value::Object(m))?
        }
    })
}

fn asym(p: &PhaseParams<BigFloat>, n: Option<usize>, kmax: Option<usize>) -> anyhow::Result<AsymptoticReport> {
    let pred = predict_leading(p, n)?;
    let mut fitted = Value::Null;
    let mut residuals = Vec::new();
    if let Some(n) = n {
        if n >= 8 + MIN_FIT_POINTS - 1 {
            let ns: Vec<usize> = (8..=n).collect();
            let mut y = Vec::with_capacity(ns.len());
            for &m in &ns {
                let mut l = z_ht(p, m)?.ln();
                if p.phase == PhaseRegion::Antiferroelectric {
                    let a = predict_leading(p, Some(m))?;
                    if let (Some(t3), Some(t4)) = (a.theta3_n, a.theta4_n) {
                        l = l - &(t3 * &t4).ln();
                    }
                }
                y.push(l.to_f64());
            }
            let fit = fit_power_law(&ns, &y, &phase_basis(p.phase))?;
            residuals = fit.residuals.clone();
            fitted = fit_json(&fit);
        }
    }
    if let Some(kmax) = kmax {
        let mut per_family = serde_json::Map::new();
        for family in Family::BOTH {
            let ns = norms(p, family, kmax)?;
            let (fit, res) = norm_level(p, family, &ns.h, kmax)?;
            if let Some(f) = fit {
                per_family.insert(family.to_string(), fit_json(&f));
                residuals.extend(f.residuals);
            } else {
                per_family.insert(family.to_string(), json!({"relative_deviation": res}));
                residuals.extend(res);
            }
        }
        fitted = Value::Object(per_family);
    }
    Ok(AsymptoticReport {
        phase: p.phase,
        params: params_json(p),
        predicted: prediction_json(&pred),
        fitted,
        residuals,
    })
}

/// Disordered: kappa fit. Otherwise the relative deviations of the norms
/// from their predictions.
fn norm_level(
    p: &PhaseParams<BigFloat>,
    family: Family,
    h: &[BigFloat],
    kmax: usize,
) -> anyhow::Result<(Option<FitReport>, Vec<f64>)> {
    let ns = sixvertex::hankel::NormSequence { phase: p.phase, family, h: h.to_vec() };
    let one = p.gamma.one_like();
    match p.phase {
        PhaseRegion::Disordered => {
            let r = reduced_norms(p, &ns)?;
            let ks: Vec<usize> = (1..=kmax).collect();
            let y: Vec<f64> = ks.iter().map(|&k| (r[k].clone() - &one).to_f64() * k as f64).collect();
            let mut fit = fit_kappa(&ks, &y, window_length(omega(p).to_f64()))?;
            let expect = match family {
                Family::Dw => kappa_dw(&p.gamma),
                Family::Ht => kappa_ht(&p.gamma),
            };
            fit.parameters.push(("kappa_closed_form".into(), expect.to_f64()));
            Ok((Some(fit), Vec::new()))
        }
        PhaseRegion::Antiferroelectric => {
            let r = reduced_norms(p, &ns)?;
            let mut dev = Vec::new();
            for (k, x) in r.iter().enumerate() {
                dev.push((x.clone() / theta_ratio(p, family, k)? - &one).to_f64());
            }
            Ok((None, dev))
        }
        PhaseRegion::Ferroelectric => {
            let q = meixner_q(p);
            let dev = h
                .iter()
                .enumerate()
                .map(|(k, x)| (x.clone() / meixner_norm(k as u64, &q) - &one).to_f64())
                .collect();
            Ok((None, dev))
        }
    }
}

fn verify(suite: Suite, only: Option<&str>, jobs: Option<usize>, bits: u32, format: Format) -> anyhow::Result<Outcome> {
    let reports = run_suite(suite, only, jobs, bits)?;
    if reports.is_empty() {
        bail!("no checks selected");
    }
    let all_pass = reports.iter().all(|r| r.pass);
    let text = match format {
        Format::Json => json_string(&serde_json::to_value(&reports)?)?,
        Format::Csv => csv_string(
            &["name", "discrepancy", "tolerance", "pass", "runtime_secs", "note"],
            &reports.iter().map(report_row).collect::<Vec<_>>(),
        )?,
        Format::Plain => {
            let mut s = String::new();
            for r in &reports {
                s.push_str(&format!(
                    "{} {} discrepancy={} tolerance={}{}\n",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.discrepancy,
                    r.tolerance,
                    r.note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
                ));
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            s.push_str(&format!("{} checks, {} failed\n", reports.len(), failed));
            s
        }
    };
    Ok(if all_pass { Outcome::Ok(text) } else { Outcome::ChecksFailed(text) })
}

fn report_row(r: &CheckReport) -> Vec<String> {
    vec![
        r.name.clone(),
        r.discrepancy.clone(),
        r.tolerance.clone(),
        r.pass.to_string(),
        format!("{:.3}", r.runtime_secs),
        r.note.clone().unwrap_or_default(),
    ]
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let bits = cli.precision_bits;
    if !(16..=1 << 20).contains(&bits) {
        bail!("precision_bits must lie in 16..=1048576, got {bits}");
    }
    let format = cli.format.unwrap_or(match cli.command {
        Command::Verify { .. } | Command::Asym { .. } => Format::Json,
        _ => Format::Plain,
    });
    let out = Printer { format, digits: cli.digits };
    let text = match &cli.command {
        Command::Enumerate { size, symmetric, count_only, dump_asm } => enumerate(*size, *symmetric, *count_only, *dump_asm, &out)?,
        Command::Partition { point: a, n, route } => partition(&point(a, bits)?, a, *n, *route, &out)?,
        Command::Norms { point: a, family, kmax } => norms_cmd(&point(a, bits)?, *family, *kmax, &out)?,
        Command::Theta { gamma, z } => theta_cmd(gamma, z, bits, &out)?,
        Command::Asym { point: a, n, kmax } => {
            if n.is_none() && kmax.is_none() {
                bail!("asym needs --n or --kmax");
            }
            let report = asym(&point(a, bits)?, *n, *kmax)?;
            match format {
                Format::Csv => csv_string(
                    &["index", "residual"],
                    &report.residuals.iter().enumerate().map(|(i, r)| vec![i.to_string(), format!("{r:e}")]).collect::<Vec<_>>(),
                )?,
                _ => json_string(&serde_json::to_value(&report)?)?,
            }
        }
        Command::Verify { suite, only, jobs } => return verify(*suite, only.as_deref(), *jobs, bits, format),
    };
    Ok(Outcome::Ok(text))
}

fn emit(path: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let path = cli.output.clone();
    match run(cli) {
        Ok(Outcome::Ok(text)) => match emit(path.as_ref(), &text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Ok(Outcome::ChecksFailed(text)) => {
            let _ = emit(path.as_ref(), &text);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
