//! `lacuna`: batch front end for lacunary trigonometric sum analysis.
//!
//! Every subcommand writes one header-bearing CSV or JSON document with the
//! resolved configuration and tool version embedded, so identical inputs and
//! seeds produce byte-identical outputs.
//!
//! Exit codes: 2 for configuration errors, 3 for resource-budget errors,
//! 1 for internal failures.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use num_traits::Signed;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use lacuna_core::corrgraph::{build_graph, verify_uncorrelation, verify_uncorrelation_sampled};
use lacuna_core::cumulants::{cumulant_table_sn, graph_cumulant_bound, DEFAULT_RHO_CAP};
use lacuna_core::deviation::{
    empirical_mdp_rate, make_schedule, rss_envelope, RssParams, ScheduleKind, TailKind,
    DEFAULT_MIN_EXPECTED_HITS,
};
use lacuna_core::diophantine::{EnumBudget, DEFAULT_NODE_BUDGET};
use lacuna_core::exact::{parse_int, parse_rat, rat_display, Rat};
use lacuna_core::mgf::{
    exact_mgf, mc_mgf, mod_gaussian_residual, MgfOptions, ModGaussianTarget, Normalization,
};
use lacuna_core::moments::{iid_moments_upto, sum_moments_upto};
use lacuna_core::sequences::{
    check_cond_ab, check_growth_condition, check_hadamard, check_integer_ratios, check_large_gap,
    sequence_from_spec_text, GrowthCondition, LacunarySequence,
};
use lacuna_core::trigpoly::{poly_from_json, poly_from_shorthand, TrigPoly};
use lacuna_core::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "lacuna",
    version,
    about = "Exact and Monte Carlo analysis of lacunary trigonometric sums"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for Monte Carlo shards.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct SeqArg {
    /// Sequence spec: shorthand (`geometric:2:10`, `explicit:3,7,20`,
    /// `ratios:1:2,3,5`, `schedule:2:4:8`) or `@file.json`.
    #[arg(long)]
    seq: String,
    /// Prefix length override.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Clone)]
struct PolyArg {
    /// Polynomial: `cosine`, `telescope`, `coeffs:1=1/2,...` or `@file.json`.
    #[arg(long)]
    poly: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gap/growth/arithmetic condition checks on a sequence prefix.
    CheckSequence {
        #[command(flatten)]
        seq: SeqArg,
        /// rho for the growth conditions.
        #[arg(long, default_value_t = 4)]
        rho: u32,
        /// Tail fraction for the large-gap trend.
        #[arg(long, default_value = "1/2")]
        tail_fraction: String,
        /// Ratio threshold for the large-gap trend.
        #[arg(long, default_value = "1")]
        threshold: String,
        /// Also count two-variable solutions `b a_k + c a_l = d`.
        #[arg(long, value_name = "B,C")]
        cond_ab: Option<String>,
    },
    /// Exact moments of S_n (and optionally the i.i.d. analogue T_n).
    Moments {
        #[command(flatten)]
        seq: SeqArg,
        #[command(flatten)]
        poly: PolyArg,
        /// Largest order m.
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// dependent | iid | both
        #[arg(long, default_value = "dependent")]
        kind: String,
    },
    /// Exact cumulants of S_n with the correlation-graph bound per order.
    Cumulants {
        #[command(flatten)]
        seq: SeqArg,
        #[command(flatten)]
        poly: PolyArg,
        /// Largest order m (also the graph range).
        #[arg(long, default_value_t = 6)]
        m_max: u32,
    },
    /// Exhaustively verify the correlation-graph factorization identity.
    GraphVerify {
        #[command(flatten)]
        seq: SeqArg,
        #[command(flatten)]
        poly: PolyArg,
        /// Graph range M.
        #[arg(long, default_value_t = 4)]
        range: u32,
        /// Random set pairs instead of exhaustion (needed beyond n = 12).
        #[arg(long)]
        sample: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact (certified) or Monte Carlo MGF values.
    Mgf {
        #[command(flatten)]
        seq: SeqArg,
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, default_value_t = 0.5)]
        theta_re: f64,
        #[arg(long, default_value_t = 0.0)]
        theta_im: f64,
        /// exact | mc
        #[arg(long, default_value = "exact")]
        method: String,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Mod-Gaussian residuals against exp(theta^rho gamma_rho / rho!).
    ModgVerify {
        #[command(flatten)]
        seq: SeqArg,
        #[command(flatten)]
        poly: PolyArg,
        /// Comma-separated prefix lengths.
        #[arg(long, value_name = "N1,N2,...", default_value = "3,4,5,6")]
        n_list: String,
        #[arg(long, default_value_t = 1.0)]
        theta_re: f64,
        #[arg(long, default_value_t = 0.0)]
        theta_im: f64,
        /// per-term | exact
        #[arg(long, default_value = "per-term")]
        normalization: String,
    },
    /// Monte Carlo MDP rate estimates for S_n and the i.i.d. analogue.
    MdpVerify {
        #[command(flatten)]
        seq: SeqArg,
        #[command(flatten)]
        poly: PolyArg,
        #[arg(long, value_name = "N1,N2,...", default_value = "160,192,224")]
        n_list: String,
        /// z_n = n^-alpha.
        #[arg(long, default_value_t = 2.0 / 3.0)]
        zn_alpha: f64,
        #[arg(long, default_value_t = 0.589)]
        t: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the i.i.d. analogue rows.
        #[arg(long, default_value_t = false)]
        no_iid: bool,
    },
    /// Rudzkis-Saulis-Statulevicius tail envelope values.
    RssEnvelope {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        s: f64,
        #[arg(long, value_name = "X1,X2,...", default_value = "0,0.5,1")]
        x_list: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(&cli) {
        Ok(output) => {
            let result = match &cli.out {
                Some(path) => std::fs::write(path, output.as_bytes()).map_err(|e| e.to_string()),
                None => std::io::stdout()
                    .write_all(output.as_bytes())
                    .map_err(|e| e.to_string()),
            };
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("lacuna: write failed: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Err(err) => {
            eprintln!("lacuna: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SpecParse(_)
        | Error::InvalidSequence(_)
        | Error::InvalidPolynomial(_)
        | Error::InvalidParameter(_) => 2,
        Error::BudgetExceeded { .. } | Error::Infeasible(_) => 3,
        _ => 1,
    }
}

fn node_budget() -> u64 {
    std::env::var("LACUNA_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_NODE_BUDGET)
}

fn resolve_seq(arg: &SeqArg) -> Result<LacunarySequence, Error> {
    let text = if let Some(path) = arg.seq.strip_prefix('@') {
        std::fs::read_to_string(path)
            .map_err(|e| Error::SpecParse(format!("cannot read {path}: {e}")))?
    } else {
        arg.seq.clone()
    };
    sequence_from_spec_text(&text, arg.n)
}

fn resolve_poly(arg: &PolyArg) -> Result<TrigPoly, Error> {
    if let Some(path) = arg.poly.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::SpecParse(format!("cannot read {path}: {e}")))?;
        poly_from_json(&text)
    } else if arg.poly.trim_start().starts_with('{') {
        poly_from_json(&arg.poly)
    } else {
        poly_from_shorthand(&arg.poly)
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|item| {
            item.trim()
                .parse::<T>()
                .map_err(|_| Error::SpecParse(format!("bad {what} entry {item:?}")))
        })
        .collect()
}

/// CSV preamble: tool version plus the resolved config as one JSON line.
fn csv_header(config: &serde_json::Value, columns: &str) -> String {
    format!("# lacuna v{VERSION}\n# config: {config}\n{columns}\n")
}

fn mgf_options() -> MgfOptions {
    MgfOptions {
        node_budget: node_budget(),
        ..MgfOptions::default()
    }
}

fn run(cli: &Cli) -> Result<String, Error> {
    match &cli.command {
        Command::CheckSequence {
            seq,
            rho,
            tail_fraction,
            threshold,
            cond_ab,
        } => {
            let sequence = resolve_seq(seq)?;
            let terms = sequence.terms();
            let tail: Rat = parse_rat(tail_fraction)?;
            let thr: Rat = parse_rat(threshold)?;
            let mut reports = vec![check_hadamard(terms)?, check_integer_ratios(terms)?];
            if terms.len() >= 3 {
                reports.push(check_large_gap(terms, &tail, &thr)?);
                for which in [GrowthCondition::One, GrowthCondition::Two, GrowthCondition::Three] {
                    reports.push(check_growth_condition(terms, *rho, which, None)?);
                }
            }
            let ab = match cond_ab {
                Some(bc) => {
                    let pair: Vec<String> = parse_list(bc, "cond-ab coefficient")?;
                    if pair.len() != 2 {
                        return Err(Error::SpecParse("expected --cond-ab B,C".into()));
                    }
                    let b = parse_int(&pair[0])?;
                    let c = parse_int(&pair[1])?;
                    Some(check_cond_ab(terms, &b, &c, terms.len())?)
                }
                None => None,
            };
            let config = json!({
                "command": "check-sequence",
                "seq": seq.seq,
                "n": terms.len(),
                "rho": rho,
                "tail_fraction": tail_fraction,
                "threshold": threshold,
            });
            let doc = json!({
                "version": VERSION,
                "config": config,
                "reports": reports,
                "cond_ab": ab,
            });
            Ok(format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            ))
        }

        Command::Moments { seq, poly, m, kind } => {
            let sequence = resolve_seq(seq)?;
            let f = resolve_poly(poly)?;
            let n = sequence.len();
            let mut budget = EnumBudget::new(node_budget());
            let config = json!({
                "command": "moments", "seq": seq.seq, "poly": poly.poly,
                "n": n, "m": m, "kind": kind,
            });
            let mut out = csv_header(&config, "n,m,kind,value_num,value_den");
            let want_dep = kind == "dependent" || kind == "both";
            let want_iid = kind == "iid" || kind == "both";
            if !want_dep && !want_iid {
                return Err(Error::SpecParse(format!("unknown kind {kind:?}")));
            }
            if want_dep {
                let table = sum_moments_upto(&f, sequence.terms(), n, *m, &mut budget)?;
                for (i, v) in table.values.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{},dependent,{},{}\n",
                        n,
                        i + 1,
                        v.numer(),
                        v.denom()
                    ));
                }
            }
            if want_iid {
                let table = iid_moments_upto(&f, n, *m)?;
                for (i, v) in table.values.iter().enumerate() {
                    out.push_str(&format!("{},{},iid,{},{}\n", n, i + 1, v.numer(), v.denom()));
                }
            }
            Ok(out)
        }

        Command::Cumulants { seq, poly, m_max } => {
            let sequence = resolve_seq(seq)?;
            let f = resolve_poly(poly)?;
            let n = sequence.len();
            let mut budget = EnumBudget::new(node_budget());
            let table = cumulant_table_sn(&f, sequence.terms(), n, *m_max as usize, &mut budget)?;
            let graph = build_graph(*m_max, f.degree())?;
            let a = f.sup_bound();
            let config = json!({
                "command": "cumulants", "seq": seq.seq, "poly": poly.poly,
                "n": n, "m_max": m_max, "window": graph.window(),
            });
            let mut out = csv_header(&config, "m,gamma_num,gamma_den,bound,pass");
            for m in 1..=*m_max {
                let g = table.gamma(m as usize);
                let (bound, pass) = if m >= 2 {
                    let b = graph_cumulant_bound(n as u64, graph.path_degree(), &a, m)?;
                    let pass = g.abs() <= b;
                    (rat_display(&b), pass)
                } else {
                    (String::new(), true)
                };
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    m,
                    g.numer(),
                    g.denom(),
                    bound,
                    pass
                ));
            }
            Ok(out)
        }

        Command::GraphVerify {
            seq,
            poly,
            range,
            sample,
            seed,
        } => {
            let sequence = resolve_seq(seq)?;
            let f = resolve_poly(poly)?;
            let n = sequence.len();
            let graph = build_graph(*range, f.degree())?;
            let outcome = match sample {
                Some(pairs) => verify_uncorrelation_sampled(
                    &f,
                    sequence.terms(),
                    &graph,
                    *range,
                    n,
                    *pairs,
                    *seed,
                )?,
                None => verify_uncorrelation(&f, sequence.terms(), &graph, *range, n)?,
            };
            let config = json!({
                "command": "graph-verify", "seq": seq.seq, "poly": poly.poly,
                "n": n, "range": range, "window": graph.window(),
                "sample": sample, "seed": seed,
            });
            let doc = json!({
                "version": VERSION,
                "config": config,
                "pass": outcome.pass,
                "tested": outcome.tested,
                "counterexample": outcome.counterexample,
            });
            Ok(format!(
                "{}\n",
                serde_json::to_string_pretty(&doc).expect("serializable")
            ))
        }

        Command::Mgf {
            seq,
            poly,
            theta_re,
            theta_im,
            method,
            samples,
            seed,
        } => {
            let sequence = resolve_seq(seq)?;
            let f = resolve_poly(poly)?;
            let n = sequence.len();
            let theta = Complex64::new(*theta_re, *theta_im);
            let config = json!({
                "command": "mgf", "seq": seq.seq, "poly": poly.poly, "n": n,
                "theta_re": theta_re, "theta_im": theta_im,
                "method": method, "samples": samples, "seed": seed,
            });
            let mut out = csv_header(
                &config,
                "n,theta_re,theta_im,value_re,value_im,target,distance,method,err_bound",
            );
            match method.as_str() {
                "exact" => {
                    let v = exact_mgf(&f, sequence.terms(), n, theta, &mgf_options())?;
                    out.push_str(&format!(
                        "{},{},{},{:.17e},{:.17e},,,exact,{:.6e}\n",
                        n, theta_re, theta_im, v.value.re, v.value.im, v.error_bound
                    ));
                }
                "mc" => {
                    let v = mc_mgf(&f, sequence.terms(), n, theta, *samples, *seed)?;
                    out.push_str(&format!(
                        "{},{},{},{:.17e},{:.17e},,,mc,{:.6e}\n",
                        n, theta_re, theta_im, v.estimate.re, v.estimate.im, v.std_error
                    ));
                }
                other => return Err(Error::SpecParse(format!("unknown method {other:?}"))),
            }
            Ok(out)
        }

        Command::ModgVerify {
            seq,
            poly,
            n_list,
            theta_re,
            theta_im,
            normalization,
        } => {
            let sequence = resolve_seq(seq)?;
            let f = resolve_poly(poly)?;
            let ns: Vec<usize> = parse_list(n_list, "n")?;
            let theta = Complex64::new(*theta_re, *theta_im);
            let norm = match normalization.as_str() {
                "per-term" => Normalization::PerTermVariance,
                "exact" => Normalization::ExactVariance,
                other => {
                    return Err(Error::SpecParse(format!(
                        "unknown normalization {other:?}"
                    )))
                }
            };
            let target = ModGaussianTarget::from_poly(&f, DEFAULT_RHO_CAP)?;
            let opts = mgf_options();
            let config = json!({
                "command": "modg-verify", "seq": seq.seq, "poly": poly.poly,
                "n_list": ns, "theta_re": theta_re, "theta_im": theta_im,
                "normalization": normalization, "rho": target.rho,
                "gamma_rho": rat_display(&target.gamma_rho),
            });
            let mut out = csv_header(
                &config,
                "n,theta_re,theta_im,value_re,value_im,target,distance,method,err_bound",
            );
            for &n in &ns {
                let r =
                    mod_gaussian_residual(&f, sequence.terms(), n, &target, theta, norm, &opts)?;
                out.push_str(&format!(
                    "{},{},{},{:.17e},{:.17e},{:.17e},{:.6e},exact,{:.6e}\n",
                    n,
                    theta_re,
                    theta_im,
                    r.residual.re,
                    r.residual.im,
                    r.target.re,
                    r.distance,
                    r.mgf_error_bound
                ));
            }
            Ok(out)
        }

        Command::MdpVerify {
            seq,
            poly,
            n_list,
            zn_alpha,
            t,
            samples,
            seed,
            no_iid,
        } => {
            let sequence = resolve_seq(seq)?;
            let f = resolve_poly(poly)?;
            let ns: Vec<usize> = parse_list(n_list, "n")?;
            // Which admissibility trends the z_n schedule certifies on this list.
            let schedule = make_schedule(ScheduleKind::Power { alpha: *zn_alpha }, &ns, |n| {
                n as f64
            });
            let admissibility = schedule
                .map(|s| {
                    json!({
                        "zn_n_diverges": s.zn_n_diverges,
                        "zn_log2_vanishes": s.zn_log2_vanishes,
                    })
                })
                .unwrap_or(json!(null));
            let config = json!({
                "command": "mdp-verify", "seq": seq.seq, "poly": poly.poly,
                "n_list": ns, "zn_alpha": zn_alpha, "t": t,
                "samples": samples, "seed": seed, "iid": !no_iid,
                "schedule": admissibility,
            });
            let mut out = csv_header(
                &config,
                "n,t,x_n,y_n,estimate,target,lo,hi,hits,samples,kind",
            );
            for (i, &n) in ns.iter().enumerate() {
                let z_n = (n as f64).powf(-zn_alpha);
                let mut kinds = vec![("dependent", TailKind::Dependent, 0u64)];
                if !*no_iid {
                    kinds.push(("iid", TailKind::Iid, 1 << 32));
                }
                for (name, kind, seed_shift) in kinds {
                    let est = empirical_mdp_rate(
                        &f,
                        sequence.terms(),
                        n,
                        z_n,
                        *t,
                        *samples,
                        seed.wrapping_add(seed_shift).wrapping_add(i as u64),
                        kind,
                        DEFAULT_MIN_EXPECTED_HITS,
                    )?;
                    out.push_str(&format!(
                        "{},{},{:.9e},{:.9e},{},{:.9e},{:.9e},{:.9e},{},{},{}\n",
                        n,
                        t,
                        est.x_n,
                        est.y_n,
                        est.value.map(|v| format!("{v:.9e}")).unwrap_or_default(),
                        est.target,
                        est.lo,
                        est.hi,
                        est.hits,
                        est.samples,
                        name
                    ));
                }
            }
            Ok(out)
        }

        Command::RssEnvelope { theta, s, x_list } => {
            let xs: Vec<f64> = parse_list(x_list, "x")?;
            let config = json!({
                "command": "rss-envelope", "theta": theta, "s": s, "x_list": xs,
            });
            let mut out = csv_header(&config, "x,lower,upper");
            for &x in &xs {
                let (lo, hi) = rss_envelope(&RssParams {
                    theta: *theta,
                    s: *s,
                    x,
                })?;
                out.push_str(&format!("{x},{lo:.9e},{hi:.9e}\n"));
            }
            Ok(out)
        }
    }
}
