//! Command-line front end. `run` never exits the process; it returns the
//! exit code: 0 success, 1 failed check or infeasible certificate, 2 usage
//! error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harmonic::{check_b_conditions, check_dirichlet_matrix, BoundaryVector, HarmonicStructure};
use crate::io::{fmt_f64, resolve_spec, write_output, LoadedSpec};
use crate::measures::{harmonic_measure_table, HarmonicTuple};
use crate::metrics::{
    default_cap, embedding_table, geodesic_converge, geodesic_profile, intrinsic_certificate,
    intrinsic_estimate, IntrinsicOptions, MetricContext,
};
use crate::structure::{LevelGraph, VertexRef};

#[derive(Debug, Parser)]
#[command(name = "pcfdist", version, about = "Geodesic and intrinsic distances on p.c.f. fractals")]
pub struct Cli {
    /// Builtin (gasket:L, hexagasket, nonagasket, polygasket:N) or spec file.
    #[arg(long, global = true, default_value = "gasket:2")]
    pub spec: String,
    /// Harmonic tuple as boundary vectors, e.g. "1,0,0;0,1,0".
    #[arg(long, global = true)]
    pub tuple: Option<String>,
    /// Directory for output files; without it files go to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// D1-D3, regularity and B1-B4 report.
    Check,
    /// Vertex and cell tables of V_n.
    Graph {
        #[arg(long)]
        level: usize,
    },
    /// Discrete geodesic distances for increasing levels.
    Geodesic {
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long)]
        nmax: usize,
        #[arg(long, default_value_t = 0.0)]
        rtol: f64,
    },
    /// Single-source discrete geodesic distances on V_n.
    Profile {
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long)]
        level: usize,
    },
    /// Capped geodesic profile with its domination slack table.
    Certify {
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long)]
        level: usize,
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Discrete intrinsic distance estimate.
    Intrinsic {
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long)]
        level: usize,
        /// Constraint depth beyond the level.
        #[arg(long, default_value_t = 0)]
        depth: usize,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-4)]
        rtol: f64,
    },
    /// Harmonic coordinates of V_n.
    Embed {
        #[arg(long)]
        level: usize,
    },
    /// Energy measures of the tuple on all cells up to a depth.
    Measures {
        #[arg(long)]
        depth: usize,
    },
    /// Spec JSON, with D and r filled in.
    Spec,
}

/// The resolved inputs of a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: LoadedSpec,
    pub hs: HarmonicStructure,
    pub tuple: HarmonicTuple,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let spec = resolve_spec(&cli.spec)?;
        let hs = spec.harmonic_structure()?;
        let tuple = match &cli.tuple {
            Some(t) => parse_tuple(t, hs.q())?,
            None => HarmonicTuple::standard(&hs),
        };
        Ok(RunConfig {
            spec,
            hs,
            tuple,
            out: cli.out.clone(),
        })
    }
}

/// `"a,b,c;d,e,f"` into boundary vectors.
pub fn parse_tuple(text: &str, q: usize) -> Result<HarmonicTuple> {
    let parse_err = |m: String| Error::Parse {
        context: "--tuple".into(),
        message: m,
    };
    let comps = text
        .split(';')
        .map(|c| {
            c.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| parse_err(format!("{v:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()
                .map(BoundaryVector)
        })
        .collect::<Result<Vec<_>>>()?;
    HarmonicTuple::new(comps, q)
}

struct Output {
    summary: String,
    files: Vec<(String, String)>,
    code: i32,
}

fn parse_ref(text: &str, hs: &HarmonicStructure) -> Result<VertexRef> {
    VertexRef::parse(text, hs.k(), hs.q())
}

fn execute(cli: &Cli) -> Result<Output> {
    let cfg = RunConfig::resolve(cli)?;
    let hs = &cfg.hs;
    let k = hs.k();
    let mut summary = String::new();
    let mut files = Vec::new();
    let mut code = 0;
    if cfg.tuple.is_all_constant() {
        eprintln!("warning: every tuple component is constant; all distances vanish");
    }
    let ctx = || MetricContext::new(cfg.hs.clone(), cfg.tuple.clone());
    match &cli.command {
        Command::Check => {
            let mut report = check_dirichlet_matrix(hs.d())?;
            report.extend(check_b_conditions(hs)?);
            let _ = writeln!(summary, "spec: {}", hs.spec());
            let _ = writeln!(summary, "r: {}", join(hs.weights()));
            let _ = writeln!(summary, "regularity residual: {}", fmt_f64(hs.regularity_residual()));
            for fp in hs.fixed_points() {
                let _ = writeln!(
                    summary,
                    "p_{} (letter {}): v = [{}], u = [{}]",
                    fp.label,
                    fp.letter,
                    join(&fp.v),
                    join(&fp.u)
                );
            }
            let _ = write!(summary, "{report}");
            if !report.all_passed() {
                code = 1;
            }
        }
        Command::Graph { level } => {
            let g = LevelGraph::build(hs.spec(), *level)?;
            let _ = writeln!(
                summary,
                "V_{level}: {} vertices, {} cells, connected: {}",
                g.vertex_count(),
                g.cell_count(),
                g.is_connected()
            );
            let mut v = String::from("id,word,label,birth_level\n");
            for id in 0..g.vertex_count() as u32 {
                let r = g.canonical_ref(id);
                let _ = writeln!(v, "{id},{},{},{}", r.word.to_text(k), r.label, r.level());
            }
            let mut c = String::from("cell");
            for b in 0..hs.q() {
                let _ = write!(c, ",v_{b}");
            }
            c.push('\n');
            for idx in 0..g.cell_count() {
                let w = crate::structure::Word::from_index(idx, *level, k);
                c.push_str(&w.to_text(k));
                for id in g.cell(idx) {
                    let _ = write!(c, ",{id}");
                }
                c.push('\n');
            }
            files.push(("vertices.csv".into(), v));
            files.push(("cells.csv".into(), c));
        }
        Command::Geodesic { from, to, nmax, rtol } => {
            let ctx = ctx()?;
            let (x, y) = (parse_ref(from, hs)?, parse_ref(to, hs)?);
            let hist = geodesic_converge(&ctx, &x, &y, *nmax, *rtol)?;
            let _ = writeln!(summary, "estimate: {}", fmt_f64(hist.estimate));
            let _ = writeln!(summary, "relative gap: {}", fmt_f64(hist.relative_gap));
            if let Some(e) = hist.extrapolated {
                let _ = writeln!(summary, "extrapolated (not asserted): {}", fmt_f64(e));
            }
            let _ = writeln!(summary, "monotone: {}", hist.monotone);
            if !hist.monotone {
                code = 1;
            }
            files.push(("geodesic.csv".into(), hist.to_csv()));
        }
        Command::Profile { from, level } => {
            let ctx = ctx()?;
            let x = parse_ref(from, hs)?;
            let phi = geodesic_profile(&ctx, &x, *level)?;
            let lv = ctx.level(*level)?;
            let excess = crate::metrics::lipschitz_excess(&lv, &phi);
            let _ = writeln!(summary, "Lipschitz excess: {}", fmt_f64(excess.max(0.0)));
            let mut csv = String::from("id,word,label,value\n");
            for (id, v) in phi.iter().enumerate() {
                let r = lv.graph().canonical_ref(id as u32);
                let _ = writeln!(csv, "{id},{},{},{}", r.word.to_text(k), r.label, fmt_f64(*v));
            }
            files.push(("profile.csv".into(), csv));
        }
        Command::Certify { from, to, level, cap } => {
            let ctx = ctx()?;
            let (x, y) = (parse_ref(from, hs)?, parse_ref(to, hs)?);
            let cap = cap.unwrap_or_else(|| default_cap(hs, &cfg.tuple));
            let cert = intrinsic_certificate(&ctx, &x, &y, *level, cap)?;
            let _ = writeln!(
                summary,
                "certified value: {}\nfeasible: {}",
                fmt_f64(cert.certified_value),
                cert.feasible()
            );
            if !cert.feasible() {
                code = 1;
            }
            files.push(("certificate.json".into(), cert.to_json()));
            files.push(("slack.csv".into(), cert.slack.to_csv()));
        }
        Command::Intrinsic {
            from,
            to,
            level,
            depth,
            max_iter,
            rtol,
        } => {
            let ctx = ctx()?;
            let (x, y) = (parse_ref(from, hs)?, parse_ref(to, hs)?);
            let opts = IntrinsicOptions {
                extra_depth: *depth,
                max_iter: *max_iter,
                rtol: *rtol,
                cap: None,
            };
            let est = intrinsic_estimate(&ctx, &x, &y, *level, &opts)?;
            let json = format!(
                "{{\n  \"level\": {},\n  \"constraint_depth\": {},\n  \"value\": {},\n  \"upper\": {},\n  \"certificate_value\": {},\n  \"iterations\": {},\n  \"converged\": {},\n  \"min_slack\": {}\n}}\n",
                est.level,
                est.constraint_depth,
                fmt_f64(est.value),
                fmt_f64(est.upper),
                fmt_f64(est.certificate_value),
                est.iterations,
                est.converged,
                fmt_f64(est.min_slack)
            );
            let _ = write!(summary, "{json}");
            let mut csv = String::from("iteration,value\n");
            for (i, v) in est.history.iter().enumerate() {
                let _ = writeln!(csv, "{i},{}", fmt_f64(*v));
            }
            files.push(("intrinsic.json".into(), json));
            files.push(("intrinsic_history.csv".into(), csv));
        }
        Command::Embed { level } => {
            let ctx = ctx()?;
            files.push(("embedding.csv".into(), embedding_table(&ctx, *level)?));
        }
        Command::Measures { depth } => {
            let t = harmonic_measure_table(hs, &cfg.tuple, *depth);
            let _ = writeln!(summary, "total: {}", fmt_f64(t.total()));
            files.push(("measures.csv".into(), t.to_csv()));
        }
        Command::Spec => {
            let filled = LoadedSpec {
                spec: hs.spec().clone(),
                d: Some(hs.d().clone()),
                r: Some(hs.weights().to_vec()),
            };
            files.push(("spec.json".into(), filled.to_json()));
        }
    }
    Ok(Output {
        summary,
        files,
        code,
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(", ")
}

fn error_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_)
        | Error::InvalidParameter(_)
        | Error::InvalidSpec(_)
        | Error::Parse { .. }
        | Error::Resource { .. } => 2,
        _ => 1,
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return error_code(&e);
        }
    };
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(out.summary.as_bytes());
    match &cli.out {
        Some(dir) => {
            for (name, contents) in &out.files {
                if let Err(e) = write_output(dir, name, contents) {
                    eprintln!("error: {e}");
                    return 1;
                }
            }
        }
        None => {
            for (_, contents) in &out.files {
                let _ = stdout.write_all(contents.as_bytes());
            }
        }
    }
    out.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuple_parsing() {
        let t = parse_tuple("1,0,0; 0,1,1", 3).unwrap();
        assert_eq!(t.len(), 2);
        assert!(parse_tuple("1,0", 3).is_err());
        assert!(parse_tuple("1,x,0", 3).is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["pcfdist", "bogus"]), 2);
        assert_eq!(run(["pcfdist", "--spec", "carpet", "check"]), 2);
        assert_eq!(run(["pcfdist", "profile", "--from", "9:0", "--level", "1"]), 2);
    }
}
