use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use toric_ic::cohom::{self, table_json};
use toric_ic::ic::{build_ic_with, BuildOptions};
use toric_ic::selfcheck::{self, SelfCheckConfig};
use toric_ic::{Error, Fan, Perversity, Sites};

#[derive(Parser)]
#[command(name = "toric-ic", version, about = "Intersection cohomology of toric varieties from fans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(clap::Args)]
struct FanArgs {
    /// Fan JSON file.
    fan: PathBuf,
    /// Preset name, inline perversity JSON, or a path to a JSON file.
    #[arg(short = 'p', long = "perversity", default_value = "middle")]
    perversity: String,
    #[arg(long, hide = true)]
    corrupt_builder: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a fan, then print its cone census.
    Validate { fan: PathBuf },
    /// Intersection cohomology Betti numbers B_0..B_2r.
    Betti(FanArgs),
    /// Dimensions of the global cohomology table H^p(Γ)_q.
    Gamma(FanArgs),
    /// dim H^i(Γ)_{-j} for i = 0..r.
    Omega {
        #[command(flatten)]
        args: FanArgs,
        #[arg(short = 'j', allow_negative_numbers = true)]
        j: i64,
    },
    /// Compare the global tables of ic_p and ic_{-p}.
    Duality(FanArgs),
    /// Run the invariant suites with a seed.
    Selfcheck {
        #[command(flatten)]
        args: FanArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Fail {
    code: u8,
    msg: String,
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Json(_) | Error::InvalidPerversity(_) | Error::JOutOfRange { .. } => 2,
            Error::FanNotComplete => 4,
            _ => 3,
        };
        Fail { code, msg: e.to_string() }
    }
}

fn load_fan(path: &Path) -> Result<Fan, Fail> {
    let text = std::fs::read_to_string(path).map_err(|e| Fail { code: 2, msg: format!("{}: {e}", path.display()) })?;
    let spec: toric_ic::FanSpec = serde_json::from_str(&text).map_err(|e| Fail { code: 2, msg: format!("{}: {e}", path.display()) })?;
    Ok(Fan::from_spec(&spec)?)
}

fn load(args: &FanArgs) -> Result<(Arc<Sites>, Perversity), Fail> {
    let fan = load_fan(&args.fan)?;
    let text = match std::fs::read_to_string(&args.perversity) {
        Ok(t) => t,
        Err(_) => args.perversity.clone(),
    };
    let p = Perversity::parse(&fan, &text)?;
    Ok((Sites::new(fan), p))
}

fn build_opts(args: &FanArgs) -> BuildOptions {
    BuildOptions { skip_truncation: args.corrupt_builder }
}

fn emit(format: Format, value: serde_json::Value, table: String) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&value).expect("serializable")),
        Format::Table => print!("{table}"),
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn require_complete(sites: &Sites) -> Result<(), Fail> {
    if sites.fan().is_complete() {
        Ok(())
    } else {
        Err(Error::FanNotComplete.into())
    }
}

fn run(cli: Cli) -> Result<u8, Fail> {
    let format = cli.format;
    match cli.command {
        Command::Validate { fan } => {
            let fan = load_fan(&fan)?;
            let status = if fan.is_complete() { "complete" } else { "incomplete" };
            emit(
                format,
                json!({
                    "cones": fan.len(),
                    "census": fan.census(),
                    "complete": fan.is_complete(),
                    "simplicial": fan.is_simplicial(),
                }),
                format!("{} cones, {status}\nby dimension: {}\n", fan.len(), join(&fan.census())),
            );
        }
        Command::Betti(args) => {
            let (sites, p) = load(&args)?;
            require_complete(&sites)?;
            let ic = build_ic_with(&sites, &p, build_opts(&args))?;
            let b = cohom::betti_from_table(&cohom::gamma_table(&ic), sites.fan().rank());
            emit(format, json!({ "betti": b }), format!("{}\n", join(&b)));
        }
        Command::Gamma(args) => {
            let (sites, p) = load(&args)?;
            let t = cohom::gamma_table(&build_ic_with(&sites, &p, build_opts(&args))?);
            let complete = sites.fan().is_complete();
            let mut table = String::from("p q dim\n");
            for (&(a, b), n) in &t {
                table.push_str(&format!("{a} {b} {n}\n"));
            }
            if !complete {
                table.push_str("fan is incomplete: these are not hypercohomology dimensions\n");
            }
            emit(format, json!({ "gamma": table_json(&t), "complete": complete }), table);
        }
        Command::Omega { args, j } => {
            let (sites, p) = load(&args)?;
            require_complete(&sites)?;
            let rank = sites.fan().rank();
            if !(0..=rank as i64).contains(&j) {
                return Err(Error::JOutOfRange { j, rank }.into());
            }
            let t = cohom::gamma_table(&build_ic_with(&sites, &p, build_opts(&args))?);
            let dims = cohom::omega_slice(&t, rank, j as i32);
            emit(format, json!({ "j": j, "dims": dims }), format!("{}\n", join(&dims)));
        }
        Command::Duality(args) => {
            let (sites, p) = load(&args)?;
            require_complete(&sites)?;
            let rank = sites.fan().rank();
            let t = cohom::gamma_table(&build_ic_with(&sites, &p, build_opts(&args))?);
            let t_dual = cohom::gamma_table(&build_ic_with(&sites, &p.dual(), build_opts(&args))?);
            let duality = cohom::compare_dual_tables(&t, &t_dual, rank);
            let report = cohom::Report { betti: cohom::betti_from_table(&t, rank), gamma: table_json(&t), duality };
            let mut table = String::new();
            if report.duality.ok {
                table.push_str("duality ok\n");
            }
            for v in &report.duality.violations {
                table.push_str(&format!("violation i={} j={}: {} vs {}\n", v.i, v.j, v.lhs, v.rhs));
            }
            let ok = report.duality.ok;
            emit(format, serde_json::to_value(&report).expect("serializable"), table);
            if !ok {
                return Ok(5);
            }
        }
        Command::Selfcheck { args, seed } => {
            let (sites, p) = load(&args)?;
            let cfg = SelfCheckConfig { seed, build: build_opts(&args), ..Default::default() };
            let rep = selfcheck::run(&sites, &p, &cfg)?;
            let mut table: String = rep.passed.iter().map(|n| format!("pass {n}\n")).collect();
            if let Some(f) = &rep.failure {
                table.push_str(&format!("FAIL {}: {}\n", f.property, f.detail));
            }
            emit(format, serde_json::to_value(&rep).expect("serializable"), table);
            if let Some(f) = rep.failure {
                eprintln!("property failed: {}", f.property);
                return Ok(5);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("TORIC_IC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
