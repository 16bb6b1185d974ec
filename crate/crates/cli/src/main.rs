//! `eig`: convergence studies for the Stokes eigenvalue problem.

mod config;
mod preset;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use stokes_eig::study::Comparison;
use stokes_eig::{compare_reference, run_convergence_study, ConvergenceReport, Error, ReferenceTable};

use config::{load_config, PartialConfig, RunConfig};

#[derive(Parser)]
#[command(name = "eig", version, about = "Stokes eigenvalue convergence studies with RT and BDM pseudostress elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more convergence studies and compare against the reference tables.
    Run(RunArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Named study set: table1 .. table7.
    #[arg(long)]
    preset: Option<String>,
    /// Flat JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// square, lshape or disk.
    #[arg(long)]
    domain: Option<String>,
    /// rt or bdm.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// full or reduced.
    #[arg(long)]
    formulation: Option<String>,
    /// Comma separated mesh levels, e.g. 10,20,30,40.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    nev: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    /// auto, dense or shiftinvert.
    #[arg(long)]
    solver: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

const OVERRIDE_ORDER: [&str; 12] = [
    "domain",
    "family",
    "k",
    "formulation",
    "levels",
    "nev",
    "mu",
    "output_dir",
    "solver",
    "tolerances.extr",
    "tolerances.order",
    "tolerances.raw",
];

const EXIT_ERROR: u8 = 1;
const EXIT_MISMATCH: u8 = 2;

fn parse_field<T: std::str::FromStr>(v: &Option<String>, name: &str, errs: &mut Vec<String>) -> Option<T>
where
    T::Err: std::fmt::Display,
{
    v.as_ref().and_then(|s| s.parse().map_err(|e| errs.push(format!("--{name}: {e}"))).ok())
}

fn parse_levels(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("--levels: '{}' is not a non-negative integer", t.trim())))
        .collect()
}

impl RunArgs {
    fn flags(&self) -> Result<PartialConfig, Vec<String>> {
        let mut errs = Vec::new();
        let levels = match self.levels.as_deref().map(parse_levels) {
            Some(Err(e)) => {
                errs.push(e);
                None
            }
            Some(Ok(l)) => Some(l),
            None => None,
        };
        let c = PartialConfig {
            domain: parse_field(&self.domain, "domain", &mut errs),
            family: parse_field(&self.family, "family", &mut errs),
            k: self.k,
            formulation: parse_field(&self.formulation, "formulation", &mut errs),
            levels,
            nev: self.nev,
            mu: self.mu,
            output_dir: self.output.clone(),
            solver: parse_field(&self.solver, "solver", &mut errs),
            tolerances: Default::default(),
        };
        if errs.is_empty() {
            Ok(c)
        } else {
            Err(errs)
        }
    }

    /// Merges preset, config file and flags in increasing precedence.
    fn resolve(&self) -> Result<(Vec<RunConfig>, Vec<String>), Vec<String>> {
        let mut errs = Vec::new();
        let mut warnings = Vec::new();
        let mut bases = match &self.preset {
            Some(name) => match preset::preset(name) {
                Some(p) => p,
                None => {
                    errs.push(format!("unknown preset '{name}' (expected one of {})", preset::PRESETS.join(", ")));
                    vec![PartialConfig::default()]
                }
            },
            None => vec![PartialConfig::default()],
        };
        let file = match &self.config {
            Some(path) => load_config(path).map_err(|e| errs.extend(e)).ok(),
            None => None,
        };
        let flags = self.flags().map_err(|e| errs.extend(e)).ok();
        if !errs.is_empty() {
            return Err(errs);
        }
        for (source, layer) in [("config file", file), ("flags", flags)] {
            let Some(layer) = layer else { continue };
            let mut changed = Vec::new();
            for b in &mut bases {
                for f in b.overlay(&layer) {
                    if !changed.contains(&f) {
                        changed.push(f);
                    }
                }
            }
            changed.sort_by_key(|f| OVERRIDE_ORDER.iter().position(|o| o == f));
            if !changed.is_empty() {
                warnings.push(format!("{source} override: {}", changed.join(", ")));
            }
        }
        let mut out = Vec::new();
        for b in &bases {
            match b.resolve() {
                Ok(c) if out.contains(&c) => {}
                Ok(c) => out.push(c),
                Err(e) => errs.extend(e),
            }
        }
        errs.dedup();
        if errs.is_empty() {
            Ok((out, warnings))
        } else {
            Err(errs)
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a RunConfig,
    report: &'a ConvergenceReport,
    comparison: Option<&'a Comparison>,
    reference: &'static str,
    passed: bool,
}

enum Outcome {
    Passed,
    NoReference,
    Mismatch,
}

fn write_outputs(dir: &Path, stem: &str, csv: &str, json: &str) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{stem}.csv")), csv)?;
    std::fs::write(dir.join(format!("{stem}.json")), json)
}

fn print_summary(c: &RunConfig, report: &ConvergenceReport, cmp: Option<&Comparison>) {
    println!("{}", c.study().key());
    print!("  {:>3}", "N");
    for i in 0..report.tracked() {
        print!(" {:>14}", format!("lambda_{}", i + 1));
    }
    println!();
    for l in &report.levels {
        print!("  {:>3}", l.n);
        for v in &l.eigenvalues {
            print!(" {v:>14.8}");
        }
        println!();
    }
    print!("  {:>3}", "t");
    for f in &report.fits {
        print!(" {:>14.4}", f.order);
    }
    println!();
    print!("  {:>3}", "ext");
    for f in &report.fits {
        print!(" {:>14.8}", f.extrapolated);
    }
    println!();
    for w in &report.warnings {
        println!("  warning: {w}");
    }
    match cmp {
        Some(cmp) => {
            println!("  table {}: {}", cmp.table, if cmp.passed { "PASS" } else { "MISMATCH" });
            for f in &cmp.failures {
                println!("    {f}");
            }
        }
        None => println!("  no reference data for this study"),
    }
}

fn run_one(c: &RunConfig, table: &ReferenceTable) -> Result<Outcome, String> {
    let study = c.study();
    let report = run_convergence_study(&study).map_err(|e| format!("{}: {e}", study.stem()))?;
    let cmp = match compare_reference(&report, table, &c.tolerances()) {
        Ok(cmp) => Some(cmp),
        Err(Error::MissingReference(_)) => None,
        Err(e) => return Err(format!("{}: {e}", study.stem())),
    };
    let passed = cmp.as_ref().is_none_or(|c| c.passed);
    let summary = Summary {
        config: c,
        report: &report,
        comparison: cmp.as_ref(),
        reference: if cmp.is_some() { "compared" } else { "missing" },
        passed,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?;
    write_outputs(&c.output_dir, &study.stem(), &report.to_csv(), &json)
        .map_err(|e| format!("cannot write to {}: {e}", c.output_dir.display()))?;
    print_summary(c, &report, cmp.as_ref());
    Ok(match cmp {
        None => Outcome::NoReference,
        Some(c) if c.passed => Outcome::Passed,
        Some(_) => Outcome::Mismatch,
    })
}

fn run(args: &RunArgs) -> ExitCode {
    let (configs, warnings) = match args.resolve() {
        Ok(r) => r,
        Err(errs) => {
            eprintln!("invalid configuration:");
            for e in errs {
                eprintln!("  - {e}");
            }
            return ExitCode::from(EXIT_ERROR);
        }
    };
    for w in warnings {
        eprintln!("warning: {w}");
    }
    if let Ok(v) = std::env::var("EIG_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: EIG_THREADS ignored: {e}");
                }
            }
            _ => eprintln!("warning: EIG_THREADS='{v}' is not a positive integer; ignored"),
        }
    }
    let table = ReferenceTable::embedded();
    let mut code = 0;
    for c in &configs {
        match run_one(c, &table) {
            Ok(Outcome::Passed | Outcome::NoReference) => {}
            Ok(Outcome::Mismatch) => code = code.max(EXIT_MISMATCH),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_ERROR);
            }
        }
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => run(args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_parse() {
        assert_eq!(parse_levels("10, 20,30").unwrap(), vec![10, 20, 30]);
        assert!(parse_levels("10,x").is_err());
    }

    #[test]
    fn flags_override_preset() {
        let args = RunArgs { preset: Some("table1".into()), k: Some(1), levels: Some("4,6,8".into()), ..Default::default() };
        let (configs, warnings) = args.resolve().unwrap();
        assert_eq!(configs.len(), 1);
        assert!(configs.iter().all(|c| c.k == 1 && c.levels == vec![4, 6, 8]));
        assert_eq!(warnings, vec!["flags override: k, levels".to_string()]);
    }

    #[test]
    fn errors_aggregate_across_sources() {
        let args = RunArgs { preset: Some("table9".into()), domain: Some("cube".into()), levels: Some("1,,2".into()), ..Default::default() };
        let errs = args.resolve().unwrap_err();
        assert_eq!(errs.len(), 3, "{errs:?}");
    }
}
