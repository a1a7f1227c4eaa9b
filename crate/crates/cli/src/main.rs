mod builtins;
mod run;
mod scenario;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use run::{Failure, Outcome};

/// Scenario-driven resolvent estimates for magnetic Schrödinger operators.
#[derive(Debug, Parser)]
#[command(name = "morcam", version)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(required_unless_present = "list_builtins")]
    scenario: Option<PathBuf>,

    /// Worker threads for the data-parallel kernels.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Directory for reports; overrides [output] directory.
    #[arg(long, value_name = "PATH")]
    out_dir: Option<PathBuf>,

    /// Print the JSON report on stdout instead of the text summary.
    #[arg(long)]
    json_only: bool,

    /// List built-in potentials, data and run kinds.
    #[arg(long, conflicts_with = "scenario")]
    list_builtins: bool,

    /// With --list-builtins: machine-readable output.
    #[arg(long, requires = "list_builtins")]
    json: bool,
}

fn write_lf(path: &Path, text: &str) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        f.write_all(b"\n")?;
    }
    Ok(())
}

fn report_error(failure: &Failure, out_dir: Option<&Path>) -> ExitCode {
    let body = json!({ "error": failure });
    let text = serde_json::to_string_pretty(&body).expect("error serializes");
    eprintln!("{text}");
    if let Some(dir) = out_dir {
        if fs::create_dir_all(dir).is_ok() {
            let _ = write_lf(&dir.join("error.json"), &text);
        }
    }
    ExitCode::from(failure.exit_code as u8)
}

fn write_outputs(out: &Outcome, dir: &Path, prefix: &str) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let report = json!({
        "tool": "morcam",
        "version": env!("CARGO_PKG_VERSION"),
        "run": out.scenario.run.name(),
        "scenario": out.scenario,
        "warnings": out.warnings,
        "result": out.result,
        "status": match &out.failure {
            None => json!("ok"),
            Some(f) => json!(f),
        },
    });
    let path = dir.join(format!("{prefix}report.json"));
    write_lf(&path, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    written.push(path);
    if let Some(rows) = &out.table {
        let path = dir.join(format!("{prefix}sweep.csv"));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| Failure::io(e.to_string()))?;
        w.write_record(["epsilon", "lhs", "rhs", "ratio"])
            .and_then(|_| rows.iter().try_for_each(|r| w.serialize(r)))
            .and_then(|_| w.flush().map_err(csv::Error::from))
            .map_err(|e| Failure::io(e.to_string()))?;
        written.push(path);
    }
    if let Some(u) = &out.snapshot {
        let path = dir.join(format!("{prefix}solution.mcsf"));
        let f = std::io::BufWriter::new(fs::File::create(&path)?);
        u.write_snapshot(f)?;
        written.push(path);
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    if cli.list_builtins {
        let cat = builtins::catalogue();
        if cli.json {
            println!("{}", serde_json::to_string_pretty(&cat).expect("catalogue serializes"));
        } else {
            print!("{}", builtins::render_text(&cat));
        }
        return ExitCode::SUCCESS;
    }

    if let Some(n) = cli.threads {
        if n == 0 {
            return report_error(&Failure::parameter("--threads must be positive"), cli.out_dir.as_deref());
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report_error(&Failure::parameter(e.to_string()), cli.out_dir.as_deref());
        }
    }

    let path = cli.scenario.expect("clap enforces the scenario argument");
    let scenario = match scenario::load(&path) {
        Ok(s) => s,
        Err(e) => return report_error(&e.into(), cli.out_dir.as_deref()),
    };
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| {
        let base = path.parent().unwrap_or(Path::new("."));
        base.join(&scenario.output.directory)
    });
    log::info!("running {} from {}", scenario.run.name(), path.display());

    let outcome = match run::execute(&scenario) {
        Ok(o) => o,
        Err(f) => return report_error(&f, Some(&out_dir)),
    };
    for w in &outcome.warnings {
        log::warn!("{w}");
    }
    let written = match write_outputs(&outcome, &out_dir, &scenario.output.prefix) {
        Ok(w) => w,
        Err(f) => return report_error(&f, None),
    };
    if cli.json_only {
        match fs::read_to_string(&written[0]) {
            Ok(text) => print!("{text}"),
            Err(e) => return report_error(&e.into(), None),
        }
    } else {
        println!("{} ({})", scenario.run.name(), scenario.potential.label());
        for line in &outcome.summary {
            println!("  {line}");
        }
        for p in &written {
            println!("  wrote {}", p.display());
        }
    }
    match &outcome.failure {
        Some(f) => report_error(f, Some(&out_dir)),
        None => ExitCode::SUCCESS,
    }
}
