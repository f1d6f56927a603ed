//! `rmcodec`: check, compile, run and measure requirement models.
//!
//! Exit codes: 0 ok, 1 model or usage error, 2 I/O or store file error,
//! 3 precondition failure, 4 runtime fault. Diagnostics go to stderr,
//! results to stdout.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rmcodec::classify::dump_actions;
use rmcodec::diag::Diagnostic;
use rmcodec::emit::{
    compute_metrics, parse_input_value, parse_scenarios, render_csv, render_ir, write_listings,
};
use rmcodec::logic::{generate_application, Application};
use rmcodec::model::{parse_models, RequirementModel};
use rmcodec::runtime::{
    execute, load_store, render_record, save_store, EntityStore, Outcome, PersistError, Value,
};

const EXIT_MODEL: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_FAULT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "rmcodec",
    version,
    about = "Requirement model compiler and runtime"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Models {
    /// Model files, merged in order.
    #[arg(long = "model", required = true, num_args = 1..)]
    paths: Vec<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate.
    Check {
        #[command(flatten)]
        models: Models,
    },
    /// Generate listings for every operation.
    Compile {
        #[command(flatten)]
        models: Models,
        /// Directory for `<service>/<operation>.txt` listings.
        #[arg(long)]
        out: PathBuf,
        /// Also write `<operation>.ir` next to each listing.
        #[arg(long)]
        emit_ir: bool,
        /// Also write `<operation>.actions` next to each listing.
        #[arg(long)]
        dump_actions: bool,
    },
    /// Execute one operation against a store file.
    Run {
        #[command(flatten)]
        models: Models,
        #[arg(long)]
        store: PathBuf,
        /// Start from an empty store when the file does not exist.
        #[arg(long)]
        init_empty: bool,
        #[arg(long)]
        op: String,
        /// Input bindings as `name=value`.
        #[arg(long = "in", num_args = 0..)]
        inputs: Vec<String>,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        today: i64,
    },
    /// Print the metrics table as CSV.
    Metrics {
        #[command(flatten)]
        models: Models,
        /// Scenario file used for execution times.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Store the scenarios run against; empty when omitted.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every contract's classified actions.
    DumpActions {
        #[command(flatten)]
        models: Models,
    },
}

/// A failed command: what to print and the exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    fn diagnostics(diags: &[Diagnostic]) -> Self {
        let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        Failure::new(EXIT_MODEL, lines.join("\n"))
    }

    fn store(path: &Path, e: PersistError) -> Self {
        Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
    }
}

type CmdResult = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

fn load_model(models: &Models) -> Result<RequirementModel, Failure> {
    let sources = models
        .paths
        .iter()
        .map(|p| Ok((read(p)?, p.display().to_string())))
        .collect::<Result<Vec<_>, Failure>>()?;
    parse_models(sources.iter().map(|(s, o)| (s.as_str(), o.as_str())))
        .map_err(|d| Failure::diagnostics(&d))
}

fn build(models: &Models) -> Result<(RequirementModel, Application), Failure> {
    let model = load_model(models)?;
    let app = generate_application(&model).map_err(|d| Failure::diagnostics(&d))?;
    Ok((model, app))
}

fn cmd_check(models: &Models) -> CmdResult {
    let model = load_model(models)?;
    println!(
        "ok: {} entities, {} services, {} contracts",
        model.entities.len(),
        model.services.len(),
        model.contracts.len()
    );
    Ok(())
}

fn cmd_compile(models: &Models, out: &Path, emit_ir: bool, actions: bool) -> CmdResult {
    let (_, app) = build(models)?;
    let io = |e: std::io::Error| Failure::new(EXIT_IO, format!("{}: {e}", out.display()));
    write_listings(&app, out).map_err(io)?;
    for s in &app.services {
        for u in &s.units {
            let base = out.join(&s.name).join(u.operation());
            if emit_ir {
                std::fs::write(base.with_extension("ir"), render_ir(u)).map_err(io)?;
            }
            if actions {
                std::fs::write(base.with_extension("actions"), dump_actions(&u.contract))
                    .map_err(io)?;
            }
        }
    }
    println!(
        "wrote {} listings to {}",
        app.units().count(),
        out.display()
    );
    Ok(())
}

fn print_value(store: &EntityStore, v: &Value) {
    println!("{v}");
    let ids = match v {
        Value::Object(id) => vec![*id],
        Value::Set(ids) => ids.clone(),
        _ => return,
    };
    for id in ids {
        if let Some(rec) = store.get(id) {
            let mut line = String::new();
            render_record(store, rec, &mut line);
            println!("  {line}");
        }
    }
}

fn cmd_run(
    models: &Models,
    store_path: &Path,
    init_empty: bool,
    op: &str,
    raw_inputs: &[String],
    today: i64,
) -> CmdResult {
    let (_, app) = build(models)?;
    let unit = app
        .unit(op)
        .ok_or_else(|| Failure::new(EXIT_MODEL, format!("unknown operation `{op}`")))?;

    let usage = || {
        format!(
            "usage: --op {op} --in {}",
            unit.signature
                .inputs
                .iter()
                .map(|p| format!("{}=<{}>", p.name, p.ty))
                .collect::<Vec<_>>()
                .join(" ")
        )
    };
    let mut inputs: Vec<(String, Value)> = Vec::new();
    for raw in raw_inputs {
        let (name, text) = raw.split_once('=').ok_or_else(|| {
            Failure::new(
                EXIT_MODEL,
                format!("`{raw}` is not name=value\n{}", usage()),
            )
        })?;
        let param = unit
            .signature
            .inputs
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| {
                Failure::new(
                    EXIT_MODEL,
                    format!("`{op}` has no input `{name}`\n{}", usage()),
                )
            })?;
        if inputs.iter().any(|(n, _)| n == name) {
            return Err(Failure::new(
                EXIT_MODEL,
                format!("input `{name}` given twice"),
            ));
        }
        let v = parse_input_value(&param.ty, text, &app.schema)
            .map_err(|m| Failure::new(EXIT_MODEL, format!("input `{name}`: {m}")))?;
        inputs.push((name.to_string(), v));
    }
    if inputs.len() != unit.signature.inputs.len() {
        return Err(Failure::new(
            EXIT_MODEL,
            format!(
                "`{op}` takes {} inputs, {} given\n{}",
                unit.signature.inputs.len(),
                inputs.len(),
                usage()
            ),
        ));
    }

    let mut store = if init_empty && !store_path.exists() {
        EntityStore::new(app.schema.clone())
    } else {
        load_store(store_path, app.schema.clone()).map_err(|e| Failure::store(store_path, e))?
    };
    let result = execute(unit, &mut store, &inputs, today);
    match result.outcome {
        Outcome::Success => {
            save_store(&store, store_path).map_err(|e| Failure::store(store_path, e))?;
            print_value(&store, &result.value);
            Ok(())
        }
        Outcome::PreconditionFailure {
            operation,
            clause,
            span,
        } => Err(Failure::new(
            EXIT_PRECONDITION,
            format!("{span}: precondition of `{operation}` not satisfied: {clause}"),
        )),
        Outcome::RuntimeFault(m) => Err(Failure::new(
            EXIT_FAULT,
            format!("runtime fault in `{op}`: {m}"),
        )),
    }
}

fn cmd_metrics(
    models: &Models,
    scenarios: Option<&Path>,
    store: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    let (model, app) = build(models)?;
    let scenarios = match scenarios {
        Some(p) => parse_scenarios(&read(p)?, &app)
            .map_err(|e| Failure::new(EXIT_MODEL, format!("{}:{e}", p.display())))?,
        None => Vec::new(),
    };
    let demo = match store {
        Some(p) => load_store(p, app.schema.clone()).map_err(|e| Failure::store(p, e))?,
        None => EntityStore::new(app.schema.clone()),
    };
    let csv = render_csv(&compute_metrics(&model, &app, &demo, &scenarios));
    match out {
        Some(p) => std::fs::write(p, csv)
            .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", p.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_dump_actions(models: &Models) -> CmdResult {
    let (_, app) = build(models)?;
    for u in app.units() {
        print!("{}", dump_actions(&u.contract));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { models } => cmd_check(models),
        Command::Compile {
            models,
            out,
            emit_ir,
            dump_actions,
        } => cmd_compile(models, out, *emit_ir, *dump_actions),
        Command::Run {
            models,
            store,
            init_empty,
            op,
            inputs,
            today,
        } => cmd_run(models, store, *init_empty, op, inputs, *today),
        Command::Metrics {
            models,
            scenarios,
            store,
            out,
        } => cmd_metrics(
            models,
            scenarios.as_deref(),
            store.as_deref(),
            out.as_deref(),
        ),
        Command::DumpActions { models } => cmd_dump_actions(models),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
