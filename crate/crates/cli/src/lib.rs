//! `aeff`: check, run and serve programs of the asynchronous effects
//! calculus.

pub mod server;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use aeff_core::parser::{parse_module, parse_value};
use aeff_core::process::{leaf_statuses, proc_result_status, Event, Injection, ProcResultStatus, StopReason};
use aeff_core::seq::{FirstScheduler, RandomScheduler, ScriptedScheduler};
use aeff_core::session::{script_of, Action};
use aeff_core::{check_module, CheckedModule, Machine, Scheduler};
use clap::{Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SERVE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "aeff", version, about = "Asynchronous algebraic effects: checker, stepper and stepping server")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Typecheck a program and print the type of every definition.
    Check { file: PathBuf },
    /// Run a program's main process.
    Run(RunArgs),
    /// Serve the stepping protocol over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory with the browser front end.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Minutes of inactivity before a session is dropped.
        #[arg(long, default_value_t = 30)]
        idle_minutes: u64,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SchedulerKind {
    /// Always the first redex in enumeration order.
    Fifo,
    /// Uniform choice from a seeded ChaCha8 generator.
    Random,
    /// Ask on standard input.
    Interactive,
}

#[derive(clap::Args, Debug)]
pub struct RunArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = SchedulerKind::Fifo)]
    pub scheduler: SchedulerKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub fuel: usize,
    /// Print one line per step.
    #[arg(long)]
    pub trace: bool,
    /// `op:payload@N` injects the interrupt immediately before step N.
    #[arg(long = "inject", value_name = "OP:PAYLOAD@N")]
    pub injections: Vec<String>,
    /// Replay a session log exported by the server (JSON array of actions).
    #[arg(long, conflicts_with_all = ["injections"])]
    pub replay: Option<PathBuf>,
    /// Print the final process.
    #[arg(long)]
    pub show_final: bool,
}

/// Entry point shared by the binary and the tests.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    match cli.command {
        Command::Check { file } => cmd_check(&file, out, err),
        Command::Run(args) => cmd_run(&args, out, err),
        Command::Serve { port, static_dir, idle_minutes } => {
            let config = server::ServerConfig {
                static_dir,
                idle_timeout: std::time::Duration::from_secs(idle_minutes * 60),
                ..server::ServerConfig::default()
            };
            server::serve_blocking(port, config, err)
        }
    }
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

/// Reads, parses and checks `path`, reporting failures on `err`.
fn load(path: &Path, err: &mut dyn Write) -> Result<CheckedModule, i32> {
    let src = std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "{}: {e}", file_label(path));
        EXIT_USAGE
    })?;
    let module = parse_module(&src).map_err(|e| {
        let _ = writeln!(err, "{}:{e}", file_label(path));
        EXIT_ERROR
    })?;
    check_module(&module).map_err(|errs| {
        for e in errs {
            let _ = writeln!(err, "{}", e.render(&file_label(path)));
        }
        EXIT_ERROR
    })
}

pub fn cmd_check(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let m = match load(path, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    for d in &m.defs {
        let _ = writeln!(out, "{} : {}", d.name, d.ty);
    }
    if let Some((_, ty)) = &m.main {
        let _ = writeln!(out, "main : {}", ty.render(&m.env));
    }
    EXIT_OK
}

/// Parses `op:payload@N`.
pub fn parse_injection(arg: &str) -> Result<Injection, String> {
    let (op, rest) = arg.split_once(':').ok_or_else(|| format!("`{arg}`: expected OP:PAYLOAD@N"))?;
    let (payload, at) = rest.rsplit_once('@').ok_or_else(|| format!("`{arg}`: expected OP:PAYLOAD@N"))?;
    let at = at.trim().parse().map_err(|_| format!("`{arg}`: step index `{at}` is not a number"))?;
    let payload = parse_value(payload).map_err(|e| format!("`{arg}`: payload {e}"))?;
    Ok(Injection { at, op: op.trim().to_string(), payload })
}

/// Prompts on standard error and reads choices from `input`.
pub struct InteractiveScheduler<R: BufRead> {
    input: R,
}

impl<R: BufRead> InteractiveScheduler<R> {
    pub fn new(input: R) -> Self {
        InteractiveScheduler { input }
    }
}

impl<R: BufRead> Scheduler for InteractiveScheduler<R> {
    fn choose(&mut self, count: usize, describe: &dyn Fn(usize) -> String) -> Option<usize> {
        let mut err = std::io::stderr();
        for i in 0..count {
            let _ = writeln!(err, "  [{i}] {}", describe(i));
        }
        loop {
            let _ = write!(err, "step (number, empty for 0, q to stop)> ");
            let _ = err.flush();
            let mut line = String::new();
            if self.input.read_line(&mut line).ok()? == 0 {
                return None;
            }
            match line.trim() {
                "" => return Some(0),
                "q" | "quit" => return None,
                s => match s.parse::<usize>() {
                    Ok(i) if i < count => return Some(i),
                    _ => {
                        let _ = writeln!(err, "expected a number below {count}");
                    }
                },
            }
        }
    }
}

fn read_replay(path: &Path) -> Result<(Vec<usize>, Vec<Injection>), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let actions: Vec<Action> = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    script_of(&actions).map_err(|e| format!("{}: payload {e}", path.display()))
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let m = match load(&args.file, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let Some((main, _)) = m.main.clone() else {
        let _ = writeln!(err, "{}: no main process to run", file_label(&args.file));
        return EXIT_ERROR;
    };
    let (mut scheduler, injections, fuel): (Box<dyn Scheduler>, Vec<Injection>, usize) = match &args.replay {
        Some(path) => match read_replay(path) {
            Ok((choices, injections)) => {
                let fuel = choices.len().min(args.fuel);
                (Box::new(ScriptedScheduler::new(choices)), injections, fuel)
            }
            Err(e) => {
                let _ = writeln!(err, "{e}");
                return EXIT_USAGE;
            }
        },
        None => {
            let mut injections = Vec::new();
            for arg in &args.injections {
                match parse_injection(arg) {
                    Ok(i) => injections.push(i),
                    Err(e) => {
                        let _ = writeln!(err, "--inject {e}");
                        return EXIT_USAGE;
                    }
                }
            }
            let s: Box<dyn Scheduler> = match args.scheduler {
                SchedulerKind::Fifo => Box::new(FirstScheduler),
                SchedulerKind::Random => Box::new(RandomScheduler::new(args.seed)),
                SchedulerKind::Interactive => Box::new(InteractiveScheduler::new(std::io::stdin().lock())),
            };
            (s, injections, args.fuel)
        }
    };
    for inj in &injections {
        match m.sig.payload(&inj.op) {
            None => {
                let _ = writeln!(err, "--inject: unknown interrupt `{}`", inj.op);
                return EXIT_ERROR;
            }
            Some(ty) if !aeff_core::typecheck::value_has_ground_type(&inj.payload, ty) => {
                let _ = writeln!(err, "--inject: payload of `{}` must have type {ty}", inj.op);
                return EXIT_ERROR;
            }
            Some(_) => {}
        }
    }
    let mut machine = Machine::new(main);
    let trace = args.trace;
    let mut on_event = |e: &Event| {
        let _ = match e {
            Event::Step { index, redex } if trace => writeln!(out, "{} {}", index + 1, redex),
            Event::Injected { before_step, op, payload } => {
                writeln!(out, "inject {op} {payload} before step {}", before_step + 1)
            }
            Event::Signal { op, payload } => writeln!(out, "signal {op} {payload}"),
            _ => Ok(()),
        };
    };
    let run = machine.run(scheduler.as_mut(), fuel, &injections, &m.sig, &mut on_event);
    let run = match run {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "runtime error: {e}");
            return EXIT_ERROR;
        }
    };
    let status = proc_result_status(&machine.process);
    let stop = match run.stop {
        StopReason::Finished if status == ProcResultStatus::NotResult => "stuck",
        StopReason::Finished => "finished",
        StopReason::FuelExhausted => "fuel exhausted",
        StopReason::Stopped => "stopped",
    };
    let _ = writeln!(out, "{stop} after {} steps: {}", run.steps, status.label());
    for (i, s) in leaf_statuses(&machine.process).iter().enumerate() {
        let _ = writeln!(out, "  process {}: {}", i + 1, s.label());
    }
    if args.show_final {
        let _ = writeln!(out, "{}", machine.process);
    }
    if stop == "stuck" {
        EXIT_ERROR
    } else {
        EXIT_OK
    }
}
