use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tubedse_cli::{
    cmd_check, cmd_counterexample, cmd_phi, cmd_quasilinear, cmd_solve, cmd_trees, cmd_tubings, load_spec,
    Binding, Check, CliError, CliResult, Format, Outcome, PhiMethod, SolveMethod, SpecSource,
};

/// Exact solver and verifier for single-scale Dyson-Schwinger equations.
#[derive(Parser)]
#[command(name = "tubedse", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json, global = true)]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Path to a spec JSON file.
    #[arg(long, conflicts_with = "inline")]
    spec: Option<String>,
    /// Spec JSON given inline.
    #[arg(long)]
    inline: Option<String>,
}

impl SpecArgs {
    fn source(&self) -> Option<SpecSource> {
        match (&self.spec, &self.inline) {
            (Some(p), _) => Some(SpecSource::Path(p.clone())),
            (None, Some(s)) => Some(SpecSource::Inline(s.clone())),
            _ => None,
        }
    }

    fn required(&self) -> CliResult<SpecSource> {
        self.source()
            .ok_or_else(|| CliError::Config("a spec is required (--spec or --inline)".into()))
    }
}

#[derive(Args, Clone, Copy)]
struct BindArgs {
    /// Bind Mellin coefficients to seeded random rationals.
    #[arg(long, requires = "seed", conflicts_with = "symbolic")]
    bind_random: bool,
    /// Seed for --bind-random.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep Mellin coefficients symbolic (the default).
    #[arg(long)]
    symbolic: bool,
}

impl BindArgs {
    fn binding(&self) -> Binding {
        match (self.bind_random, self.seed) {
            (true, Some(s)) => Binding::Random(s),
            _ => Binding::Symbolic,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// List trees with nonzero weight up to the spec order.
    Trees {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Enumerate the binary tubings of a tree.
    Tubings {
        #[arg(long)]
        tree: String,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        bind: BindArgs,
        /// Include the tubes of every tubing.
        #[arg(long)]
        emit_tubes: bool,
        /// Include summary statistics.
        #[arg(long)]
        stats: bool,
    },
    /// Evaluate the Feynman rules on a tree.
    Phi {
        #[arg(long)]
        tree: String,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        bind: BindArgs,
        #[arg(long, value_enum, default_value_t = PhiArg::Tubing)]
        method: PhiArg,
    },
    /// Solve a Dyson-Schwinger system.
    Solve {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        bind: BindArgs,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value_t = SolveArg::Tubing)]
        method: SolveArg,
    },
    /// Verify an identity on a spec.
    Check {
        #[arg(value_enum)]
        which: CheckArg,
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        bind: BindArgs,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Reduce a quasi-linear spec to a single-place linear one.
    Quasilinear {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        bind: BindArgs,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Two places against one: matching Mellin coefficients and the obstruction.
    Counterexample {
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiArg {
    Tubing,
    Recursive,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveArg {
    Oracle,
    Tubing,
    Recursive,
    Combinatorial,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Rge,
    Gamma,
    Rio,
    Cocycle,
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Trees { spec, order } => cmd_trees(&load_spec(&spec.required()?, *order, Binding::Symbolic)?),
        Command::Tubings {
            tree,
            spec,
            bind,
            emit_tubes,
            stats,
        } => cmd_tubings(tree, spec.source().as_ref(), bind.binding(), *emit_tubes, *stats),
        Command::Phi {
            tree,
            spec,
            bind,
            method,
        } => {
            let m = match method {
                PhiArg::Tubing => PhiMethod::Tubing,
                PhiArg::Recursive => PhiMethod::Recursive,
            };
            cmd_phi(tree, spec.source().as_ref(), bind.binding(), m)
        }
        Command::Solve {
            spec,
            bind,
            order,
            method,
        } => {
            let m = match method {
                SolveArg::Oracle => SolveMethod::Oracle,
                SolveArg::Tubing => SolveMethod::Tubing,
                SolveArg::Recursive => SolveMethod::Recursive,
                SolveArg::Combinatorial => SolveMethod::Combinatorial,
            };
            cmd_solve(&load_spec(&spec.required()?, *order, bind.binding())?, m)
        }
        Command::Check {
            which,
            spec,
            bind,
            order,
        } => {
            let c = match which {
                CheckArg::Rge => Check::Rge,
                CheckArg::Gamma => Check::Gamma,
                CheckArg::Rio => Check::Rio,
                CheckArg::Cocycle => Check::Cocycle,
            };
            cmd_check(&load_spec(&spec.required()?, *order, bind.binding())?, c)
        }
        Command::Quasilinear { spec, bind, order } => {
            cmd_quasilinear(&load_spec(&spec.required()?, *order, bind.binding())?)
        }
        Command::Counterexample { order } => cmd_counterexample(*order),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("TUBEDSE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("TUBEDSE_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Text => Format::Text,
    };
    match configure_threads().and_then(|_| run(&cli)) {
        Ok(out) => {
            print!("{}", out.render(format));
            if out.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            match format {
                Format::Json => eprintln!("{}", e.to_json()),
                Format::Text => eprintln!("error ({}): {e}", e.kind()),
            }
            ExitCode::from(2)
        }
    }
}
