use std::path::PathBuf;
use std::process::ExitCode;

use amred_cli::config::{
    ArraySource, ExperimentConfig, Format, Mode, ScheduleSpec, Schedules, Signs,
};
use amred_cli::figures::{figure, FigureId};
use amred_cli::run::run;
use amred_core::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "amred",
    version,
    about = "Amplitude-reduction search experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nearest-value search with a single rotation pass.
    Search(RunArgs),
    /// Drive the counter of one value to probability zero.
    Filter(RunArgs),
    /// Iterated reload on the density-matrix engine.
    Iterate(RunArgs),
    /// Exact-match search using the matching element as an amplitude buffer.
    NullElement(RunArgs),
    /// Rotate, measure, rotate again without reloading, measure.
    Decoherence(RunArgs),
    /// Run the canonical configuration of one figure.
    Figure(FigureArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    array: Option<Vec<u64>>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    target: Option<u64>,
    #[arg(long)]
    exclude: Option<u64>,
    /// Preset name or comma-separated π-multiples; repeat for per-iteration schedules.
    #[arg(long, conflicts_with = "preset")]
    schedule: Vec<String>,
    /// Named schedule: default, highest-bit-pi or exact-match.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum)]
    signs: Option<Signs>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    cycles: Option<u32>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct FigureArgs {
    /// fig4, fig5, fig6, fig8, fig10, fig11, fig12, fig14 or fig15.
    id: String,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl RunArgs {
    fn overrides(&self, mode: Mode) -> ExperimentConfig {
        let mut specs: Vec<ScheduleSpec> = self
            .schedule
            .iter()
            .map(|s| ScheduleSpec::parse(s))
            .collect();
        if let Some(p) = &self.preset {
            specs.push(ScheduleSpec::Preset(p.clone()));
        }
        let schedule = match specs.len() {
            0 => None,
            1 => specs.pop().map(Schedules::One),
            _ => Some(Schedules::Many(specs)),
        };
        ExperimentConfig {
            mode: Some(mode),
            array: self.array.clone().map(ArraySource::List),
            bits: self.bits,
            m: self.m,
            target: self.target,
            exclude: self.exclude,
            schedule,
            signs: self.signs,
            iterations: self.iterations,
            cycles: self.cycles,
            shots: self.shots,
            seed: self.seed,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            format: self.format,
        }
    }

    fn execute(&self, mode: Mode) -> Result<()> {
        let base = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let config = base.merge(self.overrides(mode));
        let resolved = config.resolve()?;
        let report = run(&resolved)?;
        report.write(
            resolved.format,
            config.out.as_deref().map(std::path::Path::new),
        )
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Search(a) => a.execute(Mode::Search),
        Command::Filter(a) => a.execute(Mode::Filter),
        Command::Iterate(a) => a.execute(Mode::Iterate),
        Command::NullElement(a) => a.execute(Mode::NullElement),
        Command::Decoherence(a) => a.execute(Mode::Decoherence),
        Command::Figure(a) => FigureId::parse(&a.id)
            .and_then(|id| figure(id, a.shots, a.seed))
            .and_then(|report| report.write(a.format, a.out.as_deref())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("amred: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
