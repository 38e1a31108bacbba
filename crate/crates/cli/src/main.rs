use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wardchain::gridkit::{GridSpec, VoteModel};
use wardchain_cli::{cmd_grid, cmd_ingest, cmd_report, cmd_run_many, CliError};

#[derive(Parser)]
#[command(name = "wardchain", version, about = "Redistricting outlier test on a single-flip Markov chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a precinct geometry document into nodes.csv / edges.csv.
    Ingest {
        geometry: PathBuf,
        #[arg(long, env = "WARDCHAIN_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Run one trajectory per config file, in parallel.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Overrides `chain.rng_seed` in every config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to each config's own directory.
        #[arg(long, env = "WARDCHAIN_OUT_DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Render report files as one table.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        /// `bin_left,count` file to plot; the first report supplies the seed label.
        #[arg(long, requires = "svg")]
        histogram: Option<PathBuf>,
        #[arg(long, requires = "histogram")]
        svg: Option<PathBuf>,
    },
    /// Write a synthetic grid instance's nodes.csv and edges.csv.
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        districts: usize,
        /// Seeded random votes instead of an even split.
        #[arg(long)]
        vote_seed: Option<u64>,
        /// Group cells into square counties of this side.
        #[arg(long)]
        county_block: Option<usize>,
        /// Cells marked majority-minority.
        #[arg(long, value_delimiter = ',')]
        frozen: Vec<usize>,
        #[arg(long, env = "WARDCHAIN_OUT_DIR", default_value = ".")]
        out: PathBuf,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.code as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Ingest { geometry, out } => match cmd_ingest(&geometry, &out) {
            Ok(r) => {
                println!(
                    "precincts {} -> {} (islands merged) -> {} (parts split) -> {} (contained dissolved)",
                    r.initial_count, r.after_island_merge, r.after_split, r.after_dissolve
                );
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run { configs, seed, out_dir } => {
            let results = cmd_run_many(&configs, seed, out_dir.as_deref());
            let mut reports = Vec::new();
            let mut worst: Option<CliError> = None;
            for (path, r) in configs.iter().zip(results) {
                match r {
                    Ok(report) => {
                        println!("{}", report.table_row());
                        reports.push(report);
                    }
                    Err(e) => {
                        eprintln!("error: {}: {e}", path.display());
                        if worst.as_ref().is_none_or(|w| e.code > w.code) {
                            worst = Some(e);
                        }
                    }
                }
            }
            if reports.len() > 1 {
                println!();
                print!("{}", wardchain::outlier::render_table(&reports));
            }
            match worst {
                Some(e) => ExitCode::from(e.code as u8),
                None => ExitCode::SUCCESS,
            }
        }
        Command::Report { reports, histogram, svg } => match cmd_report(&reports, histogram.as_deref(), svg.as_deref()) {
            Ok(out) => {
                for w in &out.warnings {
                    eprintln!("warning: {w}");
                }
                print!("{}", out.table);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Grid { rows, cols, districts, vote_seed, county_block, frozen, out } => {
            let mut spec = GridSpec::new(rows, cols, districts);
            if let Some(s) = vote_seed {
                spec.votes = VoteModel::Seeded(s);
            }
            spec.county_block = county_block;
            spec.frozen = frozen;
            match cmd_grid(&spec, &out) {
                Ok(hash) => {
                    println!("graph {hash}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
