use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deform::pipeline::{self, EXIT_CONFIG};
use deform::sparse::init_parallelism;
use deform::verify::{run_suite, Suite};

#[derive(Parser)]
#[command(name = "deform", version, about = "Localized metric deformation with prescribed scalar and mean curvature")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one configuration and write summary.json plus field exports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding output.directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Nodes per axis, overriding domain.resolution.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Run the built-in property checks.
    Verify {
        /// operators, weights, solver, generic, iteration or all.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 33)]
        resolution: usize,
    },
    /// Write line-plot CSVs for a finished run under <run_dir>/plot.
    ExportPlotData { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_parallelism();
    let code = match cli.cmd {
        Cmd::Run { config, out, resolution } => {
            let outcome = pipeline::run(&config, out.as_deref(), resolution);
            let st = &outcome.summary.status;
            if outcome.exit_code == 0 {
                println!("{}: {}", st.code, outcome.out_dir.join("summary.json").display());
            } else {
                eprintln!("{}: {}", st.code, st.message);
            }
            outcome.exit_code
        }
        Cmd::Verify { suite, resolution } => match suite.parse::<Suite>().and_then(|s| run_suite(s, resolution)) {
            Ok(checks) => {
                println!("{:<10} {:<48} {:>12}  {:<22} result", "suite", "check", "measured", "bound");
                for c in &checks {
                    println!("{c}");
                }
                let failed = checks.iter().filter(|c| !c.pass).count();
                println!("{} checks, {failed} failed", checks.len());
                i32::from(failed > 0)
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
        Cmd::ExportPlotData { run_dir } => match pipeline::export_plot_data(&run_dir) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
