use std::process::ExitCode;

use clap::Parser;
use coamoeba_cli::{run, CliError, Command, Flags};

#[derive(Parser)]
#[command(name = "coamoeba", version, about = "Amoebas, coamoebas and tropical spines of plane curves")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Usage(e.to_string().trim().to_string())),
    };
    let outcome = cli.flags.resolve().and_then(|cfg| run(cli.command, &cfg));
    match outcome {
        Ok(o) => {
            for path in &o.artifacts {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
