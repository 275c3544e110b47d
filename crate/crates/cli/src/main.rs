use clap::Parser;
use qmetric_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qmetric: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
