use clap::Parser;
use orbcorr_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
        }
        Err(e) => {
            eprintln!("orbcorr: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
