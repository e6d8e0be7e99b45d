use clap::Parser;

use ghostimg::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("ghostimg: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
