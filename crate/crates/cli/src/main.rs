use clap::Parser;
use sqclock_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(manifest) => {
            for f in &manifest.files {
                println!("wrote {}", cli.out.join(f).display());
            }
        }
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            std::process::exit(e.exit_code());
        }
    }
}
