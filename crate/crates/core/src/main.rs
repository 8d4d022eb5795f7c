use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = cpmmd::cli::Cli::parse();
    let result = cpmmd::cli::run(cli);
    if let Ok(m) = &result {
        for p in &m.outputs {
            println!("wrote {}", p.display());
        }
    }
    std::process::exit(cpmmd::cli::exit_code(&result));
}
