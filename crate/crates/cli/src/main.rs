use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = flyq_cli::run_cli(flyq_cli::Cli::parse());
    std::process::exit(code);
}
