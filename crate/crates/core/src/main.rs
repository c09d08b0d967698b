use clap::Parser;

use hydrotwin::cli::{exit_code, run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("HYDROTWIN_LOG_LEVEL", "warn"))
        .format_timestamp(None)
        .init();
    let result = run(Cli::parse());
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    std::process::exit(exit_code(&result));
}
