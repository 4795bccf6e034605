use clap::Parser;

use reluapprox_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let mut logger = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    if let Some(level) = &cli.log_level {
        logger.parse_filters(level);
    }
    logger.init();
    std::process::exit(run(cli));
}
