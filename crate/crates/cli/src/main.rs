fn main() {
    // no environment variables are consulted; warnings go to stderr
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let code = aqm_sim::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
