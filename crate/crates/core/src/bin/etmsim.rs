fn main() {
    env_logger::init();
    std::process::exit(etmsim::cli::run(std::env::args_os()));
}
