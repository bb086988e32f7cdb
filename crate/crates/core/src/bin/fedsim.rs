fn main() {
    fedsim::cli::init_logging();
    std::process::exit(fedsim::cli::run(std::env::args_os()));
}
