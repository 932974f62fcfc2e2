fn main() {
    std::process::exit(goldrank::report::cli::run_cli(std::env::args_os()));
}
