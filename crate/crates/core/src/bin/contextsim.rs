fn main() {
    std::process::exit(contextsim::cli::cli_main(std::env::args_os()));
}
