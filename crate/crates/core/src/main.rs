fn main() {
    std::process::exit(uniconsist::cli::cli_main(std::env::args_os()));
}
