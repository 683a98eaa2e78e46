fn main() {
    std::process::exit(stratclt::cli::run(std::env::args_os()));
}
