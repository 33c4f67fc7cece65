fn main() {
    std::process::exit(rase_cli::run(std::env::args_os()));
}
