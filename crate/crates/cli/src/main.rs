fn main() {
    std::process::exit(lastzero_cli::run(std::env::args_os()));
}
