fn main() {
    std::process::exit(crprolong_cli::run(std::env::args_os()));
}
