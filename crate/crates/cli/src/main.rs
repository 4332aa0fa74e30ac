fn main() {
    std::process::exit(ddid_cli::run(std::env::args_os()));
}
