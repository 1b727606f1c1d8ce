fn main() {
    std::process::exit(dissector::cli::run(std::env::args_os()));
}
