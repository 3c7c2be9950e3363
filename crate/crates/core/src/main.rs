fn main() {
    std::process::exit(mixmeas::cli::run(std::env::args_os()));
}
