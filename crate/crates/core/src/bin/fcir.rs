fn main() {
    std::process::exit(fcir::cli::dispatch(std::env::args_os()));
}
