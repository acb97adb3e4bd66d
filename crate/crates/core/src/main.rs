fn main() {
    std::process::exit(hopsync::cli::main_with_args(std::env::args_os()));
}
