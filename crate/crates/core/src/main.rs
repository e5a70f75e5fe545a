fn main() {
    std::process::exit(charmt::cli::dispatch(std::env::args_os()));
}
