fn main() {
    std::process::exit(fairslice::cli::run(std::env::args_os()));
}
