fn main() {
    std::process::exit(qincompat::cli::run(std::env::args_os()));
}
