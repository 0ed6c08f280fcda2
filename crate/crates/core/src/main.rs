fn main() {
    std::process::exit(sp2::cli::run(std::env::args_os()));
}
