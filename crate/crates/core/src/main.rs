fn main() {
    std::process::exit(intcur::cli::run(std::env::args_os()));
}
