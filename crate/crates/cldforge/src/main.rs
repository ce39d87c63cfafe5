fn main() {
    std::process::exit(cldforge::cli::run(std::env::args_os()));
}
