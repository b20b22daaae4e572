fn main() {
    std::process::exit(powercvx::cli::run(std::env::args_os()));
}
