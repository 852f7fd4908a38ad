fn main() {
    std::process::exit(orbex::cli::run(std::env::args_os()));
}
