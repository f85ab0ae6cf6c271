fn main() {
    std::process::exit(minkshoot::cli::run(std::env::args_os()));
}
