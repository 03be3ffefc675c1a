fn main() {
    std::process::exit(cosserat_shell::cli::run(std::env::args_os()));
}
