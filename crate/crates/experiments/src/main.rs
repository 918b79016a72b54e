fn main() {
    std::process::exit(nitsche_iga_experiments::cli::run(std::env::args_os()));
}
