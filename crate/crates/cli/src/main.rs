fn main() {
    std::process::exit(prevalence_cli::run(std::env::args_os()));
}
