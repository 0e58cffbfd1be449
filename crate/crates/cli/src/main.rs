fn main() {
    std::process::exit(bandit_lab_cli::run(std::env::args_os()));
}
