fn main() {
    std::process::exit(incentive_games::cli::run(std::env::args_os()));
}
