fn main() {
    std::process::exit(obstacle_lab::cli::main_with(std::env::args_os()));
}
