fn main() {
    std::process::exit(rollover::cli::main_with(std::env::args_os()));
}
