fn main() {
    std::process::exit(actuator_forge::cli::run(std::env::args_os()));
}
