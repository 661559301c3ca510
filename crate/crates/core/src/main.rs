fn main() -> std::process::ExitCode {
    spe::cli::run()
}
