fn main() -> std::process::ExitCode {
    ncsynth::cli::run()
}
