fn main() -> std::process::ExitCode {
    cellpower::cli::main()
}
