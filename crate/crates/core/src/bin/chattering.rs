fn main() -> std::process::ExitCode {
    chattering::cli::main()
}
