fn main() -> std::process::ExitCode {
    pinns::cli::main()
}
