fn main() -> std::process::ExitCode {
    rotmap::cli::main()
}
