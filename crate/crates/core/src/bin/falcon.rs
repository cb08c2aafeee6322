fn main() -> std::process::ExitCode {
    falcon::cli::main()
}
