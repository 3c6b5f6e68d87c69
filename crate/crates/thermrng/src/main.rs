fn main() -> std::process::ExitCode {
    thermrng::cli::main()
}
