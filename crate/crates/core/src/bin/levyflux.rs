fn main() -> std::process::ExitCode {
    levyflux::cli::main()
}
