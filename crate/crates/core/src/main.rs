fn main() -> std::process::ExitCode {
    dumbbell::cli::main()
}
