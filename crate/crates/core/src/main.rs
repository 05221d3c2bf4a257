fn main() -> std::process::ExitCode {
    vds::cli::main()
}
