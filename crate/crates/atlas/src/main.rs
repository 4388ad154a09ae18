fn main() -> std::process::ExitCode {
    atlas::cli::main_with_args(std::env::args_os())
}
