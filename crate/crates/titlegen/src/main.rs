fn main() -> std::process::ExitCode {
    titlegen::cli::run(std::env::args_os(), |k| std::env::var(k).ok())
}
