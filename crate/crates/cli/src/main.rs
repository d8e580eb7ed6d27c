fn main() {
    fraclog_cli::configure_threads();
    let code = fraclog_cli::run(
        std::env::args_os(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
