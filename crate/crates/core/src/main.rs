fn main() {
    env_logger::init();
    let mut out = std::io::stdout().lock();
    if let Err(e) = rsi_core::cli::run(std::env::args_os(), &mut out) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
