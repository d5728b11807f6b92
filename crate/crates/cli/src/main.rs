fn main() {
    if let Err(e) = joma_cli::app::main_with(std::env::args_os()) {
        eprintln!("joma: {e}");
        std::process::exit(e.exit_code());
    }
}
