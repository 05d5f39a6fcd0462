use std::process::ExitCode;

fn main() -> ExitCode {
    let mut stdout = std::io::stdout().lock();
    match qmetro_cli::run_cli(std::env::args_os().collect(), &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qmetro: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
