use std::process::ExitCode;

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        let msg = info.to_string().replace('\n', "; ");
        eprintln!("error[internal]: {msg}");
    }));
    let code = std::panic::catch_unwind(|| {
        let mut out = std::io::stdout().lock();
        let mut err = std::io::stderr().lock();
        postcarbon::cli::run_cli(std::env::args_os(), &mut out, &mut err)
    })
    .unwrap_or(3);
    ExitCode::from(code as u8)
}
