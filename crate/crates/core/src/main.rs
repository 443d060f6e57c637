use std::io::Write;

fn main() {
    let run = lticlass::cli::main_with_args(std::env::args_os());
    let _ = std::io::stdout().lock().write_all(run.stdout.as_bytes());
    let _ = std::io::stderr().lock().write_all(run.stderr.as_bytes());
    std::process::exit(run.code);
}
