use std::io;

fn main() {
    let code = std::panic::catch_unwind(|| {
        let mut out = io::stdout().lock();
        let mut err = io::stderr().lock();
        vizqm::cli::run(std::env::args_os(), &mut out, &mut err)
    })
    .unwrap_or(vizqm::cli::EXIT_INTERNAL);
    std::process::exit(code);
}
