use std::io;

fn main() {
    let code = scenesync_core::harness::cli::cli_main(
        std::env::args_os(),
        &mut io::stdout(),
        &mut io::stderr(),
    );
    std::process::exit(code);
}
