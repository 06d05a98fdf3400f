use clap::Parser;

fn main() {
    // Die quietly when a downstream pipe closes early (e.g. `... | head`),
    // matching standard Unix tool behavior instead of panicking on EPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = tablerag::cli::Cli::parse();
    match tablerag::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
