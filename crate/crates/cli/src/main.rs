//! `decrescence` command-line tool.
//!
//! Exit status: 0 success, 1 a checked inequality failed, 2 bad arguments or
//! unparsable input, 3 the model violates a precondition, 4 a numerical
//! method did not converge.

mod args;
mod commands;
mod render;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, OutArgs};
use render::{emit, Reply};

fn run(cli: Cli) -> Result<(Reply, OutArgs), decrescence::Error> {
    use commands as c;
    Ok(match cli.command {
        Command::Validate { net, out } => (c::validate(&c::load(&net)?)?, out),
        Command::Gains(a) => {
            let reply = c::gains(&c::load(&a.net)?, &a)?;
            if let (Some(script), Some(data)) = (&a.plot_script, &a.out.output) {
                let text = c::gains_plot_script(&a, data)?;
                render::write_atomic(script, &text).map_err(|e| {
                    decrescence::Error::InvalidArgument(format!("{}: {e}", script.display()))
                })?;
            }
            (reply, a.out)
        }
        Command::Sweep(a) => (c::sweep(&c::load(&a.net)?, &a)?, a.out),
        Command::Cutsets(a) => (c::cutsets(&c::load(&a.net)?, &a)?, a.out),
        Command::Freq(a) => (c::freq(&c::load(&a.net)?, &a)?, a.out),
        Command::Markov(a) => (c::markov(&c::load(&a.net)?, &a)?, a.out),
        Command::Simulate(a) => (c::simulate_cmd(&c::load(&a.net)?, &a)?, a.out),
        Command::Verify(a) => (c::verify(&a)?, a.out),
        Command::Snr(a) => (c::snr(&c::load(&a.net)?, &a)?, a.out),
        Command::Propstab(a) => (c::propstab(&c::load(&a.net)?, &a)?, a.out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((reply, out)) => {
            if let Err(e) = emit(&out, &reply.render(out.format)) {
                eprintln!("error: writing output: {e}");
                return ExitCode::from(2);
            }
            ExitCode::from(reply.exit)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
