use std::process::ExitCode;

fn main() -> ExitCode {
    let env_seed = std::env::var("GCRM_SEED").ok();
    gcrm_cli::main_with_args(std::env::args_os(), env_seed.as_deref())
}
