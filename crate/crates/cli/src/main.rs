use std::io;
use std::process::ExitCode;

use decoupling_cli::{main_with, BUDGET_ENV};

fn main() -> ExitCode {
    let env_budget = std::env::var(BUDGET_ENV).ok();
    let status = main_with(
        std::env::args_os(),
        env_budget.as_deref(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(status.code())
}
