use cavp_core::error::Error;
use cavp_core::train::run_full_suite;
use cavp_core::Result;
use clap::Args;

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Base seed for the random instances
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Central-difference step
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    /// Relative-error tolerance
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Random instances per check
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    /// Negative control: corrupt one gradient and expect the suite to fail
    #[arg(long, default_value_t = false)]
    pub inject_fault: bool,
}

pub fn run(args: GradcheckArgs) -> Result<()> {
    let report = run_full_suite(args.seed, args.seeds, args.eps, args.tol, args.inject_fault)?;
    let mut worst_line = String::new();
    for o in &report.outcomes {
        println!(
            "{:<32} max rel err {:.3e}  {}",
            o.name,
            o.max_rel_err,
            if o.passed { "ok" } else { "FAIL" }
        );
        if o.max_rel_err >= report.worst() {
            worst_line = o.name.clone();
        }
    }
    println!(
        "worst: {} ({:.3e}), tolerance {:.1e}",
        worst_line,
        report.worst(),
        report.tol
    );
    if !report.passed() {
        return Err(Error::Numerical(format!(
            "gradient check failed; worst relative error {:.3e}",
            report.worst()
        )));
    }
    Ok(())
}
