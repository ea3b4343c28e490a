use linalign::verify::{run_verification, VerifyConfig};

use crate::args::VerifyArgs;
use crate::exit::{to_json, write_file, CmdResult, Failure};
use crate::manifest::RunManifest;

pub fn run(args: &VerifyArgs, argv: &[String]) -> CmdResult {
    let cfg = VerifyConfig {
        instances: args.instances,
        dims: args.dims.clone(),
        ps: args.ps.clone(),
        tol: args.tol,
        min_cosine: args.min_cosine,
        seed: args.seed,
        fault: args.inject_fault.map(Into::into),
    };
    let report = run_verification(&cfg)?;
    print!("{}", report.summary());

    if let Some(path) = &args.report {
        write_file(path, &to_json(&report))?;
    }
    if let Some(path) = &args.manifest {
        RunManifest::new("verify", argv, &cfg, cfg.seed, "none").write(path)?;
    }
    if report.passed() {
        Ok(())
    } else {
        let seeds: Vec<String> = report.failures().map(|r| r.seed.to_string()).collect();
        Err(Failure::Check(format!(
            "{} of {} instances failed (seeds {})",
            seeds.len(),
            report.results.len(),
            seeds.join(", ")
        )))
    }
}
