//! Driving a seeded experiment family through the harness API.
//!
//! Builds the same config the `ccup` CLI reads from TOML, runs the law
//! family, prints its checks, and writes the trace. Re-running with the
//! same seed reproduces the trace byte-for-byte apart from the two
//! volatile header lines, which `comparable_body` strips.
//!
//! Run with: `cargo run --example experiment_sweep`

use ccup::harness::{comparable_body, parse_trace, run_experiment, ExperimentConfig};

fn main() -> ccup::Result<()> {
    let config: ExperimentConfig = toml::from_str(
        r#"
            kind = "laws"
            seed = 42
            trials = 50

            [model_dims]
            content = 3
            latent = 4
            context = 5

            [parameters]
            lambda = 1.0
        "#,
    )
    .expect("inline config is well-formed");
    config.validate()?;
    println!("effective config: {}", config.echo());

    let trace = run_experiment(&config)?;
    for c in &trace.checks {
        println!(
            "check {}: {} ({})",
            c.name,
            if c.pass { "pass" } else { "fail" },
            c.detail
        );
    }
    println!(
        "{} rows, {} violations, verdict {}",
        trace.rows.len(),
        trace.violations.len(),
        if trace.pass() { "pass" } else { "fail" }
    );

    let rerun = run_experiment(&config)?;
    assert_eq!(
        comparable_body(&trace.render()),
        comparable_body(&rerun.render()),
        "same seed, same bytes"
    );
    println!("re-run reproduced the trace body exactly");

    let dir = std::env::temp_dir().join("ccup-example");
    std::fs::create_dir_all(&dir).ok();
    let path = dir.join("laws_42.trace");
    trace.write_to(&path)?;
    let parsed = parse_trace(&path)?;
    println!(
        "trace written to {} and parsed back: {} rows, pass = {}",
        path.display(),
        parsed.row_count,
        parsed.pass
    );
    Ok(())
}
