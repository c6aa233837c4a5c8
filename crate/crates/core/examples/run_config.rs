//! Drives a run from a config string, as the `callias` binary does, and
//! prints the result document.

use callias::cli::{parse_config, run};

const CONFIG: &str = r#"
[manifold]
kind = "line"
extent = [-8.0, 8.0]
spacing = 0.1

[family]
name = "arctan"
scale = 2.0
compact = [-2.0, 2.0]

[task]
kind = "sweep"
parameter = "scale"
values = [0.5, 1.0, 4.0]
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let resolved = parse_config(CONFIG)?;
    println!("defaulted: {}", resolved.defaulted.join(", "));
    let out = std::env::temp_dir().join("callias-example");
    let outcome = run(&resolved, &out, false)?;
    println!("{:?} (exit {})", outcome.status, outcome.status.exit_code());
    println!("{}", outcome.document_path.display());
    println!("{}", serde_json::to_string_pretty(&outcome.document.report)?);
    Ok(())
}
