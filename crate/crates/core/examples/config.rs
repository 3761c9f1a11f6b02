//! Settings are layered: command-line flags over `CFEXPLAIN_*` environment
//! variables over a TOML file over built-in defaults.
//!
//! ```text
//! CFEXPLAIN_SPARSITY_CAP=2 cargo run -p cfexplain --example config
//! ```

use cfexplain::config::resolve;
use cfexplain::ConfigLayer;

const FILE: &str = r#"
sparsity_cap = 1
temporality_sentinel_ms = 86400000

[weights]
sparsity = 0.4
temporality = 0.2
proximity = 0.2
abnormality = 0.2
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let env = ConfigLayer::from_env(std::env::vars())?;
    let flags = ConfigLayer { sparsity_primary: Some(false), ..Default::default() };
    let settings = resolve(Some(FILE), env, flags)?;
    println!("{}", serde_json::to_string_pretty(&settings)?);

    let bad = ConfigLayer::from_env([("CFEXPLAIN_WEIGHTS", "0.5,0.5,0.5,0.5")])?;
    if let Err(e) = resolve(None, bad, ConfigLayer::default()) {
        println!("rejected: {e}");
    }
    Ok(())
}
