//! Per-flow delay bounds of one integral routing, from the library and
//! through the command-line entry point.

use std::path::Path;

use ncsynth::cli::{analyze, load_instance, run_from};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/diamond.json");
    let inst = load_instance(&path, None)?;

    // everyone on the fast branch, then backup moved to the slow one
    for chosen in [vec![0, 2, 4], vec![0, 3, 4]] {
        println!("variables {chosen:?}");
        for c in analyze(&inst, &chosen)? {
            println!("  {:<8} alt {}  {:.4}", c.flow, c.alternative, c.delay_bound.unwrap());
        }
    }

    let code = run_from(
        ["ncsynth", "analyze", path.to_str().unwrap()],
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    println!("exit code {code}");
    Ok(())
}
