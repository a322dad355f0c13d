//! Every optimization method on one small instance, next to the exhaustive
//! optimum.

use std::path::Path;

use ncsynth::cli::load_instance;
use ncsynth::gen::{enumerate, EnumerateOptions};
use ncsynth::objective::{CompiledObjective, ObjectiveSpec};
use ncsynth::optim::{run_method, Method};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/diamond.json");
    let inst = load_instance(&path, None)?;
    let mut obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1)?;

    let best = enumerate(&inst, &obj, &EnumerateOptions::default())?;
    println!("{:<22}{:>12}  {:?}", "enumerate", format!("{:.6}", best.objective), best.chosen);
    for m in Method::ALL {
        let r = run_method(m, &inst, &mut obj, 1, 200)?;
        let v = r.objective.map_or("-".into(), |v| format!("{v:.6}"));
        println!(
            "{:<22}{v:>12}  {:?} feasible={} evaluations={}",
            m.name(),
            r.chosen,
            r.feasible,
            r.evaluations
        );
    }
    Ok(())
}
