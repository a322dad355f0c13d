//! Utility and worst-case objectives in place of the mean delay.

use std::path::Path;

use ncsynth::cli::load_instance;
use ncsynth::gen::{enumerate, EnumerateOptions};
use ncsynth::objective::{CompiledObjective, ObjectiveSpec, UtilityTemplate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/diamond.json");
    let inst = load_instance(&path, None)?;

    let specs = [
        ("average", ObjectiveSpec::average()),
        ("max-tail", ObjectiveSpec::max_tail()),
        (
            "linear:1:3",
            ObjectiveSpec::utility("linear:1:3".parse::<UtilityTemplate>()?.resolve(&inst)?),
        ),
        (
            "logistic:4:2",
            ObjectiveSpec::utility("logistic:4:2".parse::<UtilityTemplate>()?.resolve(&inst)?),
        ),
    ];
    for (name, spec) in specs {
        let obj = CompiledObjective::build(&inst, &spec, 1)?;
        let best = enumerate(&inst, &obj, &EnumerateOptions::default())?;
        let e = obj.evaluate(&inst.one_hot(&best.chosen))?;
        let delays: Vec<String> = e.flow_values.iter().map(|d| format!("{d:.3}")).collect();
        println!(
            "{name:<13} best {:?} value {:.4} delays [{}]",
            best.chosen,
            best.objective,
            delays.join(", ")
        );
    }
    Ok(())
}
