//! Symbolic delay bounds compiled to a tape, with exact gradients checked
//! against finite differences.

use std::path::Path;

use ncsynth::adgraph::compile;
use ncsynth::cli::load_instance;
use ncsynth::minplus::ExprArena;
use ncsynth::objective::{CompiledObjective, ObjectiveSpec};
use ncsynth::sfa::{analyze_all, AnalysisOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/diamond.json");
    let inst = load_instance(&path, None)?;

    let mut arena = ExprArena::new();
    let terms = analyze_all(&inst, &mut arena, AnalysisOptions::default())
        .map_err(|e| format!("{e:?}"))?;
    let roots: Vec<_> = terms.iter().map(|t| t.expr).collect();
    let tape = compile(&arena, &roots, inst.var_count())?;
    println!("{} expression nodes, {} tape slots", arena.len(), tape.len());

    // split every flow evenly between its two paths
    let x = vec![0.5; inst.var_count()];
    let pass = tape.forward(&x)?;
    for (t, d) in terms.iter().zip(pass.outputs()) {
        println!("vf {} depends on {:?}: {d:.4}", t.vf, t.vars);
    }

    let obj = CompiledObjective::build(&inst, &ObjectiveSpec::average(), 1)?;
    let (f, g) = obj.objective_gradient(&x)?;
    println!("objective {f:.6}");
    let h = 1e-6;
    for (i, gi) in g.iter().enumerate() {
        let (mut up, mut down) = (x.clone(), x.clone());
        up[i] += h;
        down[i] -= h;
        let fd = (obj.evaluate(&up)?.objective - obj.evaluate(&down)?.objective) / (2.0 * h);
        println!("  d/dx{i}: tape {gi:+.6}  central difference {fd:+.6}");
    }
    Ok(())
}
