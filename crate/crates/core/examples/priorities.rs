//! Strict priority levels sharing one port, and the effect of leaving a
//! flow's own alternatives out of its cross traffic.

use ncsynth::netmodel::{FlowEntry, InstanceFile, PriorityMode};
use ncsynth::objective::{CompiledObjective, ObjectiveSpec};
use ncsynth::ProblemInstance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = InstanceFile::new()
        .server("hi", "p", 0, 10.0, 0.5)
        .server("lo", "p", 1, 10.0, 0.5)
        .flow(FlowEntry::unicast("urgent", 2.0, 1.0, vec![vec!["hi"]]).priorities(&[0]))
        .flow(FlowEntry::unicast("bulk", 1.0, 3.0, vec![vec!["hi"]]).priorities(&[0, 1]))
        .priority_mode(PriorityMode::StrictLeftover);
    let inst = ProblemInstance::from_file(&f)?;

    for siblings in [true, false] {
        let spec = ObjectiveSpec {
            sibling_interference: siblings,
            ..ObjectiveSpec::average()
        };
        let obj = CompiledObjective::build(&inst, &spec, 1)?;
        println!("sibling interference {siblings}");
        for x in [[1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [1.0, 0.5, 0.5]] {
            let e = obj.evaluate(&x)?;
            println!(
                "  x {x:?}: urgent {:.4} bulk {:.4} objective {:.4}",
                e.flow_values[0], e.flow_values[1], e.objective
            );
        }
    }
    Ok(())
}
