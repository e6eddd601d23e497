//! Checks backpropagation against central finite differences on small
//! random networks and prints the size of the reference classifiers.

use fontcheck::classifier::{build_network, ClassifierKind};
use fontcheck::cli::selfcheck::{gradcheck_architectures, gradient_check};

fn main() {
    for (name, input, specs) in gradcheck_architectures() {
        for seed in 1..=3 {
            let c = gradient_check(name, input, &specs, seed);
            println!("{:<5} {} seed {seed}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
        }
    }
    for kind in [ClassifierKind::CType { m: 10 }, ClassifierKind::CPrime, ClassifierKind::Character { m: 10 }] {
        let net = build_network(kind);
        println!("{:<7} {} outputs, {} parameters", kind.name(), net.output_width(), net.param_count());
    }
}
