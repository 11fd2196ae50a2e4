//! Samples every state type and checks the join laws.

use ardt_locks::gen::LatticeType;

fn main() {
    for t in LatticeType::ALL {
        match t.check(1000, 1) {
            Ok(report) => println!("{t}: {report:?}"),
            Err(e) => println!("{t}: {e}"),
        }
    }
}
