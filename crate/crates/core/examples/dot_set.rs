//! Two replicas editing an observed-remove set and exchanging deltas.

use ardt_locks::dots::{DotSet, Uid};
use ardt_locks::lattice::Lattice;

fn main() {
    let (a, b) = (Uid::new("a").unwrap(), Uid::new("b").unwrap());
    let mut left: DotSet<&str> = DotSet::new();
    let mut right: DotSet<&str> = DotSet::new();

    let add = left.add_elem("milk", &a);
    left.merge_in(&add);
    right.merge_in(&add);

    // a removes milk while b, unaware, adds it again.
    let remove = left.remove_elem(&"milk");
    left.merge_in(&remove);
    let again = right.add_elem("milk", &b);
    right.merge_in(&again);

    left.merge_in(&again);
    right.merge_in(&remove);
    println!("a sees {:?}", left.elements());
    println!("b sees {:?}", right.elements());
    assert_eq!(left, right);

    // Redelivery is harmless.
    println!("redelivered remove changes state: {}", right.merge_in(&remove));
}
