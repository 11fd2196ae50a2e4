//! A voting round among five members, including a split vote.

use ardt_locks::dots::Uid;
use ardt_locks::lattice::Lattice;
use ardt_locks::protocol::{Membership, MutexProtocol, Voting};

fn main() {
    let ids: Vec<Uid> = ["ann", "bob", "cat", "dan", "eve"].iter().map(|s| Uid::new(*s).unwrap()).collect();
    let members = Membership::new(ids.iter().cloned());
    println!("{} members, {} votes to win", members.len(), members.threshold());

    // Everyone stands for election at once: a five-way split.
    let mut state = Voting::bottom();
    let bids: Vec<Voting> = ids
        .iter()
        .map(|id| MutexProtocol::request(&state, &members, id).unwrap())
        .collect();
    for bid in &bids {
        state.merge_in(bid);
    }
    println!("round {}: tally {:?}", state.round(), state.tally());
    println!("majority impossible: {}", state.majority_impossible(&members));

    let next = MutexProtocol::upkeep(&state, &members, &ids[0]).unwrap();
    state.merge_in(&next);
    println!("moved on to round {}", state.round());

    // Only dan asks this time; the others follow the leader.
    let bid = MutexProtocol::request(&state, &members, &ids[3]).unwrap();
    state.merge_in(&bid);
    for id in &ids {
        let vote = MutexProtocol::upkeep(&state, &members, id).unwrap();
        state.merge_in(&vote);
        if let Some(owner) = ids.iter().find(|o| state.is_owner(&members, o)) {
            println!("{owner} holds the lock after {id} votes");
            break;
        }
    }
}
