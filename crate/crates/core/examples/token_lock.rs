//! Passing the token lock between three replicas by hand.

use ardt_locks::dots::Uid;
use ardt_locks::lattice::Lattice;
use ardt_locks::protocol::Token;

fn owner(state: &Token, ids: &[Uid]) -> String {
    ids.iter()
        .find(|id| state.is_owner(id))
        .map_or("nobody".into(), |id| id.to_string())
}

fn main() {
    let ids: Vec<Uid> = ["r1", "r2", "r3"].iter().map(|s| Uid::new(*s).unwrap()).collect();
    let mut state = Token::with_owner(0, ids[0].clone());
    println!("start: epoch {} owned by {}", state.os.epoch, owner(&state, &ids));

    for id in &ids[1..] {
        let delta = state.request(id);
        state.merge_in(&delta);
        println!("{id} requests");
    }

    for round in 0..3 {
        let holder = ids.iter().find(|id| state.is_owner(id)).cloned();
        let Some(holder) = holder else { break };
        let delta = state.upkeep(&holder);
        if delta.is_bottom() {
            println!("{holder} keeps the lock");
            break;
        }
        state.merge_in(&delta);
        println!("round {round}: {holder} hands over, epoch {} owned by {}", state.os.epoch, owner(&state, &ids));
        let release = state.release(&ids.iter().find(|id| state.is_owner(id)).unwrap().clone());
        state.merge_in(&release);
    }
}
