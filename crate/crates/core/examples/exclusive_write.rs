//! Lock-guarded writes: a shared log and a map of independently locked
//! resources.

use ardt_locks::dots::Uid;
use ardt_locks::excl::{EpochLog, Excl, ResourceMapA};
use ardt_locks::lattice::Lattice;
use ardt_locks::protocol::Token;

fn main() {
    let (a, b) = (Uid::new("a").unwrap(), Uid::new("b").unwrap());

    let mut log: Excl<Token, EpochLog> = Excl::new(Token::with_owner(0, a.clone()), EpochLog::default());
    let write = log.transform(&(), &a, |_| EpochLog::entry(0, a.clone()));
    log.merge_in(&write);
    let ignored = log.transform(&(), &b, |_| EpochLog::entry(0, b.clone()));
    println!("b writes without the lock, delta is bottom: {}", ignored.is_bottom());

    let ask = log.request(&(), &b).unwrap();
    log.merge_in(&ask);
    let handover = log.upkeep(&(), &a).unwrap();
    log.merge_in(&handover);
    let epoch = log.lock.os.epoch;
    let write = log.transform(&(), &b, |_| EpochLog::entry(epoch, b.clone()));
    log.merge_in(&write);
    for e in &log.value.entries {
        println!("epoch {} written by {}", e.epoch, e.writer);
    }

    let mut map: ResourceMapA<Token, EpochLog> = ResourceMapA::bottom();
    for (res, owner) in [("disk", &a), ("net", &b)] {
        let lock = ResourceMapA::at(res, Excl::new(Token::with_owner(0, owner.clone()), EpochLog::default()));
        map.merge_in(&lock);
        let write = map.transform(res, &(), owner, |_| EpochLog::entry(0, owner.clone()));
        map.merge_in(&write);
    }
    for (res, entry) in &map.resources {
        println!("{res}: owner a {}, owner b {}", entry.is_owner(&(), &a), entry.is_owner(&(), &b));
    }
}
