use thiserror::Error;

use crate::dots::Uid;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid replica id {0:?}: expected non-empty printable ASCII without ':', '/' or ','")]
    InvalidUid(String),
    #[error("dot {0} is in the store but not in the causal context")]
    DotOutsideContext(String),
    #[error("replica {0} is not a member of the voting group")]
    NotMember(Uid),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
