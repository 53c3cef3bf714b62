//! Simulation of privacy-preserving federated learning for vehicle fleets,
//! coordinated through a permissioned ledger.
//!
//! The crate is organised as a stack of small modules:
//!
//! * [`canonical`]: canonical JSON bytes, SHA-256 hashing, and seed derivation
//! * [`fl`]: softmax model, local SGD, and weighted aggregation
//! * [`privacy`]: Gaussian mechanism, budget accounting, and a brute-force
//!   differential privacy checker for finite mechanisms
//! * [`ledger`]: hash-linked blocks, Merkle roots, authority voting, and gas
//! * [`netsim`]: discrete-event message transport with loss and delay
//! * [`incentive`]: contribution scoring and proportional rewards
//! * [`orchestrator`]: configuration, data handling, and the round loop that
//!   ties everything together
//!
//! Every run is reproducible: all randomness flows from one master seed
//! through ChaCha8 generators, and all serialized artifacts use canonical
//! JSON so identical runs produce identical bytes.

pub mod canonical;
pub mod fl;
pub mod incentive;
pub mod ledger;
pub mod netsim;
pub mod orchestrator;
pub mod privacy;
