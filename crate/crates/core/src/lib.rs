//! Discrete-event simulator for a VANET trust-management framework.
//!
//! The proposed protocol enforces honesty at the sender: every vehicle
//! carries a tamper-proof device (TPD) that keeps a per-driver trust score,
//! gates what the vehicle may transmit, withholds announcement rewards
//! against complaints, and ultimately blocks drivers the trust authority
//! rules malicious. Roadside units arbitrate disputed announcements with a
//! trust-weighted clarifier vote, escalating ties to official vehicles.
//!
//! A receiver-side reputation baseline (buffered claims, periodic reputation
//! broadcasts) is implemented alongside for side-by-side comparison of
//! decision accuracy, channel overhead, and reaction latency.

pub mod agents;
pub mod authority;
pub mod baseline;
pub mod geom;
pub mod gt;
pub mod ids;
pub mod kernel;
pub mod logs;
pub mod message;
pub mod metrics;
pub mod presets;
pub mod road;
pub mod rsu;
pub mod runner;
pub mod scenario;
pub mod time;
pub mod trust;
pub mod world;
