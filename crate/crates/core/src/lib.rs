pub mod channel;
pub mod curriculum;
pub mod gateway;
pub mod harness;
pub mod learners;
pub mod session;
pub mod tasks;
pub mod world;
