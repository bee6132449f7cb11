pub mod boxes;
pub mod conditioning;
pub mod correlation;
pub mod decomposition;
pub mod error;
pub mod freewill;
pub mod lp;
pub mod metrics;
pub mod rng;
pub mod singlet;
pub mod scalar;
pub mod srx;
