//! The modular surface `SL2(Z)\SL2(R)` with its Haar probability measure,
//! K-finite observables and character projections.

pub mod modular;
pub mod observable;
pub mod sampling;

pub use modular::{act, in_domain, reduce, ActionPoint, Unimodular};
pub use observable::{
    chi_project, integrate, kfinite_decompose, Integrability, Integral, Observable,
};
pub use sampling::{ks_two_sample, sample, KsResult, SampleSet};
