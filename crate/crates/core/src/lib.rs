pub mod special;
pub mod model;
pub mod quadrature;
pub mod rs;
pub mod critical;
pub mod cole_hopf;
pub mod one_rsb;
pub mod sturm;
pub mod lemmas;
pub mod phase;
