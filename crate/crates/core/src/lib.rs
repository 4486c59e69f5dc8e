//! Quantum connection matrices of varieties from Gromov–Witten potential
//! data, their behaviour under products and base change, and the spectra
//! and atom proxies derived from them.
//!
//! The symbolic layers are generic over a [`Coefficient`] field and the
//! numeric layer over `num_traits::Float`. The aliases below fix the
//! reference choices: exact [`Rational`] coefficients and `f64` numerics.

#![allow(clippy::needless_range_loop)]

pub mod atoms;
pub mod basechange;
pub mod catalog;
pub mod cohomology;
pub mod convergence;
pub mod matrix;
pub mod quantum;
pub mod scalar;
pub mod series;
pub mod spectral;

pub use scalar::Coefficient;

pub type Rational = num_rational::BigRational;
pub type Complex64 = num_complex::Complex<f64>;

pub type QSeries = series::Series<Rational>;
pub type QSeriesMatrix = matrix::SeriesMatrix<Rational>;
pub type QModel = cohomology::CohomologyModel<Rational>;
pub type QPotential = quantum::Potential<Rational>;
pub type QQuantumModel = quantum::QuantumModel<Rational>;
pub type QBaseChange = basechange::BaseChange<Rational>;

pub type FSeries = series::Series<f64>;
pub type FQuantumModel = quantum::QuantumModel<f64>;

pub type CMatrix = spectral::NumericMatrix<f64>;
pub type Spectrum = spectral::SpectrumMultiset<f64>;
pub type Atom = atoms::AtomProxy<f64>;
