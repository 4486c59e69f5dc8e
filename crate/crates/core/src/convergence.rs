//! Spectra of a product's connection matrix along a ray `q = εν` towards
//! the Novikov origin, compared with pairwise sums of the factor spectra.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::cohomology::Side;
use crate::matrix::SeriesMatrix;
use crate::quantum::{leading_k_decomposition, QuantumError, QuantumModel};
use crate::scalar::Coefficient;
use crate::series::{SeriesError, Variables};
use crate::spectral::{eigenvalues_capped, matching_distance, pairwise_sums, SpectralConfig, SpectralError};

pub const CSV_HEADER: &str = "epsilon,distance,max_abs_eig,slope";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvergenceError {
    #[error("invalid ray: {0}")]
    InvalidRay(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub type Result<T> = std::result::Result<T, ConvergenceError>;

/// Direction, fixed insertion point and geometric ε schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySpec {
    /// One nonzero component per Novikov variable of the product.
    pub nu: BTreeMap<String, Complex<f64>>,
    pub t_point: BTreeMap<String, Complex<f64>>,
    pub eps0: f64,
    pub factor: f64,
    pub steps: usize,
}

impl RaySpec {
    /// Checks the ray against a variable set. With every ν component
    /// nonzero the ray meets the coordinate hyperplanes only at ε = 0.
    pub fn validate(&self, vars: &Variables) -> Result<()> {
        let bad = |m: String| Err(ConvergenceError::InvalidRay(m));
        for q in vars.q_names() {
            match self.nu.get(q) {
                None => return bad(format!("no direction component for `{q}`")),
                Some(z) if z.norm() == 0.0 || !z.norm().is_finite() => {
                    return bad(format!("direction component for `{q}` must be nonzero and finite"))
                }
                _ => {}
            }
        }
        if let Some(extra) = self.nu.keys().find(|k| !vars.q_names().contains(k)) {
            return bad(format!("`{extra}` is not a Novikov variable"));
        }
        for t in vars.t_names() {
            if !self.t_point.contains_key(t) {
                return bad(format!("no value for insertion variable `{t}`"));
            }
        }
        if let Some(extra) = self.t_point.keys().find(|k| !vars.t_names().contains(k)) {
            return bad(format!("`{extra}` is not an insertion variable"));
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return bad(format!("eps0 must be positive, got {}", self.eps0));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return bad(format!("factor must lie in (0, 1), got {}", self.factor));
        }
        if self.steps == 0 {
            return bad("steps must be positive".into());
        }
        Ok(())
    }

    pub fn epsilons(&self) -> Vec<f64> {
        (0..self.steps).map(|k| self.eps0 * self.factor.powi(k as i32)).collect()
    }

    /// `q = εν` together with the fixed t-values.
    pub fn point(&self, eps: f64) -> BTreeMap<String, Complex<f64>> {
        self.nu
            .iter()
            .map(|(k, v)| (k.clone(), v * eps))
            .chain(self.t_point.iter().map(|(k, v)| (k.clone(), *v)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub distance: f64,
    pub max_abs_eig: f64,
    pub slope: f64,
    /// Set when the eigen-solver failed at this ε; the numeric fields are NaN.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                r.epsilon, r.distance, r.max_abs_eig, r.slope
            );
        }
        s
    }

    pub fn distances(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.distance).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.iter().all(|r| r.error.is_none()) && self.rows.windows(2).all(|w| w[1].distance < w[0].distance)
    }

    pub fn final_distance(&self) -> Option<f64> {
        self.rows.last().map(|r| r.distance)
    }
}

/// Connection matrices of a product and its factors plus the variable
/// correspondence between them.
#[derive(Debug, Clone)]
pub struct ConvergenceInputs<C> {
    pub kx: SeriesMatrix<C>,
    pub ky: SeriesMatrix<C>,
    pub kxy: SeriesMatrix<C>,
    /// `(factor variable, product variable)` pairs.
    pub x_vars: Vec<(String, String)>,
    pub y_vars: Vec<(String, String)>,
    pub product_vars: std::sync::Arc<Variables>,
}

impl<C: Coefficient> ConvergenceInputs<C> {
    pub fn new(qmx: &QuantumModel<C>, qmy: &QuantumModel<C>, qmxy: &QuantumModel<C>) -> Result<Self> {
        let names = |side: Side, f: &QuantumModel<C>| -> Result<Vec<(String, String)>> {
            let (q_map, t_map) = qmxy.factor_embedding(side, f)?;
            let fv = f.gamma().vars();
            let pv = qmxy.gamma().vars();
            Ok(q_map
                .iter()
                .enumerate()
                .map(|(k, &p)| (fv.q_names()[k].clone(), pv.q_names()[p].clone()))
                .chain(
                    t_map
                        .iter()
                        .enumerate()
                        .map(|(a, &p)| (fv.t_names()[a].clone(), pv.t_names()[p].clone())),
                )
                .collect())
        };
        Ok(ConvergenceInputs {
            kx: qmx.connection_k()?,
            ky: qmy.connection_k()?,
            kxy: qmxy.connection_k()?,
            x_vars: names(Side::X, qmx)?,
            y_vars: names(Side::Y, qmy)?,
            product_vars: qmxy.gamma().vars().clone(),
        })
    }

    /// Replaces `K_{X×Y}` by its Kronecker part (mixed terms dropped).
    pub fn kronecker_only(qmx: &QuantumModel<C>, qmy: &QuantumModel<C>, qmxy: &QuantumModel<C>) -> Result<Self> {
        let mut inputs = Self::new(qmx, qmy, qmxy)?;
        inputs.kxy = leading_k_decomposition(qmx, qmy, qmxy)?.kronecker;
        Ok(inputs)
    }

    fn factor_point(
        map: &[(String, String)],
        point: &BTreeMap<String, Complex<f64>>,
    ) -> BTreeMap<String, Complex<f64>> {
        map.iter().map(|(f, p)| (f.clone(), point[p])).collect()
    }

    /// Distance between `spec K_{X×Y}(p)` and the pairwise sums of the
    /// factor spectra at the induced points, plus `max |λ|`.
    pub fn sample(&self, point: &BTreeMap<String, Complex<f64>>, cfg: &SpectralConfig) -> Result<(f64, f64)> {
        let mxy = self.kxy.evaluate::<f64>(point)?;
        let mx = self.kx.evaluate::<f64>(&Self::factor_point(&self.x_vars, point))?;
        let my = self.ky.evaluate::<f64>(&Self::factor_point(&self.y_vars, point))?;
        let exy = eigenvalues_capped(&mxy, cfg.eig_tol, cfg.size_cap)?;
        let ex = eigenvalues_capped(&mx, cfg.eig_tol, cfg.size_cap)?;
        let ey = eigenvalues_capped(&my, cfg.eig_tol, cfg.size_cap)?;
        let d = matching_distance(&exy, &pairwise_sums(&ex, &ey))?;
        let max_abs = exy.iter().map(|z| z.norm()).fold(0.0, f64::max);
        Ok((d, max_abs))
    }

    pub fn run(&self, ray: &RaySpec, cfg: &SpectralConfig) -> Result<ConvergenceTable> {
        ray.validate(&self.product_vars)?;
        let eps = ray.epsilons();
        let samples: Vec<std::result::Result<(f64, f64), String>> = eps
            .par_iter()
            .map(|&e| self.sample(&ray.point(e), cfg).map_err(|err| err.to_string()))
            .collect();
        let mut rows: Vec<ConvergenceRow> = eps
            .iter()
            .zip(samples)
            .map(|(&epsilon, s)| match s {
                Ok((distance, max_abs_eig)) => ConvergenceRow {
                    epsilon,
                    distance,
                    max_abs_eig,
                    slope: f64::NAN,
                    error: None,
                },
                Err(e) => ConvergenceRow {
                    epsilon,
                    distance: f64::NAN,
                    max_abs_eig: f64::NAN,
                    slope: f64::NAN,
                    error: Some(e),
                },
            })
            .collect();
        let slopes = local_slopes(
            &rows.iter().map(|r| r.epsilon).collect::<Vec<_>>(),
            &rows.iter().map(|r| r.distance).collect::<Vec<_>>(),
        );
        for (r, s) in rows.iter_mut().zip(slopes) {
            r.slope = s;
        }
        Ok(ConvergenceTable { rows })
    }
}

/// The experiment on the full connection matrix of `X × Y`.
pub fn convergence_experiment<C: Coefficient>(
    qmx: &QuantumModel<C>,
    qmy: &QuantumModel<C>,
    qmxy: &QuantumModel<C>,
    ray: &RaySpec,
    cfg: &SpectralConfig,
) -> Result<ConvergenceTable> {
    ConvergenceInputs::new(qmx, qmy, qmxy)?.run(ray, cfg)
}

/// d log d / d log ε: central differences inside, one-sided at the ends,
/// NaN where a distance is zero or missing.
pub fn local_slopes(eps: &[f64], d: &[f64]) -> Vec<f64> {
    let n = eps.len();
    let logd: Vec<f64> = d.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NAN }).collect();
    let loge: Vec<f64> = eps.iter().map(|x| x.ln()).collect();
    (0..n)
        .map(|i| {
            if n < 2 {
                return f64::NAN;
            }
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (logd[b] - logd[a]) / (loge[b] - loge[a])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{p1_entry, p1xp1_entry, point_entry, point_product};

    fn ray(nu: &[(&str, f64)], t: &[(&str, f64)], steps: usize) -> RaySpec {
        RaySpec {
            nu: nu.iter().map(|(k, v)| (k.to_string(), Complex::new(*v, 0.0))).collect(),
            t_point: t.iter().map(|(k, v)| (k.to_string(), Complex::new(*v, 0.0))).collect(),
            eps0: 1e-2,
            factor: 0.5,
            steps,
        }
    }

    #[test]
    fn p1xp1_distance_decreases() {
        let p1 = p1_entry().quantum().unwrap();
        let prod = p1xp1_entry().quantum().unwrap();
        let table = convergence_experiment(&p1, &p1, &prod, &ray(&[("q1", 1.0), ("q2", 1.0)], &[("tp", 1.0)], 20), &SpectralConfig::default()).unwrap();
        assert_eq!(table.rows.len(), 20);
        assert!(table.strictly_decreasing(), "{}", table.to_csv());
        assert!(table.final_distance().unwrap() <= 1e-8);
    }

    #[test]
    fn kronecker_part_has_zero_distance() {
        let p1 = p1_entry().quantum().unwrap();
        let prod = p1xp1_entry().quantum().unwrap();
        let inputs = ConvergenceInputs::kronecker_only(&p1, &p1, &prod).unwrap();
        let table = inputs.run(&ray(&[("q1", 1.0), ("q2", 1.0)], &[("tp", 1.0)], 8), &SpectralConfig::default()).unwrap();
        for r in &table.rows {
            assert!(r.distance <= 1e-10 * r.max_abs_eig.max(1.0), "{r:?}");
        }
    }

    #[test]
    fn point_times_p1_has_zero_distance() {
        let pt = point_entry().quantum().unwrap();
        let p1 = p1_entry().quantum().unwrap();
        let prod = point_product(&p1_entry()).unwrap().quantum().unwrap();
        let table = convergence_experiment(&pt, &p1, &prod, &ray(&[("q", 1.0)], &[], 10), &SpectralConfig::default()).unwrap();
        assert!(table.rows.iter().all(|r| r.distance <= 1e-12));
    }

    #[test]
    fn ray_validation() {
        let vars = p1xp1_entry().potential.series.vars().clone();
        assert!(ray(&[("q1", 1.0), ("q2", 1.0)], &[("tp", 1.0)], 3).validate(&vars).is_ok());
        assert!(ray(&[("q1", 1.0), ("q2", 0.0)], &[("tp", 1.0)], 3).validate(&vars).is_err());
        assert!(ray(&[("q1", 1.0)], &[("tp", 1.0)], 3).validate(&vars).is_err());
        assert!(ray(&[("q1", 1.0), ("q2", 1.0)], &[], 3).validate(&vars).is_err());
        let mut r = ray(&[("q1", 1.0), ("q2", 1.0)], &[("tp", 1.0)], 3);
        r.factor = 1.0;
        assert!(r.validate(&vars).is_err());
        r.factor = 0.5;
        r.eps0 = 0.0;
        assert!(r.validate(&vars).is_err());
    }

    #[test]
    fn slopes_of_a_power_law() {
        let eps = [1.0, 0.5, 0.25, 0.125];
        let d: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powi(2)).collect();
        for s in local_slopes(&eps, &d) {
            assert!((s - 2.0).abs() < 1e-12);
        }
        assert!(local_slopes(&[1.0, 0.5], &[0.0, 1.0])[0].is_nan());
    }

    #[test]
    fn csv_layout() {
        let t = ConvergenceTable {
            rows: vec![ConvergenceRow { epsilon: 0.01, distance: 1e-3, max_abs_eig: 2.0, slope: f64::NAN, error: None }],
        };
        assert_eq!(
            t.to_csv(),
            "epsilon,distance,max_abs_eig,slope\n1.0000000000000000e-2,1.0000000000000000e-3,2.0000000000000000e0,NaN\n"
        );
    }
}
