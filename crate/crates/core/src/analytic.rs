//! Closed-form solutions and pointwise difference operators.
//!
//! The catalog entries are the oracles for every solver in the crate. Each
//! entry distinguishes where its formula is *defined* ([`CatalogEntry::eval`]
//! fails outside that set) from where it is *regular*
//! ([`CatalogEntry::is_regular`]), i.e. `C^2` with a classical
//! infinity-Laplacian. Residual checks are only meaningful on the regular set.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{distance, norm};

/// Default finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Below this gradient magnitude the mean-value formula is not applied.
pub const CRITICAL_GRADIENT: f64 = 1e-6;

/// `C(x) = a + b |x - apex|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFunction {
    pub apex: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl ConeFunction {
    pub fn new(apex: Vec<f64>, a: f64, b: f64) -> Self {
        ConeFunction { apex, a, b }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a + self.b * distance(x, &self.apex)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CatalogEntry {
    Cone {
        apex: Vec<f64>,
        #[serde(default)]
        a: f64,
        #[serde(default = "one")]
        b: f64,
    },
    /// `<coef, x> + offset`
    Affine {
        coef: Vec<f64>,
        #[serde(default)]
        offset: f64,
    },
    /// `|x1|^(4/3) - |x2|^(4/3)`
    Aronsson,
    /// `arctan(x2 / x1)`
    Arctan2,
    /// `|x - center|^((p-n)/(p-1))`, or `log|x - center|` when `p == n`.
    RadialP {
        p: f64,
        n: usize,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `sqrt(x1^2 + x2^2) - 7 sqrt(x3^2 + x4^2) + x5`
    DisjointSum,
}

fn one() -> f64 {
    1.0
}

impl CatalogEntry {
    pub fn cone(apex: &[f64], a: f64, b: f64) -> Self {
        CatalogEntry::Cone {
            apex: apex.to_vec(),
            a,
            b,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            CatalogEntry::Cone { .. } => "cone",
            CatalogEntry::Affine { .. } => "affine",
            CatalogEntry::Aronsson => "aronsson",
            CatalogEntry::Arctan2 => "arctan2",
            CatalogEntry::RadialP { .. } => "radial-p",
            CatalogEntry::DisjointSum => "disjoint-sum",
        }
    }

    /// Required point dimension, if the entry fixes one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            CatalogEntry::Cone { apex, .. } => Some(apex.len()),
            CatalogEntry::Affine { coef, .. } => Some(coef.len()),
            CatalogEntry::Aronsson | CatalogEntry::Arctan2 => Some(2),
            CatalogEntry::RadialP { n, .. } => Some(*n),
            CatalogEntry::DisjointSum => Some(5),
        }
    }

    fn radial_exponent(p: f64, n: usize) -> Option<f64> {
        let n = n as f64;
        if (p - n).abs() < 1e-12 {
            None
        } else {
            Some((p - n) / (p - 1.0))
        }
    }

    fn radial_center(center: &Option<Vec<f64>>, x: &[f64]) -> Vec<f64> {
        center.clone().unwrap_or_else(|| vec![0.0; x.len()])
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        match self.dim() {
            Some(d) if d != x.len() => Err(Error::invalid(
                "point",
                format!("`{}` expects {d} coordinates, got {}", self.id(), x.len()),
            )),
            _ => Ok(()),
        }
    }

    /// Closed-form value. Fails only where the formula itself is undefined.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let out = |entry: &Self| Error::OutsideDomain {
            entry: entry.id(),
            point: x.to_vec(),
        };
        let v = match self {
            CatalogEntry::Cone { apex, a, b } => a + b * distance(x, apex),
            CatalogEntry::Affine { coef, offset } => {
                coef.iter().zip(x).map(|(c, xi)| c * xi).sum::<f64>() + offset
            }
            CatalogEntry::Aronsson => x[0].abs().powf(4.0 / 3.0) - x[1].abs().powf(4.0 / 3.0),
            CatalogEntry::Arctan2 => {
                if x[0] == 0.0 {
                    return Err(out(self));
                }
                (x[1] / x[0]).atan()
            }
            CatalogEntry::RadialP { p, n, center } => {
                let r = distance(x, &Self::radial_center(center, x));
                match Self::radial_exponent(*p, *n) {
                    None if r == 0.0 => return Err(out(self)),
                    None => r.ln(),
                    Some(alpha) if alpha <= 0.0 && r == 0.0 => return Err(out(self)),
                    Some(alpha) => r.powf(alpha),
                }
            }
            CatalogEntry::DisjointSum => {
                (x[0] * x[0] + x[1] * x[1]).sqrt() - 7.0 * (x[2] * x[2] + x[3] * x[3]).sqrt() + x[4]
            }
        };
        Ok(v)
    }

    /// Whether `x` lies off the singular set (apex, axes, origin), where the
    /// entry is `C^2`.
    pub fn is_regular(&self, x: &[f64]) -> bool {
        if self.check_dim(x).is_err() {
            return false;
        }
        match self {
            CatalogEntry::Cone { apex, .. } => distance(x, apex) > 0.0,
            CatalogEntry::Affine { .. } => true,
            CatalogEntry::Aronsson => x[0] != 0.0 && x[1] != 0.0,
            CatalogEntry::Arctan2 => x[0] != 0.0,
            CatalogEntry::RadialP { center, .. } => {
                distance(x, &Self::radial_center(center, x)) > 0.0
            }
            CatalogEntry::DisjointSum => x[0].hypot(x[1]) > 0.0 && x[2].hypot(x[3]) > 0.0,
        }
    }

    /// Exact gradient on the regular set.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        if !self.is_regular(x) {
            return None;
        }
        let g = match self {
            CatalogEntry::Cone { apex, b, .. } => {
                let r = distance(x, apex);
                x.iter()
                    .zip(apex)
                    .map(|(xi, ai)| b * (xi - ai) / r)
                    .collect()
            }
            CatalogEntry::Affine { coef, .. } => coef.clone(),
            CatalogEntry::Aronsson => vec![
                4.0 / 3.0 * x[0].signum() * x[0].abs().cbrt(),
                -4.0 / 3.0 * x[1].signum() * x[1].abs().cbrt(),
            ],
            CatalogEntry::Arctan2 => {
                let r2 = x[0] * x[0] + x[1] * x[1];
                vec![-x[1] / r2, x[0] / r2]
            }
            CatalogEntry::RadialP { p, n, center } => {
                let c = Self::radial_center(center, x);
                let r = distance(x, &c);
                let dr = match Self::radial_exponent(*p, *n) {
                    None => 1.0 / r,
                    Some(alpha) => alpha * r.powf(alpha - 1.0),
                };
                x.iter()
                    .zip(&c)
                    .map(|(xi, ci)| dr * (xi - ci) / r)
                    .collect()
            }
            CatalogEntry::DisjointSum => {
                let r1 = x[0].hypot(x[1]);
                let r2 = x[2].hypot(x[3]);
                vec![
                    x[0] / r1,
                    x[1] / r1,
                    -7.0 * x[2] / r2,
                    -7.0 * x[3] / r2,
                    1.0,
                ]
            }
        };
        Some(g)
    }

    /// Exact infinity-Laplacian on the regular set. Zero for every entry
    /// except `radial-p`, which is p-harmonic rather than infinity-harmonic.
    pub fn exact_infinity_laplacian(&self, x: &[f64]) -> f64 {
        match self {
            CatalogEntry::RadialP { p, n, center } => {
                let r = distance(x, &Self::radial_center(center, x));
                match Self::radial_exponent(*p, *n) {
                    // u = log r: u'^2 u'' = -1 / r^4
                    None => -1.0 / r.powi(4),
                    Some(alpha) => alpha.powi(3) * (alpha - 1.0) * r.powf(3.0 * alpha - 4.0),
                }
            }
            _ => 0.0,
        }
    }
}

fn sample<F: Fn(&[f64]) -> f64>(u: &F, x: &[f64]) -> Result<f64> {
    let v = u(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            what: "function sample",
            location: format!("{x:?}"),
            value: v,
        })
    }
}

fn check_step(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "h",
            format!("finite-difference step must be positive, got {h}"),
        ))
    }
}

/// Central-difference gradient.
pub fn gradient_fd<F: Fn(&[f64]) -> f64>(u: F, x: &[f64], h: f64) -> Result<Vec<f64>> {
    check_step(h)?;
    let mut y = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        y[i] = x[i] + h;
        let fp = sample(&u, &y)?;
        y[i] = x[i] - h;
        let fm = sample(&u, &y)?;
        y[i] = x[i];
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

/// `sum_ij u_i u_j u_ij` with every partial taken by central differences.
pub fn infinity_laplacian_fd<F: Fn(&[f64]) -> f64>(u: F, x: &[f64], h: f64) -> Result<f64> {
    check_step(h)?;
    let d = x.len();
    let grad = gradient_fd(&u, x, h)?;
    let u0 = sample(&u, x)?;
    let mut y = x.to_vec();
    let mut total = 0.0;
    for i in 0..d {
        y[i] = x[i] + h;
        let fp = sample(&u, &y)?;
        y[i] = x[i] - h;
        let fm = sample(&u, &y)?;
        y[i] = x[i];
        let uii = (fp - 2.0 * u0 + fm) / (h * h);
        total += grad[i] * grad[i] * uii;
        for j in (i + 1)..d {
            let mut corner = |si: f64, sj: f64| {
                y[i] = x[i] + si * h;
                y[j] = x[j] + sj * h;
                let v = sample(&u, &y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let upp = corner(1.0, 1.0)?;
            let upm = corner(1.0, -1.0)?;
            let ump = corner(-1.0, 1.0)?;
            let umm = corner(-1.0, -1.0)?;
            let uij = (upp - upm - ump + umm) / (4.0 * h * h);
            total += 2.0 * grad[i] * grad[j] * uij;
        }
    }
    Ok(total)
}

/// Unit directions used to sample a sphere: the two signs in 1D, `n`
/// equispaced angles in 2D, a golden-angle spiral of `n` points in 3D.
pub fn sphere_directions(dim: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    match dim {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => Ok((0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect()),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            Ok((0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * k as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::Unsupported(format!(
            "sphere sampling in dimension {dim}"
        ))),
    }
}

/// `(max + min) / 2 - u(x)` with max and min over `n_dirs` points of the
/// sphere of radius `eps` around `x` together with `x` itself.
///
/// For smooth `u` with non-vanishing gradient this behaves like
/// `eps^2 / 2 * Δ∞u / |∇u|^2`.
pub fn mean_value_residual<F: Fn(&[f64]) -> f64>(
    u: F,
    x: &[f64],
    eps: f64,
    n_dirs: usize,
) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid(
            "eps",
            format!("must be positive, got {eps}"),
        ));
    }
    if x.len() >= 2 && n_dirs < 4 {
        return Err(Error::invalid("n_dirs", "need at least 4 directions"));
    }
    let grad = gradient_fd(&u, x, DEFAULT_FD_STEP.min(eps))?;
    let magnitude = norm(&grad);
    if magnitude < CRITICAL_GRADIENT {
        return Err(Error::CriticalPoint {
            magnitude,
            threshold: CRITICAL_GRADIENT,
        });
    }
    let centre = sample(&u, x)?;
    let (mut hi, mut lo) = (centre, centre);
    let mut y = x.to_vec();
    for dir in sphere_directions(x.len(), n_dirs)? {
        for (k, yk) in y.iter_mut().enumerate() {
            *yk = x[k] + eps * dir[k];
        }
        let v = sample(&u, &y)?;
        hi = hi.max(v);
        lo = lo.min(v);
    }
    Ok(0.5 * (hi + lo) - centre)
}
