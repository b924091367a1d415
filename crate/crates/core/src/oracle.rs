//! Closed forms against independent quadrature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::action::{
    action_quadrature, assemble_quadratic, kinetic_coeff, overlap_coeff, LagrangianSpec,
    DEFAULT_BAND_CUT,
};
use crate::basis::{build_centers, CenterMode, PathState};
use crate::gauge::{
    abelian_quadratic_form, gradient_overlap_4d, lattice_centers, overlap_4d, average_lagrangian,
    GaugeFieldState, Group,
};
use crate::observables::{correlator, correlator_quadrature, mean_sq, mean_sq_quadrature};

pub const TOLERANCE: f64 = 1e-8;
pub const FIELD_TOLERANCE: f64 = 1e-6;

/// One comparison. `key` is the separation, width or lag that labels it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub key: f64,
    pub analytic: f64,
    pub quadrature: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    /// `relative` or `absolute`.
    pub measure: &'static str,
    pub tolerance: f64,
    pub rows: Vec<OracleRow>,
}

impl OracleCheck {
    pub fn worst(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.residual <= self.tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub seed: u64,
    /// Multiplies every analytic coefficient; anything but 1 is a deliberate
    /// fault for exercising the failure path.
    pub coefficient_scale: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            coefficient_scale: 1.0,
        }
    }
}

/// Relative residual, with a floor so values crossing zero are compared on
/// the scale of the largest value in their family.
fn rel(analytic: f64, quad: f64, floor: f64) -> f64 {
    (analytic - quad).abs() / quad.abs().max(floor)
}

fn trapezoid(n: usize, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / n as f64;
    h * (0..n).map(|j| f(lo + j as f64 * h)).sum::<f64>()
}

fn coefficient_check(opts: &OracleOptions) -> (OracleCheck, OracleCheck) {
    // raw Gaussians on a line segment long enough that the ends vanish
    let period = 20.0;
    let n = 8192;
    let mut ov = Vec::new();
    let mut kin = Vec::new();
    for width in [0.1, 0.5, 1.0, 2.0] {
        let g = |t: f64, c: f64| (-(t - c) * (t - c) / (width * width)).exp();
        let dg = |t: f64, c: f64| -2.0 * (t - c) / (width * width) * g(t, c);
        let floor_ov = overlap_coeff(0.0, width);
        let floor_kin = kinetic_coeff(0.0, width).abs();
        for k in 0..=16 {
            let delta = 0.25 * k as f64 * width;
            let (a, b) = (-0.5 * delta, 0.5 * delta);
            let lo = -0.5 * period;
            let n_pts = n.max((16.0 * period / width) as usize);
            let q = trapezoid(n_pts, lo, -lo, |t| g(t, a) * g(t, b));
            let v = opts.coefficient_scale * overlap_coeff(delta, width);
            ov.push(OracleRow {
                key: delta,
                analytic: v,
                quadrature: q,
                residual: rel(v, q, floor_ov),
            });
            let q = trapezoid(n_pts, lo, -lo, |t| dg(t, a) * dg(t, b));
            let v = opts.coefficient_scale * kinetic_coeff(delta, width);
            kin.push(OracleRow {
                key: delta,
                analytic: v,
                quadrature: q,
                residual: rel(v, q, floor_kin),
            });
        }
    }
    (
        OracleCheck {
            name: "overlap_coefficients",
            measure: "relative",
            tolerance: TOLERANCE,
            rows: ov,
        },
        OracleCheck {
            name: "kinetic_coefficients",
            measure: "relative",
            tolerance: TOLERANCE,
            rows: kin,
        },
    )
}

fn random_path(rng: &mut ChaCha8Rng, n_sum: usize, width: f64, period: f64, mode: CenterMode) -> PathState {
    let centers = build_centers(n_sum, period, mode, rng);
    let amps = (0..n_sum).map(|_| rng.random_range(-1.5..1.5)).collect();
    PathState::new(amps, centers, width, period).expect("valid geometry")
}

fn path_checks(opts: &OracleOptions) -> Vec<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0001);
    let period = 20.0;
    let spec = LagrangianSpec::harmonic(1.0, 1.0).expect("valid");
    let mut action = Vec::new();
    let mut msq = Vec::new();
    let mut corr = Vec::new();
    for (width, mode) in [
        (2.0, CenterMode::Uniform),
        (1.0, CenterMode::Uniform),
        (0.5, CenterMode::Random),
        (0.1, CenterMode::Uniform),
    ] {
        let path = random_path(&mut rng, 200, width, period, mode);
        let n_pts = (32.0 * period / width).ceil() as usize;
        let a = assemble_quadratic(path.centers(), width, period, 1.0, 1.0, DEFAULT_BAND_CUT)
            .expect("valid geometry");
        let v = opts.coefficient_scale * a.action(path.amplitudes());
        let q = action_quadrature(&path, &spec, n_pts).expect("grid is fine enough");
        action.push(OracleRow {
            key: width,
            analytic: v,
            quadrature: q,
            residual: rel(v, q, 0.0),
        });
        let v = mean_sq(&path);
        let q = mean_sq_quadrature(&path, n_pts);
        msq.push(OracleRow {
            key: width,
            analytic: v,
            quadrature: q,
            residual: rel(v, q, 0.0),
        });
        let lags: Vec<f64> = (0..=16).map(|k| 0.5 * k as f64).collect();
        let c = correlator(&path, &lags);
        let c0 = c[0];
        for (lag, v) in lags.iter().zip(c) {
            let q = correlator_quadrature(&path, *lag, n_pts);
            corr.push(OracleRow {
                key: *lag,
                analytic: v,
                quadrature: q,
                residual: rel(v, q, 1e-3 * c0),
            });
        }
    }
    vec![
        OracleCheck {
            name: "path_action",
            measure: "relative",
            tolerance: TOLERANCE,
            rows: action,
        },
        OracleCheck {
            name: "mean_square",
            measure: "relative",
            tolerance: TOLERANCE,
            rows: msq,
        },
        OracleCheck {
            name: "correlator",
            measure: "relative",
            tolerance: TOLERANCE,
            rows: corr,
        },
    ]
}

/// 4D overlaps of raw Gaussians by a product trapezoid over a window around
/// the pair midpoint.
fn overlap_4d_checks(opts: &OracleOptions) -> (OracleCheck, OracleCheck) {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0002);
    let width: f64 = 0.5;
    let h = width / 4.0;
    let half = 5.0 * width;
    let m = (2.0 * half / h).round() as usize;
    let inv_w2 = 1.0 / (width * width);
    let mut ov = Vec::new();
    let mut grad = Vec::new();
    let floor_ov = overlap_4d([0.0; 4], width);
    let floor_grad = gradient_overlap_4d([0.0; 4], width, 0, 0);
    for case in 0..4 {
        let delta: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.2 * width..1.2 * width));
        let (rho, sigma) = (case % 4, (case + 1 + case / 2) % 4);
        let (mut s_ov, mut s_dd, mut s_rs) = (0.0, 0.0, 0.0);
        let axis: Vec<f64> = (0..m).map(|j| -half + j as f64 * h).collect();
        for &x0 in &axis {
            for &x1 in &axis {
                for &x2 in &axis {
                    for &x3 in &axis {
                        let x = [x0, x1, x2, x3];
                        let di: [f64; 4] = std::array::from_fn(|k| x[k] - 0.5 * delta[k]);
                        let dj: [f64; 4] = std::array::from_fn(|k| x[k] + 0.5 * delta[k]);
                        let r2i: f64 = di.iter().map(|d| d * d).sum();
                        let r2j: f64 = dj.iter().map(|d| d * d).sum();
                        let gg = (-(r2i + r2j) * inv_w2).exp();
                        s_ov += gg;
                        let gi = |k: usize| -2.0 * di[k] * inv_w2;
                        let gj = |k: usize| -2.0 * dj[k] * inv_w2;
                        s_dd += gi(rho) * gj(rho) * gg;
                        s_rs += gi(rho) * gj(sigma) * gg;
                    }
                }
            }
        }
        let vol = h.powi(4);
        let v = opts.coefficient_scale * overlap_4d(delta, width);
        let q = vol * s_ov;
        ov.push(OracleRow {
            key: delta.iter().map(|d| d * d).sum::<f64>().sqrt(),
            analytic: v,
            quadrature: q,
            residual: rel(v, q, floor_ov),
        });
        for (s, q) in [(rho, vol * s_dd), (sigma, vol * s_rs)] {
            let v = opts.coefficient_scale * gradient_overlap_4d(delta, width, rho, s);
            grad.push(OracleRow {
                key: (4 * rho + s) as f64,
                analytic: v,
                quadrature: q,
                residual: rel(v, q, floor_grad),
            });
        }
    }
    (
        OracleCheck {
            name: "overlap_4d",
            measure: "relative",
            tolerance: TOLERANCE,
            rows: ov,
        },
        OracleCheck {
            name: "gradient_overlap_4d",
            measure: "relative",
            tolerance: TOLERANCE,
            rows: grad,
        },
    )
}

fn random_gauge(group: Group, rng: &mut ChaCha8Rng) -> GaugeFieldState {
    let mut s = GaugeFieldState::new(group, lattice_centers(2, 2.0), 0.5, 2.0, 1.0).expect("valid");
    for a in s.amplitudes_mut() {
        *a = rng.random_range(-1.0..1.0);
    }
    s
}

/// Field strength against central differences of the potential, plus the
/// colour commutator evaluated from the potential itself.
fn field_check(opts: &OracleOptions) -> OracleCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0003);
    let mut rows = Vec::new();
    for group in [Group::U1, Group::SU2] {
        let s = random_gauge(group, &mut rng);
        let nc = s.colors();
        for _ in 0..10 {
            let x: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..2.0));
            let f = s.field_strength(x);
            let a = s.potential(x);
            let h = 1e-5;
            let deriv = |alpha: usize, comp: usize| {
                let (mut xp, mut xm) = (x, x);
                xp[alpha] += h;
                xm[alpha] -= h;
                (s.potential(xp)[comp] - s.potential(xm)[comp]) / (2.0 * h)
            };
            for mu in 0..4 {
                for nu in mu + 1..4 {
                    for c in 0..nc {
                        let mut fd = deriv(mu, nu * nc + c) - deriv(nu, mu * nc + c);
                        if group == Group::SU2 {
                            let (b, d) = ((c + 1) % 3, (c + 2) % 3);
                            fd += s.coupling() * (a[mu * 3 + b] * a[nu * 3 + d] - a[mu * 3 + d] * a[nu * 3 + b]);
                        }
                        let v = opts.coefficient_scale * f.get(mu, nu, c);
                        rows.push(OracleRow {
                            key: (4 * mu + nu) as f64,
                            analytic: v,
                            quadrature: fd,
                            residual: (v - fd).abs(),
                        });
                    }
                }
            }
        }
    }
    OracleCheck {
        name: "field_strength",
        measure: "absolute",
        tolerance: FIELD_TOLERANCE,
        rows,
    }
}

/// U(1) action on the grid against the image-summed closed form.
fn abelian_check(opts: &OracleOptions) -> OracleCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed_0004);
    let mut rows = Vec::new();
    for _ in 0..2 {
        let s = random_gauge(Group::U1, &mut rng);
        let m = abelian_quadratic_form(&s).expect("u1");
        let a = s.amplitudes();
        let dim = a.len();
        let mut v = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                v += 0.5 * a[i] * m[i * dim + j] * a[j];
            }
        }
        let v = opts.coefficient_scale * v;
        let q = average_lagrangian(&s, s.width() / 4.0).expect("fine grid") * s.volume();
        rows.push(OracleRow {
            key: s.width(),
            analytic: v,
            quadrature: q,
            residual: rel(v, q, 0.0),
        });
    }
    OracleCheck {
        name: "abelian_action",
        measure: "relative",
        tolerance: TOLERANCE,
        rows,
    }
}

pub fn run_oracle(opts: &OracleOptions) -> Vec<OracleCheck> {
    let (ov, kin) = coefficient_check(opts);
    let mut out = vec![ov, kin];
    out.extend(path_checks(opts));
    let (o4, g4) = overlap_4d_checks(opts);
    out.push(o4);
    out.push(g4);
    out.push(field_check(opts));
    out.push(abelian_check(opts));
    out
}
