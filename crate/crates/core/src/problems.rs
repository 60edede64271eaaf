//! The benchmark obstacle problems driven by the command line front end.
//!
//! Three families: a membrane over a quartic bump on a rectangle (no closed
//! form, two load levels), a radially symmetric problem on a square whose
//! exact solution and contact disk are known, and an L-shaped domain where a
//! corner-singular function with known multiplier is manufactured through a
//! quintic cutoff blend.

use crate::mesh::DomainSpec;
use crate::{Scalar, VecField};

/// Exact solution data for error and efficiency reporting.
pub struct ExactSolution {
    pub u: Box<Scalar>,
    pub grad_u: Box<VecField>,
    pub lambda: Box<Scalar>,
}

/// A complete problem instance: domain, data, and optional exact solution.
pub struct ProblemSpec {
    pub name: &'static str,
    pub domain: DomainSpec,
    pub f: Box<Scalar>,
    pub psi: Box<Scalar>,
    pub grad_psi: Box<VecField>,
    /// Dirichlet boundary values; `None` means homogeneous.
    pub dirichlet: Option<Box<Scalar>>,
    pub exact: Option<ExactSolution>,
}

/// Load level for the membrane problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadCase {
    Zero,
    Minus15,
}

/// Membrane over a quartic bump on the rectangle (-2, 2) x (-1, 1) with
/// homogeneous boundary values. The obstacle peaks at 10 over the points
/// (-1, 0) and (1, 0) and falls off steeply; raising the downward load from
/// zero to -15 reshapes the contact region.
pub fn example_1(load: LoadCase) -> ProblemSpec {
    let fval = match load {
        LoadCase::Zero => 0.0,
        LoadCase::Minus15 => -15.0,
    };
    ProblemSpec {
        name: match load {
            LoadCase::Zero => "example1-f0",
            LoadCase::Minus15 => "example1-fm15",
        },
        domain: DomainSpec::Rectangle { x0: -2.0, y0: -1.0, x1: 2.0, y1: 1.0 },
        f: Box::new(move |_, _| fval),
        psi: Box::new(|x, y| 10.0 - 6.0 * (x * x - 1.0).powi(2) - 20.0 * y * y),
        grad_psi: Box::new(|x, y| [-24.0 * x * (x * x - 1.0), -40.0 * y]),
        dirichlet: None,
        exact: None,
    }
}

/// Radially symmetric problem on the square (-1.5, 1.5)^2 with constant load
/// -2 and the zero obstacle. The membrane rests on the obstacle exactly on
/// the unit disk; outside it the solution is r^2/2 - ln r - 1/2. The boundary
/// values are the trace of that solution.
pub fn example_2() -> ProblemSpec {
    fn u(x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        if r >= 1.0 {
            0.5 * r * r - r.ln() - 0.5
        } else {
            0.0
        }
    }
    fn grad_u(x: f64, y: f64) -> [f64; 2] {
        let r2 = x * x + y * y;
        if r2 >= 1.0 {
            [(1.0 - 1.0 / r2) * x, (1.0 - 1.0 / r2) * y]
        } else {
            [0.0, 0.0]
        }
    }
    ProblemSpec {
        name: "example2",
        domain: DomainSpec::Square { half: 1.5 },
        f: Box::new(|_, _| -2.0),
        psi: Box::new(|_, _| 0.0),
        grad_psi: Box::new(|_, _| [0.0, 0.0]),
        dirichlet: Some(Box::new(u)),
        exact: Some(ExactSolution {
            u: Box::new(u),
            grad_u: Box::new(grad_u),
            lambda: Box::new(|x, y| if x.hypot(y) < 1.0 { -2.0 } else { 0.0 }),
        }),
    }
}

/// Quintic blend: one below zero, zero above one, with two continuous
/// derivatives.
fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s < 1.0 {
        s * s * s * (-6.0 * s * s + 15.0 * s - 10.0) + 1.0
    } else {
        0.0
    }
}

fn smoothstep_d(s: f64) -> f64 {
    if s > 0.0 && s < 1.0 {
        -30.0 * s * s * (s - 1.0) * (s - 1.0)
    } else {
        0.0
    }
}

fn smoothstep_dd(s: f64) -> f64 {
    if s > 0.0 && s < 1.0 {
        -60.0 * s * (2.0 * s - 1.0) * (s - 1.0)
    } else {
        0.0
    }
}

/// The radial cutoff of the corner solution and its first two derivatives in
/// r. It is one for r <= 1/4 and zero for r >= 3/4.
fn cutoff(r: f64) -> (f64, f64, f64) {
    let s = 2.0 * (r - 0.25);
    (smoothstep(s), 2.0 * smoothstep_d(s), 4.0 * smoothstep_dd(s))
}

/// Indicator of the manufactured contact region r > 5/4.
fn contact_zone(r: f64) -> f64 {
    if r <= 1.25 {
        0.0
    } else {
        1.0
    }
}

/// Polar angle measured counterclockwise from the positive x axis into
/// [0, 2 pi); the L-shaped domain occupies [0, 3 pi / 2].
fn angle(x: f64, y: f64) -> f64 {
    let th = y.atan2(x);
    if th < 0.0 {
        th + 2.0 * std::f64::consts::PI
    } else {
        th
    }
}

/// Corner-singular problem on the L-shaped domain (-2, 2)^2 minus the fourth
/// quadrant, with the zero obstacle and homogeneous boundary values. The
/// exact solution is the reentrant-corner mode r^(2/3) sin(2 theta / 3)
/// cut off beyond r = 3/4; the load is chosen so that the multiplier is
/// minus the indicator of r > 5/4.
pub fn example_3() -> ProblemSpec {
    fn u(x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        if r == 0.0 {
            return 0.0;
        }
        let (g, _, _) = cutoff(r);
        if g == 0.0 {
            return 0.0;
        }
        r.powf(2.0 / 3.0) * (2.0 * angle(x, y) / 3.0).sin() * g
    }
    fn grad_u(x: f64, y: f64) -> [f64; 2] {
        let r = x.hypot(y);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let (g, gp, _) = cutoff(r);
        if g == 0.0 && gp == 0.0 {
            return [0.0, 0.0];
        }
        let th = angle(x, y);
        let s23 = (2.0 * th / 3.0).sin();
        let c23 = (2.0 * th / 3.0).cos();
        let dr = 2.0 / 3.0 * r.powf(-1.0 / 3.0) * s23 * g + r.powf(2.0 / 3.0) * s23 * gp;
        let dth_over_r = 2.0 / 3.0 * r.powf(-1.0 / 3.0) * c23 * g;
        let (cos_t, sin_t) = (x / r, y / r);
        [dr * cos_t - dth_over_r * sin_t, dr * sin_t + dth_over_r * cos_t]
    }
    fn f(x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        if r == 0.0 {
            return 0.0;
        }
        let (_, gp, gpp) = cutoff(r);
        let mut v = -contact_zone(r);
        if gp != 0.0 || gpp != 0.0 {
            let s23 = (2.0 * angle(x, y) / 3.0).sin();
            // The corner mode is harmonic, so the Laplacian of the product
            // collects the cutoff derivatives only.
            v -= r.powf(2.0 / 3.0) * s23 * (gpp + gp / r)
                + 4.0 / 3.0 * r.powf(-1.0 / 3.0) * s23 * gp;
        }
        v
    }
    ProblemSpec {
        name: "example3",
        domain: DomainSpec::LShape { half: 2.0 },
        f: Box::new(f),
        psi: Box::new(|_, _| 0.0),
        grad_psi: Box::new(|_, _| [0.0, 0.0]),
        dirichlet: None,
        exact: Some(ExactSolution {
            u: Box::new(u),
            grad_u: Box::new(grad_u),
            lambda: Box::new(|x, y| -contact_zone(x.hypot(y))),
        }),
    }
}

/// Looks a benchmark problem up by its command line name.
pub fn by_name(name: &str) -> Option<ProblemSpec> {
    match name {
        "example1-f0" => Some(example_1(LoadCase::Zero)),
        "example1-fm15" => Some(example_1(LoadCase::Minus15)),
        "example2" => Some(example_2()),
        "example3" => Some(example_3()),
        _ => None,
    }
}
