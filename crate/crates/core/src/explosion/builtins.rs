//! Named example maps on small charts.

use super::chart::ExplosiveChart;
use super::map::CompatibleMap;
use crate::poly::{Poly, PolyMap};
use crate::{Error, Result};

pub const BUILTIN_MAPS: &[(&str, &str)] = &[
    ("cubic-mixed", "compatible polynomial map with nonzero mixed second and third partials"),
    ("heisenberg-product", "fiberwise Heisenberg product chart map for standard Pi on R^2"),
    ("identity", "identity of the (1,1,1) chart"),
    ("normal-violating", "(x, y, z + y): breaks the normal-bundle condition"),
    ("quadratic-scaling", "(x, 2y, z + y^2)"),
    ("sample-compatible", "(x, y + x y, z + y^2)"),
];

fn chart111() -> ExplosiveChart {
    ExplosiveChart::symmetric(1, 1, 1, 2.0).expect("static chart")
}

fn big111() -> ExplosiveChart {
    ExplosiveChart::symmetric(1, 1, 1, 50.0).expect("static chart")
}

fn xyz() -> (Poly, Poly, Poly) {
    (Poly::var(3, 0), Poly::var(3, 1), Poly::var(3, 2))
}

pub fn builtin_map(name: &str) -> Result<CompatibleMap> {
    let (x, y, z) = xyz();
    let c = |v: f64| Poly::constant(3, v);
    let map3 = |comps: Vec<Poly>| -> Result<CompatibleMap> {
        CompatibleMap::from_poly(PolyMap::new(3, comps)?, chart111(), big111())
    };
    match name {
        "identity" => map3(vec![x, y, z]),
        "sample-compatible" => map3(vec![x.clone(), y.add(&x.mul(&y)), z.add(&y.pow(2))]),
        "normal-violating" => map3(vec![x, y.clone(), z.add(&y)]),
        "quadratic-scaling" => map3(vec![x, y.scale(2.0), z.add(&y.pow(2))]),
        "cubic-mixed" => {
            let px = x.add(&y.scale(0.3)).add(&x.mul(&y.pow(2)).scale(0.2));
            let py = c(1.0)
                .add(&x.scale(0.5))
                .mul(&y)
                .add(&y.pow(2).scale(0.4))
                .add(&z.scale(0.3))
                .add(&x.mul(&y).mul(&z).scale(0.1));
            let pz = c(1.0)
                .add(&x.scale(0.2))
                .mul(&z)
                .add(&y.pow(2).scale(0.7))
                .add(&x.mul(&y.pow(2)).scale(0.5))
                .add(&y.pow(3).scale(0.3))
                .add(&y.mul(&z).scale(0.4))
                .add(&z.pow(2).scale(0.1));
            map3(vec![px, py, pz])
        }
        "heisenberg-product" => {
            // Source (x1, x2 | y1, y2, y1', y2' | z, z'), target (x1, x2 | y1, y2 | z).
            let v = |i| Poly::var(8, i);
            let pi_yy = v(2).mul(&v(5)).sub(&v(3).mul(&v(4)));
            let source = ExplosiveChart::symmetric(2, 4, 2, 3.0)?;
            let target = ExplosiveChart::symmetric(2, 2, 1, 50.0)?;
            CompatibleMap::from_poly(
                PolyMap::new(
                    8,
                    vec![v(0), v(1), v(2).add(&v(4)), v(3).add(&v(5)), v(6).add(&v(7)).sub(&pi_yy.scale(0.5))],
                )?,
                source,
                target,
            )
        }
        other => Err(Error::Validation(format!("unknown explosion map `{other}`"))),
    }
}
