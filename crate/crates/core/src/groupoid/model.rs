use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::report::{CheckReport, Residual};
use crate::sampling::SampleRng;
use crate::{Error, Result};

pub type Map = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type Sampler = Arc<dyn Fn(&mut SampleRng) -> std::result::Result<Vec<f64>, String> + Send + Sync>;

/// A Lie groupoid presented by explicit structure maps on coordinate
/// models of the base, the arrows `G`, composable pairs `G2` and composable
/// triples `G3`.
///
/// A pair `(g, h)` composes as `gh` with `s(g) = t(h)`; a triple is
/// `(g, h, k)`. The pair and triple models are parameterisations, so the
/// auxiliary maps below place arrows into them.
#[derive(Clone)]
pub struct GroupoidChartModel {
    pub name: String,
    pub dim_base: usize,
    pub dim_arrow: usize,
    pub dim_pairs: usize,
    pub dim_triples: usize,
    /// Position of the deformation parameter in base coordinates, if any.
    pub hbar_base_index: Option<usize>,
    pub unit: Map,
    pub inv: Map,
    pub src: Map,
    pub tgt: Map,
    pub pr1: Map,
    pub pr2: Map,
    pub mul: Map,
    /// `g -> (g, 1_{s(g)})`
    pub right_unit: Map,
    /// `g -> (1_{t(g)}, g)`
    pub left_unit: Map,
    /// `g -> (g^-1, g)`
    pub left_inverse: Map,
    /// `g -> (g, g^-1)`
    pub right_inverse: Map,
    /// `(g, h, k) -> (h, k)`
    pub drop_first: Map,
    /// `(g, h, k) -> (gh, k)`
    pub mul_left: Map,
    /// `(g, h, k) -> (g, hk)`
    pub mul_right: Map,
    /// `(g, h, k) -> (g, h)`
    pub drop_last: Map,
    pub sample_base: Sampler,
    pub sample_arrow: Sampler,
    pub sample_pair: Sampler,
    pub sample_triple: Sampler,
}

impl fmt::Debug for GroupoidChartModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GroupoidChartModel({}: base {}, arrows {}, pairs {}, triples {})",
            self.name, self.dim_base, self.dim_arrow, self.dim_pairs, self.dim_triples
        )
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::NAN;
    }
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

/// Names of the diagram residuals reported by [`check_axioms`], in order.
pub const DIAGRAMS: &[&str] = &[
    "units",
    "composable_pairs",
    "triple_faces",
    "associativity",
    "s_and_t_a",
    "s_and_t_b",
    "right_unit_pr1",
    "right_unit_pr2",
    "right_unit_m",
    "left_unit_pr1",
    "left_unit_pr2",
    "left_unit_m",
    "s_inv_t_a",
    "s_inv_t_b",
    "left_inverse_pr1",
    "left_inverse_pr2",
    "left_inverse_m",
    "right_inverse_pr1",
    "right_inverse_pr2",
    "right_inverse_m",
];

fn sample(s: &Sampler, rng: &mut SampleRng, diagram: &str) -> Result<Vec<f64>> {
    s(rng).map_err(|reason| Error::Sampler { diagram: diagram.into(), reason })
}

/// Evaluate every groupoid-axiom diagram as a pointwise identity at
/// `n_samples` random base points, arrows, pairs and triples.
pub fn check_axioms(
    model: &GroupoidChartModel,
    n_samples: usize,
    tol: f64,
    rng: &mut SampleRng,
) -> Result<CheckReport> {
    let mut draws = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let b = sample(&model.sample_base, rng, "units")?;
        let g = sample(&model.sample_arrow, rng, "arrows")?;
        let p = sample(&model.sample_pair, rng, "s_and_t")?;
        let t = sample(&model.sample_triple, rng, "associativity")?;
        draws.push((b, g, p, t));
    }
    let m = model;
    let per_sample = |(b, g, p, t): &(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)| -> Vec<Residual> {
        let mut out: Vec<Residual> = DIAGRAMS.iter().map(|n| Residual::new(*n)).collect();
        let mut put = |i: usize, v: f64, at: &[f64]| out[i].observe(v, at);
        let u = (m.unit)(b);
        put(0, dist(&(m.src)(&u), b).max(dist(&(m.tgt)(&u), b)), b);
        put(1, dist(&(m.src)(&(m.pr1)(p)), &(m.tgt)(&(m.pr2)(p))), p);
        let (dl, df) = ((m.drop_last)(t), (m.drop_first)(t));
        let (ml, mr) = ((m.mul_left)(t), (m.mul_right)(t));
        let faces = [
            dist(&(m.pr2)(&dl), &(m.pr1)(&df)),
            dist(&(m.pr1)(&ml), &(m.mul)(&dl)),
            dist(&(m.pr2)(&ml), &(m.pr2)(&df)),
            dist(&(m.pr1)(&mr), &(m.pr1)(&dl)),
            dist(&(m.pr2)(&mr), &(m.mul)(&df)),
        ];
        put(2, faces.iter().cloned().fold(0.0, f64::max), t);
        put(3, dist(&(m.mul)(&ml), &(m.mul)(&mr)), t);
        let gh = (m.mul)(p);
        put(4, dist(&(m.src)(&gh), &(m.src)(&(m.pr2)(p))), p);
        put(5, dist(&(m.tgt)(&gh), &(m.tgt)(&(m.pr1)(p))), p);
        let ru = (m.right_unit)(g);
        put(6, dist(&(m.pr1)(&ru), g), g);
        put(7, dist(&(m.pr2)(&ru), &(m.unit)(&(m.src)(g))), g);
        put(8, dist(&(m.mul)(&ru), g), g);
        let lu = (m.left_unit)(g);
        put(9, dist(&(m.pr1)(&lu), &(m.unit)(&(m.tgt)(g))), g);
        put(10, dist(&(m.pr2)(&lu), g), g);
        put(11, dist(&(m.mul)(&lu), g), g);
        let gi = (m.inv)(g);
        put(12, dist(&(m.src)(&gi), &(m.tgt)(g)), g);
        put(13, dist(&(m.tgt)(&gi), &(m.src)(g)), g);
        let li = (m.left_inverse)(g);
        put(14, dist(&(m.pr1)(&li), &gi), g);
        put(15, dist(&(m.pr2)(&li), g), g);
        put(16, dist(&(m.mul)(&li), &(m.unit)(&(m.src)(g))), g);
        let ri = (m.right_inverse)(g);
        put(17, dist(&(m.pr1)(&ri), g), g);
        put(18, dist(&(m.pr2)(&ri), &gi), g);
        put(19, dist(&(m.mul)(&ri), &(m.unit)(&(m.tgt)(g))), g);
        out
    };
    let residuals = draws
        .par_iter()
        .map(per_sample)
        .reduce(
            || DIAGRAMS.iter().map(|n| Residual::new(*n)).collect(),
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.merge(y);
                }
                a
            },
        );
    Ok(CheckReport::new(residuals, n_samples, tol))
}
