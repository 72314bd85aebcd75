//! Ground truth and synthetic data under the Gaussian design.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{axpy, distance, dot, norm, scale};
use crate::rng::{self, Rng, Stream};

const PROPORTION_TOL: f64 = 1e-12;

/// Two regression vectors and their mixing proportions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModel {
    beta1: Vec<f64>,
    beta2: Vec<f64>,
    p1: f64,
    p2: f64,
}

impl MixtureModel {
    /// `p2` is taken as `1 - p1`.
    pub fn new(beta1: Vec<f64>, beta2: Vec<f64>, p1: f64) -> Result<Self> {
        Self::with_proportions(beta1, beta2, p1, 1.0 - p1)
    }

    pub fn with_proportions(beta1: Vec<f64>, beta2: Vec<f64>, p1: f64, p2: f64) -> Result<Self> {
        if beta1.is_empty() {
            return Err(invalid("dimension k must be positive"));
        }
        if beta1.len() != beta2.len() {
            return Err(invalid("beta1 and beta2 have different dimensions"));
        }
        if beta1.iter().chain(&beta2).any(|x| !x.is_finite()) {
            return Err(invalid("coefficients must be finite"));
        }
        if beta1 == beta2 {
            return Err(invalid("beta1 and beta2 must differ"));
        }
        if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p2) {
            return Err(invalid("proportions must lie in [0, 1]"));
        }
        if (p1 + p2 - 1.0).abs() > PROPORTION_TOL {
            return Err(invalid("proportions must sum to one"));
        }
        Ok(MixtureModel { beta1, beta2, p1, p2 })
    }

    /// β1 uniform on the sphere of radius `radius`; β2 has the same norm and
    /// `⟨β1, β2⟩ = inner_product`.
    pub fn random_with_inner_product(
        k: usize,
        radius: f64,
        inner_product: f64,
        p1: f64,
        rng: &mut Rng,
    ) -> Result<Self> {
        if k < 2 {
            return Err(invalid("a prescribed inner product needs k >= 2"));
        }
        if !(radius > 0.0) {
            return Err(invalid("radius must be positive"));
        }
        let cos = inner_product / (radius * radius);
        if !(cos.abs() < 1.0) {
            return Err(invalid(format!(
                "inner product {inner_product} is not attainable by distinct vectors of norm {radius}"
            )));
        }
        let u = random_unit(k, rng);
        let mut w = random_unit(k, rng);
        let c = dot(&w, &u);
        axpy(-c, &u, &mut w);
        let wn = norm(&w);
        w.iter_mut().for_each(|x| *x /= wn);
        let beta1 = scale(&u, radius);
        let mut beta2 = scale(&u, radius * cos);
        axpy(radius * (1.0 - cos * cos).sqrt(), &w, &mut beta2);
        Self::new(beta1, beta2, p1)
    }

    pub fn k(&self) -> usize {
        self.beta1.len()
    }
    pub fn beta1(&self) -> &[f64] {
        &self.beta1
    }
    pub fn beta2(&self) -> &[f64] {
        &self.beta2
    }
    pub fn p1(&self) -> f64 {
        self.p1
    }
    pub fn p2(&self) -> f64 {
        self.p2
    }
    pub fn pmin(&self) -> f64 {
        self.p1.min(self.p2)
    }
    /// `‖β1 − β2‖₂`
    pub fn separation(&self) -> f64 {
        distance(&self.beta1, &self.beta2)
    }
    pub fn beta(&self, component: Component) -> &[f64] {
        match component {
            Component::First => &self.beta1,
            Component::Second => &self.beta2,
        }
    }
}

/// Which regression vector generated a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    First,
    Second,
}

pub fn random_unit(k: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 0.0 {
            return scale(&v, 1.0 / n);
        }
    }
}

/// Design rows and responses only. This is everything the estimators see.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    n: usize,
    k: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Observations {
    pub fn new(rows: &[Vec<f64>], ys: Vec<f64>) -> Result<Self> {
        if rows.len() != ys.len() {
            return Err(invalid("row and response counts differ"));
        }
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(invalid("rows have inconsistent lengths"));
        }
        Ok(Observations {
            n: rows.len(),
            k,
            xs: rows.concat(),
            ys,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.k..(i + 1) * self.k]
    }
    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }
    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    /// Copy of the given samples, in the given order.
    pub fn select(&self, indices: &[usize]) -> Observations {
        let mut xs = Vec::with_capacity(indices.len() * self.k);
        for &i in indices {
            xs.extend_from_slice(self.x(i));
        }
        Observations {
            n: indices.len(),
            k: self.k,
            xs,
            ys: indices.iter().map(|&i| self.ys[i]).collect(),
        }
    }
}

/// Observations together with the hidden labels that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    observations: Observations,
    labels: Vec<Component>,
    noise_sigma: f64,
}

impl SampleSet {
    pub fn observations(&self) -> &Observations {
        &self.observations
    }
    pub fn labels(&self) -> &[Component] {
        &self.labels
    }
    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }
    pub fn n(&self) -> usize {
        self.observations.n
    }
    pub fn k(&self) -> usize {
        self.observations.k
    }
    pub fn is_noiseless(&self) -> bool {
        self.noise_sigma == 0.0
    }
}

/// Draws `n` samples: `x ~ N(0, I_k)`, label `First` with probability `p1`,
/// `y = ⟨x, β_label⟩ + σ w`. Samples are drawn in order from the data stream
/// of `seed`, so a smaller `n` with the same seed yields a prefix.
pub fn generate(model: &MixtureModel, n: usize, noise_sigma: f64, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(invalid("sample count must be positive"));
    }
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(invalid("noise_sigma must be finite and nonnegative"));
    }
    let k = model.k();
    let mut rng = rng::stream(seed, Stream::Data);
    let mut xs = Vec::with_capacity(n * k);
    let mut ys = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let start = xs.len();
        xs.extend((0..k).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        let label = if rng.random::<f64>() < model.p1 {
            Component::First
        } else {
            Component::Second
        };
        let mut y = dot(&xs[start..], model.beta(label));
        if noise_sigma > 0.0 {
            let w: f64 = StandardNormal.sample(&mut rng);
            y += noise_sigma * w;
        }
        ys.push(y);
        labels.push(label);
    }
    Ok(SampleSet {
        observations: Observations { n, k, xs, ys },
        labels,
        noise_sigma,
    })
}

/// Ordered disjoint index blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplePartition {
    blocks: Vec<Vec<usize>>,
}

impl SamplePartition {
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
    pub fn block(&self, i: usize) -> &[usize] {
        &self.blocks[i]
    }
    pub fn len(&self) -> usize {
        self.blocks.len()
    }
    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Contiguous blocks of the requested sizes in sample order; leftovers unused.
pub fn split(n: usize, sizes: &[usize]) -> Result<SamplePartition> {
    if sizes.contains(&0) {
        return Err(invalid("block sizes must be positive"));
    }
    let total: usize = sizes.iter().sum();
    if total > n {
        return Err(invalid(format!(
            "requested {total} samples across blocks but only {n} available"
        )));
    }
    let mut start = 0;
    let blocks = sizes
        .iter()
        .map(|&s| {
            let b = (start..start + s).collect();
            start += s;
            b
        })
        .collect();
    Ok(SamplePartition { blocks })
}

/// `count` blocks of `n / count` samples each, the remainder going to the last block.
pub fn equal_blocks(n: usize, count: usize) -> Result<SamplePartition> {
    if count == 0 || count > n {
        return Err(invalid(format!(
            "cannot split {n} samples into {count} nonempty blocks"
        )));
    }
    let base = n / count;
    let mut sizes = vec![base; count];
    sizes[count - 1] += n - base * count;
    split(n, &sizes)
}
