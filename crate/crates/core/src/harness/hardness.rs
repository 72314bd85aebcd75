use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::{map_indexed, Execution};
use crate::oracles::{brute_force_mixed_solve, hardness_gadget, SubsetSumInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessOutcome {
    pub values: Vec<f64>,
    pub solvable: bool,
    /// The two value groups encoded by the fitted vectors, smaller group first.
    pub partition: Option<(Vec<f64>, Vec<f64>)>,
}

impl HardnessOutcome {
    /// `solvable, partition {3}|{1,2}` or `not solvable`.
    pub fn message(&self) -> String {
        let fmt = |g: &[f64]| g.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        match &self.partition {
            Some((a, b)) => format!("solvable, partition {{{}}}|{{{}}}", fmt(a), fmt(b)),
            None => "not solvable".to_string(),
        }
    }
}

/// Builds the gadget for `values` and searches it for an exact mixed fit.
/// Coordinate `i` belongs to the first group when `β1_i` reproduces `a_i`.
pub fn hardness_demo(values: &[f64]) -> Result<HardnessOutcome> {
    let inst = SubsetSumInstance::new(values.to_vec())?;
    let (rows, ys) = hardness_gadget(&inst);
    let sol = brute_force_mixed_solve(&rows, &ys, None)?;
    let partition = sol.map(|s| {
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for (i, &a) in values.iter().enumerate() {
            if (s.estimate.beta1[i] - a).abs() <= (s.estimate.beta2[i] - a).abs() {
                first.push(a);
            } else {
                second.push(a);
            }
        }
        if (second.len(), &second) < (first.len(), &first) {
            std::mem::swap(&mut first, &mut second);
        }
        (first, second)
    });
    Ok(HardnessOutcome {
        values: values.to_vec(),
        solvable: partition.is_some(),
        partition,
    })
}

/// Nondecreasing integer sequences of length `1..=max_k` with entries in `1..=max_value`.
pub fn integer_multisets(max_k: usize, max_value: u32) -> Vec<Vec<f64>> {
    fn extend(prefix: &mut Vec<f64>, min: u32, max_value: u32, len: usize, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for v in min..=max_value {
            prefix.push(v as f64);
            extend(prefix, v, max_value, len, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for len in 1..=max_k {
        extend(&mut Vec::with_capacity(len), 1, max_value, len, &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub instances: usize,
    pub solvable: usize,
    pub agreements: usize,
    pub disagreements: Vec<Vec<f64>>,
}

/// Compares gadget solvability with direct equal-partition enumeration on
/// every instance from [`integer_multisets`].
pub fn hardness_crosscheck(max_k: usize, max_value: u32, exec: Execution) -> Result<CrossCheck> {
    let instances = integer_multisets(max_k, max_value);
    let results = map_indexed(instances.len(), exec, |i| -> Result<(bool, bool)> {
        let inst = SubsetSumInstance::new(instances[i].clone())?;
        let (rows, ys) = hardness_gadget(&inst);
        let gadget = brute_force_mixed_solve(&rows, &ys, None)?.is_some();
        Ok((gadget, inst.equal_partition().is_some()))
    });
    let mut out = CrossCheck {
        instances: instances.len(),
        solvable: 0,
        agreements: 0,
        disagreements: Vec::new(),
    };
    for (inst, r) in instances.iter().zip(results) {
        let (gadget, direct) = r?;
        out.solvable += usize::from(direct);
        if gadget == direct {
            out.agreements += 1;
        } else {
            out.disagreements.push(inst.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_messages() {
        assert_eq!(
            hardness_demo(&[1.0, 2.0, 3.0]).unwrap().message(),
            "solvable, partition {3}|{1,2}"
        );
        assert_eq!(hardness_demo(&[1.0, 2.0]).unwrap().message(), "not solvable");
        assert_eq!(
            hardness_demo(&[1.0, 1.0]).unwrap().message(),
            "solvable, partition {1}|{1}"
        );
    }

    #[test]
    fn multiset_count() {
        // C(n + k - 1, k) summed over k.
        assert_eq!(integer_multisets(2, 3).len(), 3 + 6);
    }

    #[test]
    fn small_crosscheck_agrees() {
        let c = hardness_crosscheck(4, 4, Execution::Parallel).unwrap();
        assert_eq!(c.agreements, c.instances);
        assert!(c.solvable > 0);
    }
}
