//! Labelled datasets, node shards and the synthetic heterogeneous generator.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{global_stream, Purpose};

/// Samples with features stored row-major as `f32`, labels in `[0, classes)`,
/// and an assignment of every sample to one of `num_shards` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f32>,
    labels: Vec<u32>,
    num_features: usize,
    num_classes: usize,
    shard_of: Vec<usize>,
    shards: Vec<Vec<usize>>,
    /// Data-generating group of each sample, when known.
    groups: Option<Vec<usize>>,
}

impl Dataset {
    /// A dataset with all samples in a single shard.
    pub fn new(
        features: Vec<f32>,
        labels: Vec<u32>,
        num_features: usize,
        num_classes: usize,
    ) -> Result<Self> {
        let n = labels.len();
        if num_features == 0 || features.len() != n * num_features {
            return Err(Error::Data(format!(
                "{} feature values do not form {n} rows of {num_features}",
                features.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y as usize >= num_classes) {
            return Err(Error::Data(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            num_features,
            num_classes,
            shard_of: vec![0; n],
            shards: vec![(0..n).collect()],
            groups: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn x(&self, i: usize) -> &[f32] {
        &self.features[i * self.num_features..(i + 1) * self.num_features]
    }

    pub fn y(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_shards(&self) -> usize {
        self.shards.len()
    }

    pub fn shard(&self, node: usize) -> &[usize] {
        &self.shards[node]
    }

    pub fn shard_of(&self) -> &[usize] {
        &self.shard_of
    }

    pub fn groups(&self) -> Option<&[usize]> {
        self.groups.as_deref()
    }

    /// Empirical node weights `p_i = n_i / n`.
    pub fn node_weights(&self) -> Vec<f64> {
        let n = self.len() as f64;
        self.shards.iter().map(|s| s.len() as f64 / n).collect()
    }

    pub fn with_groups(mut self, groups: Vec<usize>) -> Result<Self> {
        if groups.len() != self.len() {
            return Err(Error::Data("group metadata length mismatch".into()));
        }
        self.groups = Some(groups);
        Ok(self)
    }

    /// Reassigns samples to `num_shards` nodes. Every node must be nonempty.
    pub fn with_shards(mut self, shard_of: Vec<usize>, num_shards: usize) -> Result<Self> {
        if shard_of.len() != self.len() {
            return Err(Error::Data("shard assignment length mismatch".into()));
        }
        let mut shards = vec![Vec::new(); num_shards];
        for (i, &s) in shard_of.iter().enumerate() {
            if s >= num_shards {
                return Err(Error::Data(format!(
                    "sample {i} assigned to shard {s} of {num_shards}"
                )));
            }
            shards[s].push(i);
        }
        if let Some(empty) = shards.iter().position(Vec::is_empty) {
            return Err(Error::Data(format!("node {empty} received no samples")));
        }
        self.shard_of = shard_of;
        self.shards = shards;
        Ok(self)
    }

    /// Evaluation groups: the generating groups when known, else the shards.
    pub fn eval_groups(&self) -> Vec<Vec<usize>> {
        match &self.groups {
            Some(g) => {
                let k = g.iter().copied().max().map_or(0, |x| x + 1);
                let mut out = vec![Vec::new(); k];
                for (i, &gi) in g.iter().enumerate() {
                    out[gi].push(i);
                }
                out
            }
            None => self.shards.clone(),
        }
    }
}

/// Which nodes own which class under a class-wise split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClasswisePlacement {
    nodes: usize,
    /// `order[k]` is the class placed in slot `k`.
    order: Vec<usize>,
}

impl ClasswisePlacement {
    /// Slot `k` holds class `k`, or a seeded shuffle of the classes.
    pub fn new(nodes: usize, classes: usize, seed: Option<u64>) -> Self {
        let mut order: Vec<usize> = (0..classes).collect();
        if let Some(seed) = seed {
            order.shuffle(&mut global_stream(seed, Purpose::Placement));
        }
        ClasswisePlacement { nodes, order }
    }

    /// Nodes that own the class in slot `k`: with at least as many nodes as
    /// classes, node `i` serves slot `i mod C`; otherwise slot `k` goes to node `k mod m`.
    fn owners(&self, slot: usize) -> Vec<usize> {
        let c = self.order.len();
        if self.nodes >= c {
            (0..self.nodes).filter(|i| i % c == slot).collect()
        } else {
            vec![slot % self.nodes]
        }
    }

    /// Splits `data` so that each class lands on its owners, round-robin when
    /// a class has several owners.
    pub fn apply(&self, data: Dataset) -> Result<Dataset> {
        if self.order.len() != data.num_classes() {
            return Err(Error::Data(
                "placement built for a different class count".into(),
            ));
        }
        let mut slot_of_class = vec![0; self.order.len()];
        for (slot, &c) in self.order.iter().enumerate() {
            slot_of_class[c] = slot;
        }
        let owners: Vec<Vec<usize>> = (0..self.order.len()).map(|s| self.owners(s)).collect();
        let mut seen = vec![0usize; self.order.len()];
        let mut shard_of = Vec::with_capacity(data.len());
        for i in 0..data.len() {
            let c = data.y(i);
            let own = &owners[slot_of_class[c]];
            shard_of.push(own[seen[c] % own.len()]);
            seen[c] += 1;
        }
        if let Some(empty) = seen.iter().position(|&k| k == 0) {
            return Err(Error::Data(format!("class {empty} has no samples")));
        }
        data.with_shards(shard_of, self.nodes)
    }
}

/// Class-wise split of `data` over `nodes` nodes.
pub fn partition_classwise(
    data: Dataset,
    nodes: usize,
    placement_seed: Option<u64>,
) -> Result<Dataset> {
    if nodes == 0 {
        return Err(Error::Data("need at least one node".into()));
    }
    ClasswisePlacement::new(nodes, data.num_classes(), placement_seed).apply(data)
}

/// Binary Gaussian task where a minority of nodes sees a mean-shifted input
/// distribution.
///
/// Feature 0 carries the label: `x0 = s * separation + shift * [minority] + noise`
/// with `s = +1` for class 1 and `-1` for class 0. The remaining features are
/// pure noise. Minority nodes are the last `minority_nodes` indices and form
/// group 1; all other nodes form group 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub nodes: usize,
    pub features: usize,
    pub samples_per_node: usize,
    pub minority_nodes: usize,
    pub separation: f64,
    pub shift: f64,
    pub noise: f64,
}

impl SynthSpec {
    pub fn new(nodes: usize, features: usize, shift: f64) -> Self {
        SynthSpec {
            nodes,
            features,
            samples_per_node: 200,
            minority_nodes: (nodes / 5).max(1),
            separation: 2.0,
            shift,
            noise: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::Data("synthetic data needs at least 2 nodes".into()));
        }
        if self.features == 0 || self.samples_per_node < 2 {
            return Err(Error::Data(
                "synthetic data needs features >= 1 and samples_per_node >= 2".into(),
            ));
        }
        if self.minority_nodes >= self.nodes {
            return Err(Error::Data(
                "minority must leave at least one majority node".into(),
            ));
        }
        if ![self.separation, self.shift, self.noise]
            .iter()
            .all(|v| v.is_finite())
            || self.noise < 0.0
        {
            return Err(Error::Data(
                "synthetic parameters must be finite, noise >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn is_minority(&self, node: usize) -> bool {
        node >= self.nodes - self.minority_nodes
    }

    /// One draw of `samples_per_node` points per node; labels alternate so
    /// every shard is class-balanced.
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        self.generate_n(seed, self.samples_per_node)
    }

    /// Train and test draws from independent streams.
    pub fn generate_split(&self, seed: u64, test_per_node: usize) -> Result<(Dataset, Dataset)> {
        let train = self.generate_n(seed, self.samples_per_node)?;
        let test = self.generate_n(seed ^ 0x7e57_7e57_7e57_7e57, test_per_node)?;
        Ok((train, test))
    }

    fn generate_n(&self, seed: u64, per_node: usize) -> Result<Dataset> {
        self.validate()?;
        let mut rng = global_stream(seed, Purpose::Data);
        let n = self.nodes * per_node;
        let mut features = Vec::with_capacity(n * self.features);
        let mut labels = Vec::with_capacity(n);
        let mut shard_of = Vec::with_capacity(n);
        let mut groups = Vec::with_capacity(n);
        for node in 0..self.nodes {
            let minority = self.is_minority(node);
            for k in 0..per_node {
                let y = (k % 2) as u32;
                let s = if y == 1 { 1.0 } else { -1.0 };
                let offset = if minority { self.shift } else { 0.0 };
                for j in 0..self.features {
                    let z: f64 = rng.sample(StandardNormal);
                    let mean = if j == 0 {
                        s * self.separation + offset
                    } else {
                        0.0
                    };
                    features.push((mean + self.noise * z) as f32);
                }
                labels.push(y);
                shard_of.push(node);
                groups.push(minority as usize);
            }
        }
        Dataset::new(features, labels, self.features, 2)?
            .with_shards(shard_of, self.nodes)?
            .with_groups(groups)
    }
}

/// Synthetic heterogeneous dataset with default sizes.
pub fn synth_heterogeneous(
    nodes: usize,
    features: usize,
    shift: f64,
    seed: u64,
) -> Result<Dataset> {
    SynthSpec::new(nodes, features, shift).generate(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(labels: &[u32], classes: usize) -> Dataset {
        let feats = labels.iter().map(|&y| y as f32).collect();
        Dataset::new(feats, labels.to_vec(), 1, classes).unwrap()
    }

    #[test]
    fn classwise_ten_nodes_ten_classes() {
        let labels: Vec<u32> = (0..50).map(|i| i % 10).collect();
        let d = partition_classwise(labelled(&labels, 10), 10, None).unwrap();
        for node in 0..10 {
            assert!(d.shard(node).iter().all(|&i| d.y(i) == node));
            assert_eq!(d.shard(node).len(), 5);
        }
        assert!(d.node_weights().iter().all(|&p| (p - 0.1).abs() < 1e-15));
    }

    #[test]
    fn classwise_small_cases() {
        let d = partition_classwise(labelled(&[0, 1, 0, 1], 2), 2, None).unwrap();
        assert_eq!(d.node_weights(), vec![0.5, 0.5]);
        let d = partition_classwise(labelled(&[0, 1, 2], 3), 1, None).unwrap();
        assert_eq!(d.node_weights(), vec![1.0]);
        // more nodes than classes: class 0 split over nodes 0 and 2
        let d = partition_classwise(labelled(&[0, 0, 1, 1], 2), 4, None).unwrap();
        assert_eq!(d.shard(0), &[0]);
        assert_eq!(d.shard(2), &[1]);
        assert!(partition_classwise(labelled(&[0, 0], 2), 2, None).is_err());
    }

    #[test]
    fn placement_seed_permutes_classes() {
        let labels: Vec<u32> = (0..40).map(|i| i % 10).collect();
        let a = partition_classwise(labelled(&labels, 10), 10, Some(3)).unwrap();
        let b = partition_classwise(labelled(&labels, 10), 10, Some(3)).unwrap();
        assert_eq!(a, b);
        let classes: Vec<usize> = (0..10).map(|n| a.y(a.shard(n)[0])).collect();
        let mut sorted = classes.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_ne!(classes, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn synth_is_deterministic() {
        let a = synth_heterogeneous(5, 3, 1.5, 9).unwrap();
        let b = synth_heterogeneous(5, 3, 1.5, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_heterogeneous(5, 3, 1.5, 10).unwrap());
        assert_eq!(a.groups().unwrap().iter().filter(|&&g| g == 1).count(), 200);
    }

    #[test]
    fn large_shift_defeats_majority_bayes_rule() {
        // group-0 Bayes rule is "x0 > 0"; shifted minority points all land on
        // the class-1 side, so its accuracy there is the class prior
        let spec = SynthSpec {
            shift: 30.0,
            ..SynthSpec::new(10, 2, 30.0)
        };
        let d = spec.generate(1).unwrap();
        let groups = d.groups().unwrap();
        let (mut hit, mut tot) = (0, 0);
        for i in 0..d.len() {
            if groups[i] == 1 {
                tot += 1;
                hit += ((d.x(i)[0] > 0.0) as usize == d.y(i)) as usize;
            }
        }
        let acc = hit as f64 / tot as f64;
        assert!((acc - 0.5).abs() < 0.02, "{acc}");
    }

    #[test]
    fn zero_shift_groups_share_a_distribution() {
        let spec = SynthSpec {
            samples_per_node: 2000,
            ..SynthSpec::new(5, 1, 0.0)
        };
        let d = spec.generate(2).unwrap();
        let groups = d.groups().unwrap();
        let mean = |g: usize| {
            let v: Vec<f64> = (0..d.len())
                .filter(|&i| groups[i] == g && d.y(i) == 1)
                .map(|i| d.x(i)[0] as f64)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!((mean(0) - mean(1)).abs() < 0.1);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![0.0; 3], vec![0, 1], 2, 2).is_err());
        assert!(Dataset::new(vec![0.0; 2], vec![0, 5], 1, 2).is_err());
        let d = labelled(&[0, 1], 2);
        assert!(d.with_shards(vec![0, 0], 2).is_err());
    }
}
