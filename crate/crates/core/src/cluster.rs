//! Agglomerative clustering of models from their pairwise z-scores.
//!
//! Nodes of a [`Dendrogram`] are numbered the usual way: leaves are
//! `0..n`, and the cluster formed by merge `s` is node `n + s`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::str::FromStr;

use crate::pairstats::ZScores;
use crate::{Error, Result};

/// Default lower clamp on z before taking reciprocals.
pub const DEFAULT_Z_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Linkage {
    /// Unweighted average of cross-cluster dissimilarities.
    Upgma,
    /// Ward's minimum-variance criterion, treating inputs as Euclidean.
    Ward,
    Single,
    Complete,
}

impl Linkage {
    pub const ALL: [Linkage; 4] = [
        Linkage::Upgma,
        Linkage::Ward,
        Linkage::Single,
        Linkage::Complete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Linkage::Upgma => "upgma",
            Linkage::Ward => "ward",
            Linkage::Single => "single",
            Linkage::Complete => "complete",
        }
    }

    /// Lance–Williams update: dissimilarity between cluster `k` and the union
    /// of `i` and `j`, given the three pre-merge dissimilarities and sizes.
    fn update(self, d_ik: f64, d_jk: f64, d_ij: f64, n_i: f64, n_j: f64, n_k: f64) -> f64 {
        match self {
            Linkage::Upgma => (n_i * d_ik + n_j * d_jk) / (n_i + n_j),
            Linkage::Single => d_ik.min(d_jk),
            Linkage::Complete => d_ik.max(d_jk),
            Linkage::Ward => {
                let sq = ((n_i + n_k) * d_ik * d_ik + (n_j + n_k) * d_jk * d_jk
                    - n_k * d_ij * d_ij)
                    / (n_i + n_j + n_k);
                libm::sqrt(sq.max(0.0))
            }
        }
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upgma" | "average" => Ok(Linkage::Upgma),
            "ward" => Ok(Linkage::Ward),
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            _ => Err(Error::InvalidParameter("unknown linkage")),
        }
    }
}

/// Symmetric, nonnegative dissimilarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    // n × n, row-major
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// `d` is the full row-major `n × n` matrix.
    pub fn new(labels: Vec<String>, d: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if d.len() != n * n {
            return Err(Error::InvalidMatrix("size does not match labels"));
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::InvalidMatrix("nonzero diagonal"));
            }
            for j in i + 1..n {
                let x = d[i * n + j];
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidMatrix("entries must be finite and nonnegative"));
                }
                if x.to_bits() != d[j * n + i].to_bits() {
                    return Err(Error::InvalidMatrix("not symmetric"));
                }
            }
        }
        Ok(DistanceMatrix { labels, d })
    }

    /// Builds from a function of `(i, j)` evaluated for `i < j`.
    pub fn from_fn(labels: Vec<String>, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = labels.len();
        let mut d = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let x = f(i, j);
                d[i * n + j] = x;
                d[j * n + i] = x;
            }
        }
        Self::new(labels, d)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.labels.len() + j]
    }
}

/// `d(i, j) = 1 / max(z(i, j), z_floor)`. Every pair must have a z-score.
pub fn z_to_distance(z: &ZScores, z_floor: f64) -> Result<DistanceMatrix> {
    if !(z_floor > 0.0 && z_floor.is_finite()) {
        return Err(Error::InvalidParameter("z_floor must be positive and finite"));
    }
    let labels = z.labels().to_vec();
    let n = labels.len();
    for i in 0..n {
        for j in i + 1..n {
            if z.get(i, j).is_none() {
                return Err(Error::MissingPair(labels[i].clone(), labels[j].clone()));
            }
        }
    }
    DistanceMatrix::from_fn(labels, |i, j| {
        1.0 / z.get(i, j).expect("checked above").max(z_floor)
    })
}

/// One agglomeration step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    /// Leaves under the new node.
    pub count: usize,
}

/// Binary merge tree over labelled leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: Vec<String>,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Checks that `merges` forms a single binary tree over `leaves`.
    pub fn new(leaves: Vec<String>, merges: Vec<Merge>) -> Result<Self> {
        let n = leaves.len();
        if n == 0 {
            return Err(Error::InvalidDendrogram("no leaves"));
        }
        if merges.len() != n - 1 {
            return Err(Error::InvalidDendrogram("need exactly n - 1 merges"));
        }
        let mut used = alloc::vec![false; 2 * n - 1];
        let mut counts: Vec<usize> = alloc::vec![1; n];
        for (s, m) in merges.iter().enumerate() {
            let next = n + s;
            if m.left >= next || m.right >= next || m.left == m.right {
                return Err(Error::InvalidDendrogram("merge refers to an unformed node"));
            }
            if used[m.left] || used[m.right] {
                return Err(Error::InvalidDendrogram("node merged twice"));
            }
            used[m.left] = true;
            used[m.right] = true;
            if m.count != counts[m.left] + counts[m.right] {
                return Err(Error::InvalidDendrogram("inconsistent member count"));
            }
            if !(m.height.is_finite() && m.height >= 0.0) {
                return Err(Error::InvalidDendrogram("height must be finite and nonnegative"));
            }
            counts.push(m.count);
        }
        Ok(Dendrogram { leaves, merges })
    }

    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn root(&self) -> usize {
        2 * self.leaves.len() - 2
    }

    fn children(&self, node: usize) -> Option<(usize, usize)> {
        let n = self.leaves.len();
        (node >= n).then(|| {
            let m = &self.merges[node - n];
            (m.left, m.right)
        })
    }

    fn height(&self, node: usize) -> f64 {
        let n = self.leaves.len();
        if node < n {
            0.0
        } else {
            self.merges[node - n].height
        }
    }

    /// Smallest leaf index under each node.
    fn min_leaf(&self) -> Vec<usize> {
        let mut min: Vec<usize> = (0..self.leaves.len()).collect();
        for m in &self.merges {
            min.push(min[m.left].min(min[m.right]));
        }
        min
    }

    /// Children of `node` with the one holding the smaller leaf index first.
    fn ordered_children(&self, node: usize, min: &[usize]) -> Option<(usize, usize)> {
        self.children(node)
            .map(|(a, b)| if min[a] <= min[b] { (a, b) } else { (b, a) })
    }

    /// Leaf indices under `node`, ascending.
    pub fn members(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = alloc::vec![node];
        while let Some(x) = stack.pop() {
            match self.children(x) {
                Some((a, b)) => {
                    stack.push(a);
                    stack.push(b);
                }
                None => out.push(x),
            }
        }
        out.sort_unstable();
        out
    }
}

/// Standard agglomerative clustering with Lance–Williams updates.
///
/// At each step the closest pair of active clusters is merged; ties go to
/// the pair whose (smaller, larger) representative indices are
/// lexicographically smallest, where a cluster's representative is its
/// smallest leaf index. Merge heights are the raw inter-cluster
/// dissimilarity.
pub fn agglomerate(dm: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dm.len();
    if n < 2 {
        return Err(Error::TooFewLabels(n));
    }
    // Slot `i` holds the active cluster whose representative is leaf `i`.
    let mut d = dm.d.clone();
    let mut active = alloc::vec![true; n];
    let mut size = alloc::vec![1usize; n];
    let mut node: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..n).filter(|&i| active[i]) {
            for j in (i + 1..n).filter(|&j| active[j]) {
                let x = d[i * n + j];
                if best.is_none_or(|(_, _, b)| x < b) {
                    best = Some((i, j, x));
                }
            }
        }
        let (i, j, height) = best.expect("at least two active clusters");
        let (n_i, n_j) = (size[i] as f64, size[j] as f64);
        for k in (0..n).filter(|&k| active[k] && k != i && k != j) {
            let x = linkage.update(d[i * n + k], d[j * n + k], height, n_i, n_j, size[k] as f64);
            d[i * n + k] = x;
            d[k * n + i] = x;
        }
        merges.push(Merge {
            left: node[i],
            right: node[j],
            height,
            count: size[i] + size[j],
        });
        active[j] = false;
        size[i] += size[j];
        node[i] = n + step;
    }
    Dendrogram::new(dm.labels.clone(), merges)
}

/// Partition of leaf indices obtained by undoing the last `k - 1` merges.
/// Clusters are listed by their smallest member; members are ascending.
pub fn cut_clusters(dend: &Dendrogram, k: usize) -> Result<Vec<Vec<usize>>> {
    let n = dend.n_leaves();
    if k == 0 || k > n {
        return Err(Error::InvalidK(k as u64));
    }
    // cluster label per node, union applied for the first n - k merges
    let mut owner: Vec<usize> = (0..n).collect();
    let mut groups: Vec<Vec<usize>> = (0..n).map(|i| alloc::vec![i]).collect();
    for m in &dend.merges[..n - k] {
        let (a, b) = (owner_of(dend, &owner, m.left), owner_of(dend, &owner, m.right));
        let moved = core::mem::take(&mut groups[b]);
        for &leaf in &moved {
            owner[leaf] = a;
        }
        groups[a].extend(moved);
    }
    let mut out: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    for g in &mut out {
        g.sort_unstable();
    }
    out.sort_unstable_by_key(|g| g[0]);
    Ok(out)
}

fn owner_of(dend: &Dendrogram, owner: &[usize], node: usize) -> usize {
    // any leaf under the node carries the node's current group
    let mut x = node;
    while let Some((a, _)) = dend.children(x) {
        x = a;
    }
    owner[x]
}

/// Leaf indices in depth-first order, visiting first the child that holds
/// the smallest leaf index.
pub fn leaf_order(dend: &Dendrogram) -> Vec<usize> {
    let min = dend.min_leaf();
    let mut out = Vec::with_capacity(dend.n_leaves());
    let mut stack = alloc::vec![dend.root()];
    while let Some(x) = stack.pop() {
        match dend.ordered_children(x, &min) {
            Some((first, second)) => {
                stack.push(second);
                stack.push(first);
            }
            None => out.push(x),
        }
    }
    out
}

/// Newick text. Each branch length is the parent's height minus the
/// child's; leaves sit at height 0. Children are written in [`leaf_order`].
pub fn to_newick(dend: &Dendrogram) -> String {
    enum Step {
        Enter(usize, Option<usize>),
        Comma,
        Close(usize, Option<usize>),
    }
    let min = dend.min_leaf();
    let mut out = String::new();
    let mut stack = alloc::vec![Step::Enter(dend.root(), None)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(x, parent) => match dend.ordered_children(x, &min) {
                Some((a, b)) => {
                    out.push('(');
                    stack.push(Step::Close(x, parent));
                    stack.push(Step::Enter(b, Some(x)));
                    stack.push(Step::Comma);
                    stack.push(Step::Enter(a, Some(x)));
                }
                None => {
                    push_label(&mut out, &dend.leaves[x]);
                    push_length(&mut out, dend, x, parent);
                }
            },
            Step::Comma => out.push(','),
            Step::Close(x, parent) => {
                out.push(')');
                push_length(&mut out, dend, x, parent);
            }
        }
    }
    out.push(';');
    out
}

fn push_length(out: &mut String, dend: &Dendrogram, node: usize, parent: Option<usize>) {
    if let Some(p) = parent {
        out.push(':');
        out.push_str(&format_length(dend.height(p) - dend.height(node)));
    }
}

/// Four decimal places with trailing zeros removed.
pub fn format_length(x: f64) -> String {
    let mut s = alloc::format!("{x:.4}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = String::from("0");
    }
    s
}

fn push_label(out: &mut String, label: &str) {
    let plain = !label.is_empty()
        && !label
            .chars()
            .any(|c| c.is_whitespace() || "()[]':;,_".contains(c));
    if plain {
        out.push_str(label);
    } else {
        out.push('\'');
        for c in label.chars() {
            if c == '\'' {
                out.push('\'');
            }
            out.push(c);
        }
        out.push('\'');
    }
}

/// Cophenetic dissimilarities: the height at which two leaves first share a
/// cluster.
pub fn cophenetic(dend: &Dendrogram) -> DistanceMatrix {
    let n = dend.n_leaves();
    let mut c = alloc::vec![0.0; n * n];
    for m in &dend.merges {
        let left = dend.members(m.left);
        let right = dend.members(m.right);
        for &a in &left {
            for &b in &right {
                c[a * n + b] = m.height;
                c[b * n + a] = m.height;
            }
        }
    }
    DistanceMatrix::new(dend.leaves.clone(), c).expect("cophenetic matrix is symmetric")
}

/// Writes the merge list as `[{"left":..,"right":..,"height":..,"count":..}]`
/// with heights at four decimal places.
pub fn merges_json(dend: &Dendrogram) -> String {
    let mut out = String::from("[");
    for (i, m) in dend.merges.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"left\":{},\"right\":{},\"height\":{:.4},\"count\":{}}}",
            m.left, m.right, m.height, m.count
        );
    }
    out.push(']');
    out
}
