//! Finite filtered probability spaces.
//!
//! Paths are indexed `0..N`; the filtration is a sequence of partitions of the
//! path indices, one per date `0..=T`, each refining the previous one. A cell
//! of `partitions[t]` is a node of the event tree at date `t`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("no observables supplied")]
    EmptyObservables,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid probabilities: {0}")]
    Probabilities(String),
    #[error("invalid partition at t={time}: {reason}")]
    Partition { time: usize, reason: String },
    #[error("process not adapted: path {path} differs from its cell at t={time}")]
    NotAdapted { path: String, time: usize },
    #[error("conditioning on null event: cell {cell} at t={time} has zero total weight")]
    NullEvent { time: usize, cell: usize },
    #[error("invalid node t={time}, cell={cell}")]
    InvalidNode { time: usize, cell: usize },
}

/// A node of the event tree: a cell of `partitions[time]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub time: usize,
    pub cell: usize,
}

impl NodeRef {
    pub fn new(time: usize, cell: usize) -> Self {
        Self { time, cell }
    }
}

impl std::fmt::Display for NodeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t{}:n{}", self.time, self.cell)
    }
}

/// Values indexed by path and date, stored path-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedProcess {
    n_paths: usize,
    horizon: usize,
    values: Vec<f64>,
}

impl AdaptedProcess {
    pub fn zeros(n_paths: usize, horizon: usize) -> Self {
        Self { n_paths, horizon, values: vec![0.0; n_paths * (horizon + 1)] }
    }

    pub fn constant(n_paths: usize, horizon: usize, c: f64) -> Self {
        Self { n_paths, horizon, values: vec![c; n_paths * (horizon + 1)] }
    }

    /// Builds from one row per path, each holding dates `0..=T`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LatticeError> {
        let n_paths = rows.len();
        if n_paths == 0 {
            return Err(LatticeError::Shape("process has no paths".into()));
        }
        let width = rows[0].len();
        if width == 0 {
            return Err(LatticeError::Shape("process has no dates".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(LatticeError::Shape(format!(
                "row {i} has {} dates, expected {width}",
                rows[i].len()
            )));
        }
        Ok(Self { n_paths, horizon: width - 1, values: rows.concat() })
    }

    pub fn from_fn(n_paths: usize, horizon: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut p = Self::zeros(n_paths, horizon);
        for i in 0..n_paths {
            for t in 0..=horizon {
                p.set(i, t, f(i, t));
            }
        }
        p
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn get(&self, path: usize, t: usize) -> f64 {
        self.values[path * (self.horizon + 1) + t]
    }

    #[inline]
    pub fn set(&mut self, path: usize, t: usize, v: f64) {
        self.values[path * (self.horizon + 1) + t] = v;
    }

    pub fn row(&self, path: usize) -> &[f64] {
        let w = self.horizon + 1;
        &self.values[path * w..(path + 1) * w]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_paths).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, t: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.get(i, t)).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!((self.n_paths, self.horizon), (other.n_paths, other.horizon));
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { values, ..self.clone() }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Per-path sum of the values over dates `from..=T`.
    pub fn tail_sum(&self, from: usize) -> Vec<f64> {
        (0..self.n_paths)
            .map(|i| self.row(i).iter().skip(from).sum())
            .collect()
    }

    /// Backward difference `X_t − X_{t−1}` (zero at `t = 0`).
    pub fn increment(&self, path: usize, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.get(path, t) - self.get(path, t - 1)
        }
    }

    pub fn is_deterministic(&self) -> bool {
        (0..=self.horizon).all(|t| (1..self.n_paths).all(|i| self.get(i, t) == self.get(0, t)))
    }
}

/// Partitions of the paths, one per date, from prefix equality of the observables.
pub fn derive_filtration(observables: &[AdaptedProcess]) -> Result<Vec<Vec<Vec<usize>>>, LatticeError> {
    let first = observables.first().ok_or(LatticeError::EmptyObservables)?;
    let (n, horizon) = (first.n_paths(), first.horizon());
    if let Some(k) = observables.iter().position(|o| o.n_paths() != n || o.horizon() != horizon) {
        return Err(LatticeError::Shape(format!("observable {k} does not match the first one's shape")));
    }
    let mut partitions = vec![vec![(0..n).collect::<Vec<_>>()]];
    let mut parent: Vec<usize> = vec![0; n];
    for t in 1..=horizon {
        let mut cells: Vec<Vec<usize>> = Vec::new();
        let mut cell_of = vec![0; n];
        for i in 0..n {
            let found = cells.iter().position(|cell| {
                let j = cell[0];
                parent[j] == parent[i] && observables.iter().all(|o| o.get(j, t) == o.get(i, t))
            });
            match found {
                Some(c) => {
                    cells[c].push(i);
                    cell_of[i] = c;
                }
                None => {
                    cell_of[i] = cells.len();
                    cells.push(vec![i]);
                }
            }
        }
        partitions.push(cells);
        parent = cell_of;
    }
    Ok(partitions)
}

/// The finite path space `(Ω, 𝔽, ℙ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTree {
    horizon: usize,
    paths: Vec<String>,
    probabilities: Vec<f64>,
    partitions: Vec<Vec<Vec<usize>>>,
    cell_of: Vec<Vec<usize>>,
    children: Vec<Vec<Vec<usize>>>,
}

impl EventTree {
    pub fn new(probabilities: Vec<f64>, partitions: Vec<Vec<Vec<usize>>>) -> Result<Self, LatticeError> {
        let n = probabilities.len();
        if n == 0 {
            return Err(LatticeError::Probabilities("no paths".into()));
        }
        if let Some(i) = probabilities.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(LatticeError::Probabilities(format!(
                "probability of path ω{} is {}, must be strictly positive",
                i + 1,
                probabilities[i]
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LatticeError::Probabilities(format!("probabilities sum to {total}, not 1")));
        }
        if partitions.len() < 2 {
            return Err(LatticeError::Partition { time: 0, reason: "horizon must be at least 1".into() });
        }
        let horizon = partitions.len() - 1;

        let mut cell_of = Vec::with_capacity(horizon + 1);
        for (t, cells) in partitions.iter().enumerate() {
            let mut owner = vec![usize::MAX; n];
            for (c, cell) in cells.iter().enumerate() {
                if cell.is_empty() {
                    return Err(LatticeError::Partition { time: t, reason: format!("cell {c} is empty") });
                }
                for &i in cell {
                    if i >= n {
                        return Err(LatticeError::Partition { time: t, reason: format!("path index {i} out of range") });
                    }
                    if owner[i] != usize::MAX {
                        return Err(LatticeError::Partition { time: t, reason: format!("path {i} in two cells") });
                    }
                    owner[i] = c;
                }
            }
            if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
                return Err(LatticeError::Partition { time: t, reason: format!("path {i} not covered") });
            }
            cell_of.push(owner);
        }
        if partitions[0].len() != 1 {
            return Err(LatticeError::Partition { time: 0, reason: "must be the single cell of all paths".into() });
        }

        let mut children = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let mut kids = vec![Vec::new(); partitions[t].len()];
            for (c, cell) in partitions[t + 1].iter().enumerate() {
                let p = cell_of[t][cell[0]];
                if cell.iter().any(|&i| cell_of[t][i] != p) {
                    return Err(LatticeError::Partition {
                        time: t + 1,
                        reason: format!("cell {c} straddles two cells at t={t}"),
                    });
                }
                kids[p].push(c);
            }
            children.push(kids);
        }
        children.push(vec![Vec::new(); partitions[horizon].len()]);

        let mut partitions = partitions;
        for cells in partitions.iter_mut() {
            for cell in cells.iter_mut() {
                cell.sort_unstable();
            }
        }
        Ok(Self {
            horizon,
            paths: (1..=n).map(|i| format!("ω{i}")).collect(),
            probabilities,
            partitions,
            cell_of,
            children,
        })
    }

    /// The natural filtration of `observables`.
    pub fn from_observables(probabilities: Vec<f64>, observables: &[AdaptedProcess]) -> Result<Self, LatticeError> {
        let partitions = derive_filtration(observables)?;
        if partitions.len() < 2 {
            return Err(LatticeError::Partition { time: 0, reason: "horizon must be at least 1".into() });
        }
        if observables[0].n_paths() != probabilities.len() {
            return Err(LatticeError::Shape(format!(
                "{} probabilities for {} paths",
                probabilities.len(),
                observables[0].n_paths()
            )));
        }
        Self::new(probabilities, partitions)
    }

    pub fn with_path_names(mut self, names: Vec<String>) -> Result<Self, LatticeError> {
        if names.len() != self.n_paths() {
            return Err(LatticeError::Shape(format!("{} names for {} paths", names.len(), self.n_paths())));
        }
        self.paths = names;
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_paths(&self) -> usize {
        self.probabilities.len()
    }

    pub fn path_name(&self, i: usize) -> &str {
        &self.paths[i]
    }

    pub fn path_names(&self) -> &[String] {
        &self.paths
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn partitions(&self) -> &[Vec<Vec<usize>>] {
        &self.partitions
    }

    pub fn n_nodes(&self, t: usize) -> usize {
        self.partitions[t].len()
    }

    pub fn nodes_at(&self, t: usize) -> impl Iterator<Item = NodeRef> + '_ {
        (0..self.partitions[t].len()).map(move |c| NodeRef::new(t, c))
    }

    pub fn root(&self) -> NodeRef {
        NodeRef::new(0, 0)
    }

    pub fn check_node(&self, node: NodeRef) -> Result<(), LatticeError> {
        if node.time > self.horizon || node.cell >= self.partitions[node.time].len() {
            return Err(LatticeError::InvalidNode { time: node.time, cell: node.cell });
        }
        Ok(())
    }

    pub fn paths_of(&self, node: NodeRef) -> &[usize] {
        &self.partitions[node.time][node.cell]
    }

    pub fn node_of(&self, path: usize, t: usize) -> NodeRef {
        NodeRef::new(t, self.cell_of[t][path])
    }

    pub fn children(&self, node: NodeRef) -> impl Iterator<Item = NodeRef> + '_ {
        self.children[node.time][node.cell].iter().map(move |&c| NodeRef::new(node.time + 1, c))
    }

    pub fn parent(&self, node: NodeRef) -> Option<NodeRef> {
        (node.time > 0).then(|| self.node_of(self.paths_of(node)[0], node.time - 1))
    }

    /// Whether `inner` lies in the subtree rooted at `outer` (including itself).
    pub fn is_descendant(&self, inner: NodeRef, outer: NodeRef) -> bool {
        inner.time >= outer.time && self.node_of(self.paths_of(inner)[0], outer.time) == outer
    }

    pub fn node_probability(&self, node: NodeRef) -> f64 {
        self.paths_of(node).iter().map(|&i| self.probabilities[i]).sum()
    }

    /// Checks that each date's values are constant on the cells of that date.
    pub fn check_adapted(&self, p: &AdaptedProcess, tol: f64) -> Result<(), LatticeError> {
        self.check_shape(p)?;
        for t in 0..=self.horizon {
            self.check_measurable_at(p, t, t, tol)?;
        }
        Ok(())
    }

    /// Checks that the values at date `t` are `𝓕_{t−1}`-measurable for `t ≥ 1`.
    pub fn check_predictable(&self, p: &AdaptedProcess, tol: f64) -> Result<(), LatticeError> {
        self.check_shape(p)?;
        for t in 1..=self.horizon {
            self.check_measurable_at(p, t, t - 1, tol)?;
        }
        Ok(())
    }

    pub fn check_shape(&self, p: &AdaptedProcess) -> Result<(), LatticeError> {
        if p.n_paths() != self.n_paths() || p.horizon() != self.horizon {
            return Err(LatticeError::Shape(format!(
                "process is {}×{}, tree is {}×{}",
                p.n_paths(),
                p.horizon() + 1,
                self.n_paths(),
                self.horizon + 1
            )));
        }
        Ok(())
    }

    fn check_measurable_at(&self, p: &AdaptedProcess, t: usize, level: usize, tol: f64) -> Result<(), LatticeError> {
        for cell in &self.partitions[level] {
            let v = p.get(cell[0], t);
            if let Some(&i) = cell.iter().find(|&&i| (p.get(i, t) - v).abs() > tol) {
                return Err(LatticeError::NotAdapted { path: self.paths[i].clone(), time: t });
            }
        }
        Ok(())
    }

    /// Whether the per-path values `x` are constant on the cells of date `t`.
    pub fn is_measurable(&self, x: &[f64], t: usize) -> bool {
        self.partitions[t].iter().all(|cell| cell.iter().all(|&i| x[i] == x[cell[0]]))
    }

    /// Weighted conditional expectation at date `t`, returned per path.
    pub fn conditional_expectation(&self, x: &[f64], t: usize, weights: &[f64]) -> Result<Vec<f64>, LatticeError> {
        let node_vals = self.conditional_expectation_nodes(x, t, weights)?;
        Ok((0..self.n_paths()).map(|i| node_vals[self.cell_of[t][i]]).collect())
    }

    /// Weighted conditional expectation at date `t`, one value per cell.
    pub fn conditional_expectation_nodes(&self, x: &[f64], t: usize, weights: &[f64]) -> Result<Vec<f64>, LatticeError> {
        let n = self.n_paths();
        if x.len() != n || weights.len() != n {
            return Err(LatticeError::Shape(format!("expected {n} values and weights")));
        }
        if t > self.horizon {
            return Err(LatticeError::InvalidNode { time: t, cell: 0 });
        }
        self.partitions[t]
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                let mass: f64 = cell.iter().map(|&i| weights[i]).sum();
                if !(mass > 0.0) {
                    return Err(LatticeError::NullEvent { time: t, cell: c });
                }
                Ok(cell.iter().map(|&i| weights[i] * x[i]).sum::<f64>() / mass)
            })
            .collect()
    }

    /// `𝔼ₜ^ℙ[x]` per path.
    pub fn expectation_at(&self, x: &[f64], t: usize) -> Vec<f64> {
        self.conditional_expectation(x, t, &self.probabilities)
            .expect("ℙ has full support and shapes are checked by the caller")
    }

    /// `𝔼^ℙ[x | node]`.
    pub fn expectation_on(&self, x: &[f64], node: NodeRef) -> f64 {
        let cell = self.paths_of(node);
        let mass: f64 = cell.iter().map(|&i| self.probabilities[i]).sum();
        cell.iter().map(|&i| self.probabilities[i] * x[i]).sum::<f64>() / mass
    }
}
