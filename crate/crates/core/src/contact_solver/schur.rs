//! Reduction of the linearized momentum system onto the DoFs touched by
//! contacts, and recovery of the remaining velocities afterwards.

use std::sync::Arc;

use crate::collision::ContactJacobian;
use crate::sparse::{CholeskyFactor, Ordering, SparsePattern, SymMatrix, SymbolicCholesky};

use super::SolverError;

/// Split of the velocity DoFs into participating and non-participating
/// sets, both in ascending order.
///
/// A DoF participates when some contact Jacobian row touches it. A connected
/// group of untouched DoFs whose elimination would fill in more entries than
/// it holds participates as well, so that `S_p` stays sparse.
#[derive(Clone, Debug)]
pub struct DofPartition {
    pub n: usize,
    pub participating: Vec<usize>,
    pub non_participating: Vec<usize>,
    /// Local index of each global DoF within its set.
    local: Vec<usize>,
    /// Participating local indices coupled through each eliminated group.
    fill_groups: Vec<Vec<usize>>,
    /// Fill groups each participating DoF belongs to.
    groups_of: Vec<Vec<usize>>,
    a_pp: SymMatrix,
    a_nn: SymMatrix,
    /// For each participating DoF, its couplings `(non-participating local index, value)`.
    a_pn: Vec<Vec<(usize, f64)>>,
    /// Contact Jacobian restricted to the participating DoFs.
    pub jacobian: ContactJacobian,
}

pub fn partition_dofs(a: &SymMatrix, jacobian: &ContactJacobian) -> DofPartition {
    let n = a.dim();
    let pattern = a.pattern();
    let mut touched = vec![false; n];
    for block in &jacobian.blocks {
        for (d, c) in block {
            if c.iter().any(|x| *x != 0.0) {
                touched[*d] = true;
            }
        }
    }

    // Connected groups of untouched DoFs and the touched DoFs bordering them.
    let root = components(pattern, |i| !touched[i]);
    let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in (0..n).filter(|&i| !touched[i]) {
        members.entry(root[i]).or_default().push(i);
    }
    let mut participates = touched.clone();
    let mut borders = Vec::new();
    for group in members.values() {
        let mut border = std::collections::BTreeSet::new();
        let mut nnz = 0;
        for &j in group {
            for &i in pattern.column(j) {
                nnz += 1;
                if touched[i] {
                    border.insert(i);
                }
            }
        }
        let b = border.len();
        if b * (b + 1) / 2 > nnz {
            group.iter().for_each(|&i| participates[i] = true);
        } else if b > 0 {
            borders.push(border.into_iter().collect::<Vec<_>>());
        }
    }

    let participating: Vec<usize> = (0..n).filter(|&i| participates[i]).collect();
    let non_participating: Vec<usize> = (0..n).filter(|&i| !participates[i]).collect();
    let mut local = vec![0; n];
    for (k, &i) in participating.iter().enumerate() {
        local[i] = k;
    }
    for (k, &i) in non_participating.iter().enumerate() {
        local[i] = k;
    }
    let fill_groups: Vec<Vec<usize>> = borders.iter().map(|b| b.iter().map(|&i| local[i]).collect()).collect();
    let mut groups_of = vec![Vec::new(); participating.len()];
    for (g, members) in fill_groups.iter().enumerate() {
        for &k in members {
            groups_of[k].push(g);
        }
    }

    let (pp, pp_map) = pattern.principal_submatrix(&participating);
    let (nn, nn_map) = pattern.principal_submatrix(&non_participating);
    let a_pp = a.extract(&Arc::new(pp), &pp_map);
    let a_nn = a.extract(&Arc::new(nn), &nn_map);

    let a_pn = participating
        .iter()
        .map(|&i| {
            pattern
                .col_range(i)
                .filter(|&p| !participates[pattern.row_indices()[p]])
                .map(|p| (local[pattern.row_indices()[p]], a.values()[p]))
                .collect()
        })
        .collect();

    let blocks = jacobian
        .blocks
        .iter()
        .map(|b| b.iter().filter(|(d, _)| touched[*d]).map(|(d, c)| (local[*d], *c)).collect())
        .collect();
    let jacobian = ContactJacobian { n_v: participating.len(), blocks };

    DofPartition { n, participating, non_participating, local, fill_groups, groups_of, a_pp, a_nn, a_pn, jacobian }
}

/// Union-find over the graph of the pattern restricted to DoFs where `keep`
/// holds; returns a representative per DoF.
fn components(pattern: &SparsePattern, keep: impl Fn(usize) -> bool) -> Vec<usize> {
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let n = pattern.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    for j in (0..n).filter(|&j| keep(j)) {
        for &i in pattern.column(j).iter().filter(|&&i| keep(i)) {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    (0..n).map(|i| find(&mut parent, i)).collect()
}

impl DofPartition {
    pub fn gather_participating(&self, x: &[f64]) -> Vec<f64> {
        self.participating.iter().map(|&i| x[i]).collect()
    }

    pub fn gather_non_participating(&self, x: &[f64]) -> Vec<f64> {
        self.non_participating.iter().map(|&i| x[i]).collect()
    }

    /// Assemble a full vector from its two parts.
    pub fn scatter(&self, x_p: &[f64], x_n: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (k, &i) in self.participating.iter().enumerate() {
            out[i] = x_p[k];
        }
        for (k, &i) in self.non_participating.iter().enumerate() {
            out[i] = x_n[k];
        }
        out
    }

    pub fn local_index(&self, global: usize) -> usize {
        self.local[global]
    }
}

/// Keeps the symbolic factorization of `A_nn` across steps while its pattern
/// is unchanged.
#[derive(Debug, Default)]
pub struct SchurCache {
    symbolic: Option<Arc<SymbolicCholesky>>,
}

impl SchurCache {
    fn symbolic_for(&mut self, pattern: &Arc<SparsePattern>) -> Arc<SymbolicCholesky> {
        match &self.symbolic {
            Some(s) if **s.pattern() == **pattern => Arc::clone(s),
            _ => {
                let s = Arc::new(SymbolicCholesky::analyze(Arc::clone(pattern), Ordering::MinimumDegree));
                self.symbolic = Some(Arc::clone(&s));
                s
            }
        }
    }
}

/// `S_p = A_pp − A_pn A_nn⁻¹ A_np` together with the factor of `A_nn`.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub s: SymMatrix,
    pub a_nn_factor: Option<CholeskyFactor>,
}

pub fn schur_complement(part: &DofPartition, cache: &mut SchurCache) -> Result<Reduced, SolverError> {
    let np = part.participating.len();
    let pp = part.a_pp.pattern();
    let mut entries: Vec<(usize, usize)> = (0..np).flat_map(|j| pp.column(j).iter().map(move |&i| (i, j))).collect();
    for g in &part.fill_groups {
        for (a, &j) in g.iter().enumerate() {
            entries.extend(g[a..].iter().map(|&i| (i, j)));
        }
    }
    let mut s = SymMatrix::zeros(Arc::new(SparsePattern::from_entries(np, entries)));
    for j in 0..np {
        for p in pp.col_range(j) {
            s.add(pp.row_indices()[p], j, part.a_pp.values()[p]);
        }
    }
    if part.non_participating.is_empty() {
        return Ok(Reduced { s, a_nn_factor: None });
    }

    let symbolic = cache.symbolic_for(part.a_nn.pattern());
    let factor = symbolic.factor(&part.a_nn).map_err(|e| SolverError::FactorizationFailure(e.to_string()))?;
    let nn = part.non_participating.len();
    let mut x = vec![0.0; nn];
    let mut partners = Vec::new();
    for j in 0..np {
        if part.a_pn[j].is_empty() {
            continue;
        }
        x.iter_mut().for_each(|v| *v = 0.0);
        for &(k, v) in &part.a_pn[j] {
            x[k] = v;
        }
        factor.solve_in_place(&mut x);
        partners.clear();
        partners.extend(part.groups_of[j].iter().flat_map(|&g| part.fill_groups[g].iter().copied()));
        partners.sort_unstable();
        partners.dedup();
        for &i in &partners {
            let corr: f64 = part.a_pn[i].iter().map(|&(k, v)| v * x[k]).sum();
            if corr != 0.0 {
                s.add(i, j, -corr);
            }
        }
    }
    Ok(Reduced { s, a_nn_factor: Some(factor) })
}

/// `v_n = v_n* − A_nn⁻¹ A_np (v_p − v_p*)`.
pub fn recover_nonparticipating(part: &DofPartition, reduced: &Reduced, dv_p: &[f64], v_n_star: &[f64]) -> Vec<f64> {
    let Some(factor) = &reduced.a_nn_factor else { return Vec::new() };
    let mut rhs = vec![0.0; v_n_star.len()];
    for (i, row) in part.a_pn.iter().enumerate() {
        if dv_p[i] != 0.0 {
            for &(k, v) in row {
                rhs[k] += v * dv_p[i];
            }
        }
    }
    factor.solve_in_place(&mut rhs);
    v_n_star.iter().zip(&rhs).map(|(a, b)| a - b).collect()
}
