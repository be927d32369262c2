use super::{ConditionalTable, LatentTreeModel};
use crate::error::{Error, Result};

impl LatentTreeModel {
    /// Prior marginal of every variable, by a single top-down sweep.
    pub fn node_marginals(&self) -> Vec<Vec<f64>> {
        let mut marg = vec![Vec::new(); self.len()];
        for &v in self.pre_order() {
            let t = self.table(v);
            marg[v] = match self.parent(v) {
                None => t.row(0).to_vec(),
                Some(p) => {
                    let mut m = vec![0.0; t.cols()];
                    for (u, &pu) in marg[p].iter().enumerate() {
                        for (x, m) in m.iter_mut().enumerate() {
                            *m += pu * t.get(u, x);
                        }
                    }
                    m
                }
            };
        }
        marg
    }

    /// Same joint distribution, rooted at the latent `new_root`. Tables along
    /// the path from the old root are reversed with Bayes' rule; a parent
    /// state of probability zero gets a uniform row.
    pub fn reroot(&self, new_root: &str) -> Result<Self> {
        let r = self.require(new_root)?;
        if !self.variable(r).is_latent() {
            return Err(Error::precondition(format!("cannot root at observed variable `{new_root}`")));
        }
        if r == self.root() {
            return Ok(self.clone());
        }
        let marg = self.node_marginals();
        let mut path = vec![r];
        while let Some(p) = self.parent(*path.last().unwrap()) {
            path.push(p);
        }
        // path runs new_root → ... → old root
        let mut nodes = self.nodes();
        nodes[r].parent = None;
        nodes[r].table = ConditionalTable::new(1, marg[r].len(), marg[r].clone());
        for w in path.windows(2) {
            let (child, parent) = (w[0], w[1]);
            let fwd = self.table(child);
            let (pc, cc) = (self.cardinality(parent), self.cardinality(child));
            // new P(parent | child) = P(parent) P(child | parent) / P(child)
            let mut values = Vec::with_capacity(cc * pc);
            for c in 0..cc {
                let denom = marg[child][c];
                for p in 0..pc {
                    values.push(if denom > 0.0 { marg[parent][p] * fwd.get(p, c) / denom } else { 1.0 / pc as f64 });
                }
                if denom > 0.0 {
                    // renormalize against rounding
                    let row = &mut values[c * pc..];
                    let s: f64 = row.iter().sum();
                    row.iter_mut().for_each(|x| *x /= s);
                }
            }
            nodes[parent].parent = Some(self.name(child).to_string());
            nodes[parent].table = ConditionalTable::new(cc, pc, values);
        }
        LatentTreeModel::new(nodes)
    }
}

#[cfg(test)]
mod tests {
    use crate::ltm::{new_lcm, ConditionalTable, Variable};

    #[test]
    fn reroot_at_root_is_identity() {
        let island = new_lcm(Variable::latent("Y", 1), vec![Variable::observed("a")], None).unwrap();
        assert_eq!(island.model().reroot("Y").unwrap(), *island.model());
    }

    #[test]
    fn reroot_at_leaf_fails() {
        let island = new_lcm(Variable::latent("Y", 1), vec![Variable::observed("a")], None).unwrap();
        assert!(island.model().reroot("a").is_err());
    }

    #[test]
    fn marginals_of_lcm_leaf() {
        let tables = vec![
            ConditionalTable::from_rows(&[vec![0.3, 0.7]]),
            ConditionalTable::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]),
        ];
        let island = new_lcm(Variable::latent("Y", 1), vec![Variable::observed("a")], Some(tables)).unwrap();
        let m = island.model().node_marginals();
        assert!((m[1][1] - (0.3 * 0.1 + 0.7 * 0.8)).abs() < 1e-15);
    }
}
