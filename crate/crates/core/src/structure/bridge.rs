use std::collections::VecDeque;

use rayon::prelude::*;

use super::mi::mi_from_joint;
use crate::corpus::{BinaryDataset, Bits};
use crate::error::{Error, Result};
use crate::estimation::{estimate_latent_edge, EmOptions};
use crate::inference::row_posteriors;
use crate::ltm::{ConditionalTable, Island, LatentTreeModel, Node};

/// P(latent = 1 | document) for every row of `data`, computed on the island alone.
fn island_posteriors(island: &Island, data: &BinaryDataset) -> Result<Vec<f64>> {
    let members = island.members();
    let cols = members.iter().map(|m| data.column_of(m)).collect::<Result<Vec<_>>>()?;
    let projected = data.project(&members)?;
    let model = island.model();
    let post = row_posteriors(model, &projected, &[model.root()])?;
    data.rows()
        .iter()
        .map(|row| {
            let key = row.bits.select(&cols);
            let at = projected
                .rows()
                .binary_search_by(|r| r.bits.cmp(&key))
                .map_err(|_| Error::precondition("projection lost a row"))?;
            Ok(post[at][0][1])
        })
        .collect()
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[rb] = ra;
        true
    }
}

/// Link islands into one tree: a maximum spanning tree over their latents
/// weighted by MI of the soft pairwise joints, rooted at the latent with the
/// largest total edge MI. Each new edge's table starts from the soft joint
/// and is then re-estimated with progressive EM.
pub fn bridge_islands(islands: &[Island], data: &BinaryDataset, em: &EmOptions) -> Result<LatentTreeModel> {
    match islands {
        [] => return Err(Error::precondition("no islands to bridge")),
        [only] => return Ok(only.model().clone()),
        _ => {}
    }
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let k = islands.len();
    let post = islands.iter().map(|i| island_posteriors(i, data)).collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = data.rows().iter().map(|r| r.weight as f64).collect();
    let total: f64 = weights.iter().sum();

    let joint = |i: usize, j: usize| -> [[f64; 2]; 2] {
        let mut p = [[0.0; 2]; 2];
        for ((w, &a), &b) in weights.iter().zip(&post[i]).zip(&post[j]) {
            let qa = [1.0 - a, a];
            let qb = [1.0 - b, b];
            for x in 0..2 {
                for y in 0..2 {
                    p[x][y] += w * qa[x] * qb[y];
                }
            }
        }
        p.iter().map(|r| [r[0] / total, r[1] / total]).collect::<Vec<_>>().try_into().unwrap()
    };

    let mut edges: Vec<(usize, usize, f64)> = (0..k)
        .into_par_iter()
        .flat_map_iter(|i| ((i + 1)..k).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, mi_from_joint(&joint(i, j))))
        .collect();
    edges.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut sets = DisjointSets((0..k).collect());
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut degree = vec![0.0; k];
    for &(i, j, w) in &edges {
        if sets.union(i, j) {
            adjacency[i].push(j);
            adjacency[j].push(i);
            degree[i] += w;
            degree[j] += w;
        }
    }
    let names: Vec<&str> = islands.iter().map(|i| i.latent().name.as_str()).collect();
    let root = (0..k)
        .max_by(|&a, &b| degree[a].total_cmp(&degree[b]).then(names[b].cmp(names[a])))
        .unwrap();

    let mut parent = vec![None; k];
    let mut order = Vec::with_capacity(k);
    let mut seen = vec![false; k];
    let mut queue = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        let mut next = adjacency[u].clone();
        next.sort_unstable();
        for v in next {
            if !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }

    let mut nodes = Vec::new();
    for &i in &order {
        for mut node in islands[i].model().nodes() {
            if node.parent.is_none() {
                if let Some(p) = parent[i] {
                    let pj = joint(p, i);
                    let rows: Vec<Vec<f64>> = pj
                        .iter()
                        .map(|r| {
                            let s = r[0] + r[1];
                            if s > 0.0 { vec![r[0] / s, r[1] / s] } else { vec![0.5, 0.5] }
                        })
                        .collect();
                    node = Node::new(node.variable, Some(names[p]), ConditionalTable::from_rows(&rows));
                }
            }
            nodes.push(node);
        }
    }
    let mut model = LatentTreeModel::new(nodes)?;
    for (step, &i) in order.iter().enumerate().skip(1) {
        let p = parent[i].unwrap();
        model = estimate_latent_edge(&model, names[p], names[i], data, &em.stream("bridge-edge", step as u64))?;
    }
    Ok(model)
}

/// Most probable state of every top-level latent for each document, as a
/// dataset over those latents. Ties go to state 0.
pub fn hard_assign(model: &LatentTreeModel, data: &BinaryDataset) -> Result<BinaryDataset> {
    let top = model.latents_at_level(model.top_level());
    let names: Vec<String> = top.iter().map(|&v| model.name(v).to_string()).collect();
    let post = row_posteriors(model, data, &top)?;
    let rows = data.rows().iter().zip(post).map(|(row, p)| {
        let bits: Vec<bool> = p.iter().map(|dist| dist[1] > dist[0]).collect();
        (Bits::from_bools(&bits), row.weight)
    });
    BinaryDataset::from_rows(names, rows)
}

/// Put `upper` (a model whose observed variables are the top-level latents of
/// `lower`) on top of `lower`, replacing the links among those latents.
pub fn stack_models(upper: &LatentTreeModel, lower: &LatentTreeModel) -> Result<LatentTreeModel> {
    let top_level = lower.top_level();
    let mut expected: Vec<String> =
        lower.latents_at_level(top_level).into_iter().map(|v| lower.name(v).to_string()).collect();
    let mut got = upper.observed_names();
    expected.sort();
    got.sort();
    if expected != got {
        return Err(Error::VariableMismatch(
            "upper model's observed variables must be the lower model's top-level latents".into(),
        ));
    }
    let mut nodes = Vec::with_capacity(upper.len() + lower.len());
    for &v in upper.pre_order() {
        let var = upper.variable(v);
        if var.is_latent() {
            let mut var = var.clone();
            var.level = top_level + 1;
            nodes.push(Node::new(var, upper.parent(v).map(|p| upper.name(p)), upper.table(v).clone()));
        }
    }
    for mut node in lower.nodes() {
        if let Some(u) = upper.index_of(&node.variable.name) {
            node.parent = upper.parent(u).map(|p| upper.name(p).to_string());
            node.table = upper.table(u).clone();
        }
        nodes.push(node);
    }
    LatentTreeModel::new(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltm::{new_lcm, Variable};

    fn island(name: &str, leaves: &[&str], py: f64) -> Island {
        let mut tables = vec![ConditionalTable::from_rows(&[vec![1.0 - py, py]])];
        let observed = leaves.iter().map(|l| Variable::observed(*l)).collect::<Vec<_>>();
        for _ in leaves {
            tables.push(ConditionalTable::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]));
        }
        new_lcm(Variable::latent(name, 1), observed, Some(tables)).unwrap()
    }

    #[test]
    fn single_island_is_identity() {
        let i = island("Z1.1", &["a", "b", "c"], 0.3);
        let data = BinaryDataset::from_documents(i.model().observed_names(), vec![Bits::zeros(3)]).unwrap();
        assert_eq!(&bridge_islands(std::slice::from_ref(&i), &data, &EmOptions::default()).unwrap(), i.model());
    }

    #[test]
    fn deterministic_children_recover_state() {
        let mut tables = vec![ConditionalTable::from_rows(&[vec![0.5, 0.5]])];
        for _ in 0..2 {
            tables.push(ConditionalTable::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]));
        }
        let m = new_lcm(Variable::latent("Y", 1), vec![Variable::observed("a"), Variable::observed("b")], Some(tables))
            .unwrap()
            .into_model();
        let data = BinaryDataset::from_rows(
            m.observed_names(),
            vec![(Bits::from_bools(&[true, true]), 3), (Bits::from_bools(&[false, false]), 2)],
        )
        .unwrap();
        let out = hard_assign(&m, &data).unwrap();
        assert_eq!(out.variables(), ["Y"]);
        assert_eq!(out.total_weight(), 5);
        assert_eq!(out.ones(0), 3);
    }

    #[test]
    fn tie_goes_to_state_zero() {
        let m = island("Y", &["a"], 0.5).into_model();
        let m = m.with_table(1, ConditionalTable::uniform(2, 2)).unwrap();
        let data = BinaryDataset::from_documents(vec!["a".into()], vec![Bits::from_bools(&[true])]).unwrap();
        assert_eq!(hard_assign(&m, &data).unwrap().ones(0), 0);
    }

    #[test]
    fn stacking_replaces_links() {
        let lower_nodes = {
            let a = island("Z1.1", &["a", "b"], 0.4);
            let b = island("Z1.2", &["c", "d"], 0.6);
            let mut nodes = a.model().nodes();
            let mut bn = b.model().nodes();
            bn[0].parent = Some("Z1.1".into());
            bn[0].table = ConditionalTable::from_rows(&[vec![0.7, 0.3], vec![0.2, 0.8]]);
            nodes.extend(bn);
            nodes
        };
        let lower = LatentTreeModel::new(lower_nodes).unwrap();
        let mut upper = island("Z2.1", &["Z1.1", "Z1.2"], 0.5).into_model().nodes();
        upper[0].variable.level = 2;
        let upper = LatentTreeModel::new(upper).unwrap();
        let stacked = stack_models(&upper, &lower).unwrap();
        assert!(stacked.validate().is_empty());
        assert_eq!(stacked.name(stacked.root()), "Z2.1");
        for name in ["Z1.1", "Z1.2"] {
            let v = stacked.require(name).unwrap();
            assert_eq!(stacked.name(stacked.parent(v).unwrap()), "Z2.1");
        }
        for leaf in ["a", "b", "c", "d"] {
            let (s, l) = (stacked.require(leaf).unwrap(), lower.require(leaf).unwrap());
            assert_eq!(stacked.table(s), lower.table(l));
            assert_eq!(stacked.parent(s).map(|p| stacked.name(p)), lower.parent(l).map(|p| lower.name(p)));
        }
    }
}
