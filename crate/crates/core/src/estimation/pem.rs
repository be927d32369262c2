//! Progressive EM: every estimation step runs on a sub-model with three or
//! four observed variables, with previously estimated tables held fixed.

use super::{em, EmOptions, FreeParameterSet};
use crate::corpus::BinaryDataset;
use crate::error::{Error, Result};
use crate::inference::{marginal, path_conditional};
use crate::ltm::{ConditionalTable, Island, LatentTreeModel, Node, Variable};
use crate::seed;
use crate::structure::mi_pair;

/// Latent class model with a binary latent over `vars`, fitted by EM from a random start.
pub fn learn_lcm<S: AsRef<str>>(
    data: &BinaryDataset,
    vars: &[S],
    latent: Variable,
    opts: &EmOptions,
) -> Result<Island> {
    if vars.is_empty() {
        return Err(Error::precondition("learn_lcm needs at least one variable"));
    }
    let projected = data.project(vars)?;
    let mut rng = seed::stream(opts.seed, "learn-lcm", 0);
    let mut nodes = vec![Node::new(latent.clone(), None, ConditionalTable::random(1, 2, &mut rng))];
    for v in vars {
        nodes.push(Node::new(
            Variable::observed(v.as_ref()),
            Some(&latent.name),
            ConditionalTable::random(2, 2, &mut rng),
        ));
    }
    let init = LatentTreeModel::new(nodes)?;
    let fitted = em(&init, &projected, opts, &FreeParameterSet::All)?;
    Island::new(fitted.model)
}

/// The `k` candidates with largest MI to `target` in `data`; ties keep candidate order.
fn top_by_mi(data: &BinaryDataset, candidates: &[String], target: &str, k: usize) -> Result<Vec<String>> {
    let mut scored = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| Ok((mi_pair(data, c, target)?, i)))
        .collect::<Result<Vec<(f64, usize)>>>()?;
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(k).map(|(_, i)| candidates[i].clone()).collect())
}

fn copy_node(model: &LatentTreeModel, name: &str) -> Result<Node> {
    let i = model.require(name)?;
    Ok(Node {
        variable: model.variable(i).clone(),
        parent: model.parent(i).map(|p| model.name(p).to_string()),
        table: model.table(i).clone(),
    })
}

/// Add `x` as a new child of the island's latent. P(x | Y) is estimated on
/// the three-leaf sub-model made of `x` and the two members with highest MI
/// to it, with everything but P(x | Y) fixed.
pub fn pem_lcm(island: &Island, x: &str, data: &BinaryDataset, opts: &EmOptions) -> Result<Island> {
    let members = island.members();
    if members.len() < 2 {
        return Err(Error::precondition("PEM-LCM needs an island with at least two members"));
    }
    if members.iter().any(|m| m == x) {
        return Err(Error::precondition(format!("`{x}` is already in the island")));
    }
    let model = island.model();
    let y = model.name(model.root()).to_string();
    let anchors = top_by_mi(data, &members, x, 2)?;

    let mut rng = seed::stream(opts.seed, "pem-lcm", 0);
    let new_leaf = Node::new(Variable::observed(x), Some(&y), ConditionalTable::random(2, 2, &mut rng));
    let mut sub = vec![copy_node(model, &y)?];
    for a in &anchors {
        sub.push(copy_node(model, a)?);
    }
    sub.push(new_leaf);
    let sub = LatentTreeModel::new(sub)?;
    let sub_data = data.project(&[anchors[0].as_str(), anchors[1].as_str(), x])?;
    let fitted = em(&sub, &sub_data, opts, &FreeParameterSet::only(&[x]))?;

    let mut nodes = model.nodes();
    nodes.push(copy_node(&fitted.model, x)?);
    Island::new(LatentTreeModel::new(nodes)?)
}

/// Two-latent model (S∖{w})–Y–Z–{w, x} grown from an island over S.
///
/// P(Z | Y), P(w | Z) and P(x | Z) are estimated on the four-leaf sub-model
/// {two members of S∖{w} with highest MI to x}–Y–Z–{w, x}; the island's own
/// tables are copied unchanged.
pub fn pem_ltm_2l(
    island: &Island,
    w: &str,
    x: &str,
    z_name: &str,
    data: &BinaryDataset,
    opts: &EmOptions,
) -> Result<LatentTreeModel> {
    let members = island.members();
    if members.len() < 3 {
        return Err(Error::precondition("PEM-LTM-2L needs an island with at least three members"));
    }
    if !members.iter().any(|m| m == w) {
        return Err(Error::precondition(format!("`{w}` is not in the island")));
    }
    if members.iter().any(|m| m == x) {
        return Err(Error::precondition(format!("`{x}` is already in the island")));
    }
    let model = island.model();
    if model.index_of(z_name).is_some() || z_name == x {
        return Err(Error::precondition(format!("latent name `{z_name}` is taken")));
    }
    let y = model.root();
    let y_name = model.name(y).to_string();
    let keep: Vec<String> = members.iter().filter(|m| *m != w).cloned().collect();
    let anchors = top_by_mi(data, &keep, x, 2)?;

    let mut rng = seed::stream(opts.seed, "pem-ltm-2l", 0);
    let z = Variable::latent(z_name, model.variable(y).level);
    let z_node = Node::new(z, Some(&y_name), ConditionalTable::random(2, 2, &mut rng));
    let w_node = Node::new(Variable::observed(w), Some(z_name), ConditionalTable::random(2, 2, &mut rng));
    let x_node = Node::new(Variable::observed(x), Some(z_name), ConditionalTable::random(2, 2, &mut rng));

    let mut sub = vec![copy_node(model, &y_name)?];
    for a in &anchors {
        sub.push(copy_node(model, a)?);
    }
    sub.extend([z_node, w_node, x_node]);
    let sub = LatentTreeModel::new(sub)?;
    let sub_data = data.project(&[anchors[0].as_str(), anchors[1].as_str(), w, x])?;
    let fitted = em(&sub, &sub_data, opts, &FreeParameterSet::only(&[z_name, w, x]))?;

    let mut nodes = vec![copy_node(model, &y_name)?];
    for k in &keep {
        nodes.push(copy_node(model, k)?);
    }
    for name in [z_name, w, x] {
        nodes.push(copy_node(&fitted.model, name)?);
    }
    LatentTreeModel::new(nodes)
}

/// Observed variables on `side` of an edge that appear in the data: the
/// latent's direct observed children when it has any, otherwise every
/// observed variable on that side.
fn edge_side(model: &LatentTreeModel, latent: usize, side: &[bool], data: &BinaryDataset) -> Vec<usize> {
    let direct: Vec<usize> = model
        .children(latent)
        .iter()
        .copied()
        .filter(|&c| !model.variable(c).is_latent() && data.column(model.name(c)).is_some())
        .collect();
    if !direct.is_empty() {
        return direct;
    }
    model
        .observed()
        .filter(|&v| side[v] && data.column(model.name(v)).is_some())
        .collect()
}

fn best_anchors(model: &LatentTreeModel, data: &BinaryDataset, own: &[usize], other: &[usize]) -> Result<Vec<usize>> {
    let mut scored = Vec::with_capacity(own.len());
    for (i, &a) in own.iter().enumerate() {
        let mut best = 0.0f64;
        for &b in other {
            best = best.max(mi_pair(data, model.name(a), model.name(b))?);
        }
        scored.push((best, i));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().take(2).map(|(_, i)| own[i]).collect())
}

/// P(observed | latent) for an observed variable anywhere in the model.
fn conditional_on(model: &LatentTreeModel, observed: usize, latent: usize) -> Result<ConditionalTable> {
    if model.parent(observed) == Some(latent) {
        return Ok(model.table(observed).clone());
    }
    if let Some(rows) = path_conditional(model, latent, observed) {
        return Ok(ConditionalTable::from_rows(&rows));
    }
    let joint = marginal(model, &[model.name(latent), model.name(observed)])?;
    let (lc, oc) = (joint.cardinalities[0], joint.cardinalities[1]);
    let mut rows = Vec::with_capacity(lc);
    for s in 0..lc {
        let total: f64 = (0..oc).map(|x| joint.get(&[s, x])).sum();
        rows.push(
            (0..oc)
                .map(|x| if total > 0.0 { joint.get(&[s, x]) / total } else { 1.0 / oc as f64 })
                .collect(),
        );
    }
    Ok(ConditionalTable::from_rows(&rows))
}

/// Re-estimate P(child | parent) for the latent edge parent → child, holding
/// every other table fixed. EM runs on the sub-model made of the two latents
/// and up to two observed variables on each side of the edge, chosen by MI
/// with the variables on the opposite side.
pub fn estimate_latent_edge(
    model: &LatentTreeModel,
    parent: &str,
    child: &str,
    data: &BinaryDataset,
    opts: &EmOptions,
) -> Result<LatentTreeModel> {
    let (y, z) = (model.require(parent)?, model.require(child)?);
    if !model.variable(y).is_latent() || !model.variable(z).is_latent() || model.parent(z) != Some(y) {
        return Err(Error::precondition(format!("`{parent}` → `{child}` is not a latent-latent edge")));
    }
    let mut below_z = vec![false; model.len()];
    for v in model.subtree(z) {
        below_z[v] = true;
    }
    let above: Vec<bool> = below_z.iter().map(|b| !b).collect();
    let y_side = edge_side(model, y, &above, data);
    let z_side = edge_side(model, z, &below_z, data);
    if y_side.is_empty() || z_side.is_empty() {
        return Err(Error::precondition("both sides of the edge need observed variables in the data"));
    }
    let y_anchors = best_anchors(model, data, &y_side, &z_side)?;
    let z_anchors = best_anchors(model, data, &z_side, &y_side)?;

    let marg = model.node_marginals();
    let (y_name, z_name) = (model.name(y).to_string(), model.name(z).to_string());
    let mut sub = vec![Node::new(
        Variable::latent(&y_name, model.variable(y).level),
        None,
        ConditionalTable::new(1, marg[y].len(), marg[y].clone()),
    )];
    for &a in &y_anchors {
        sub.push(Node::new(Variable::observed(model.name(a)), Some(&y_name), conditional_on(model, a, y)?));
    }
    sub.push(Node::new(model.variable(z).clone(), Some(&y_name), model.table(z).clone()));
    for &b in &z_anchors {
        sub.push(Node::new(Variable::observed(model.name(b)), Some(&z_name), conditional_on(model, b, z)?));
    }
    let sub = LatentTreeModel::new(sub)?;
    let cols: Vec<&str> = y_anchors.iter().chain(&z_anchors).map(|&v| model.name(v)).collect();
    let sub_data = data.project(&cols)?;
    let fitted = em(&sub, &sub_data, opts, &FreeParameterSet::only(&[z_name.as_str()]))?;
    let new_table = fitted.model.table(fitted.model.require(&z_name)?).clone();
    model.with_table(z, new_table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::sample;
    use crate::ltm::new_lcm;
    use rand::SeedableRng;

    fn lcm_model(names: &[&str], py: f64, rows: &[[f64; 2]]) -> LatentTreeModel {
        let observed: Vec<Variable> = names.iter().map(|n| Variable::observed(*n)).collect();
        let mut tables = vec![ConditionalTable::from_rows(&[vec![1.0 - py, py]])];
        for r in rows {
            tables.push(ConditionalTable::from_rows(&[vec![1.0 - r[0], r[0]], vec![1.0 - r[1], r[1]]]));
        }
        new_lcm(Variable::latent("Y", 1), observed, Some(tables)).unwrap().into_model()
    }

    #[test]
    fn learn_lcm_single_variable() {
        let m = lcm_model(&["a"], 0.5, &[[0.2, 0.8]]);
        let data = sample(&m, 100, &mut rand_chacha::ChaCha8Rng::seed_from_u64(1)).unwrap();
        let island = learn_lcm(&data, &["a"], Variable::latent("Z1.1", 1), &EmOptions::default()).unwrap();
        assert_eq!(island.members(), vec!["a"]);
        assert!(island.model().validate().is_empty());
    }

    #[test]
    fn learn_lcm_identical_rows_stays_valid() {
        let m = lcm_model(&["a", "b", "c"], 0.5, &[[0.2, 0.8]; 3]);
        let docs = vec![crate::corpus::Bits::from_bools(&[true, false, true]); 50];
        let data = BinaryDataset::from_documents(m.observed_names(), docs).unwrap();
        let island = learn_lcm(&data, &["a", "b", "c"], Variable::latent("Y", 1), &EmOptions::default()).unwrap();
        assert!(island.model().validate().is_empty());
        for t in island.model().tables() {
            assert!(t.values().iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }

    #[test]
    fn pem_lcm_needs_two_members() {
        let m = lcm_model(&["a"], 0.5, &[[0.2, 0.8]]);
        let island = Island::new(m).unwrap();
        let data = BinaryDataset::from_rows(vec!["a".into(), "x".into()], vec![]).unwrap();
        assert!(pem_lcm(&island, "x", &data, &EmOptions::default()).is_err());
    }

    #[test]
    fn latent_edge_requires_adjacent_latents() {
        let m = lcm_model(&["a", "b"], 0.5, &[[0.2, 0.8]; 2]);
        let data = BinaryDataset::from_rows(m.observed_names(), vec![]).unwrap();
        assert!(estimate_latent_edge(&m, "Y", "a", &data, &EmOptions::default()).is_err());
    }
}
