use std::collections::BTreeSet;

use super::mi::{mi_matrix, MIMatrix};
use super::HltaOptions;
use crate::corpus::BinaryDataset;
use crate::error::{Error, Result};
use crate::estimation::{bic, learn_lcm, pem_lcm, pem_ltm_2l, EmOptions};
use crate::ltm::{latent_name, Island, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimensionality {
    Unidimensional,
    Multidimensional,
}

/// Compare the one-latent model `m1` against the two-latent model `m2` on
/// `data`: multidimensional iff BIC(m2) − BIC(m1) > `delta`.
pub fn ud_test(m1: &Island, m2: &crate::ltm::LatentTreeModel, data: &BinaryDataset, delta: f64) -> Result<Dimensionality> {
    let a: BTreeSet<String> = m1.members().into_iter().collect();
    let b: BTreeSet<String> = m2.observed_names().into_iter().collect();
    if a != b {
        return Err(Error::VariableMismatch("UD-test models cover different variables".into()));
    }
    let projected = data.project(&a.iter().collect::<Vec<_>>())?;
    let diff = bic(m2, &projected)? - bic(m1.model(), &projected)?;
    Ok(if diff > delta { Dimensionality::Multidimensional } else { Dimensionality::Unidimensional })
}

/// Index of the maximum, first one on ties.
fn argmax(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Grow one uni-dimensional island from `vars` (column indices into `data`
/// and `mi`), adding variables by MI until the UD-test fails.
pub(crate) fn grow_island(
    data: &BinaryDataset,
    vars: &[usize],
    mi: &MIMatrix,
    latent: Variable,
    delta: f64,
    em: &EmOptions,
) -> Result<Island> {
    let names = data.variables();
    let name_of = |ids: &[usize]| ids.iter().map(|&i| names[i].clone()).collect::<Vec<_>>();
    if vars.is_empty() {
        return Err(Error::precondition("an island needs at least one variable"));
    }
    if vars.len() <= 3 {
        return learn_lcm(data, &name_of(vars), latent, em);
    }

    let mut best_pair = (vars[0], vars[1], f64::NEG_INFINITY);
    for (k, &i) in vars.iter().enumerate() {
        for &j in &vars[k + 1..] {
            if mi.get(i, j) > best_pair.2 {
                best_pair = (i, j, mi.get(i, j));
            }
        }
    }
    let mut set = vec![best_pair.0, best_pair.1];
    let mut rest: Vec<usize> = vars.iter().copied().filter(|v| !set.contains(v)).collect();
    // MI of every remaining variable with the working set
    let mut to_set: Vec<f64> = rest.iter().map(|&a| mi.get(a, set[0]).max(mi.get(a, set[1]))).collect();

    let third = argmax(to_set.iter().copied().enumerate()).unwrap();
    set.push(rest.remove(third));
    to_set.remove(third);
    for (k, &a) in rest.iter().enumerate() {
        to_set[k] = to_set[k].max(mi.get(a, set[2]));
    }

    let mut island = learn_lcm(&data.project(&name_of(&set))?, &name_of(&set), latent.clone(), em)?;
    let z_name = format!("{}'", latent.name);
    for step in 0u64.. {
        let pick = argmax(to_set.iter().copied().enumerate()).unwrap();
        let x = rest.remove(pick);
        to_set.remove(pick);
        let w = set[argmax(set.iter().map(|&s| mi.get(s, x)).enumerate()).unwrap()];
        let (x_name, w_name) = (names[x].as_str(), names[w].as_str());

        let mut cols = set.clone();
        cols.push(x);
        let d1 = data.project(&name_of(&cols))?;
        let step_opts = em.stream("island-step", step);
        let m1 = pem_lcm(&island, x_name, &d1, &step_opts)?;
        if rest.is_empty() {
            return Ok(m1);
        }
        let m2 = pem_ltm_2l(&island, w_name, x_name, &z_name, &d1, &step_opts)?;
        if ud_test(&m1, &m2, &d1, delta)? == Dimensionality::Multidimensional {
            return Island::new(m2.without(&[w_name, x_name, z_name.as_str()])?);
        }
        island = m1;
        set.push(x);
        for (k, &a) in rest.iter().enumerate() {
            to_set[k] = to_set[k].max(mi.get(a, x));
        }
    }
    unreachable!()
}

/// Build one island over `vars`, named `latent`.
pub fn one_island<S: AsRef<str>>(
    data: &BinaryDataset,
    vars: &[S],
    latent: Variable,
    opts: &HltaOptions,
) -> Result<Island> {
    let ids = vars.iter().map(|v| data.column_of(v.as_ref())).collect::<Result<Vec<_>>>()?;
    if ids.len() <= 3 {
        let names: Vec<&str> = vars.iter().map(|v| v.as_ref()).collect();
        return learn_lcm(data, &names, latent, &opts.em_stream("island", 0));
    }
    let mi = mi_matrix(data)?;
    grow_island(data, &ids, &mi, latent, opts.delta, &opts.em_stream("island", 0))
}

/// Partition all variables of `data` into islands whose latents sit at
/// `level`. A single leftover variable is attached to the island it shares
/// the most MI with.
pub fn build_islands(data: &BinaryDataset, level: u32, opts: &HltaOptions) -> Result<Vec<Island>> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = data.num_variables();
    if n == 1 {
        let latent = Variable::latent(latent_name(level, 1), level);
        return Ok(vec![learn_lcm(data, data.variables(), latent, &opts.em_stream("island", u64::from(level) << 32))?]);
    }
    let mi = mi_matrix(data)?;
    let mut assigned = vec![false; n];
    let mut islands: Vec<Island> = Vec::new();
    while assigned.iter().any(|a| !a) {
        let remaining: Vec<usize> = (0..n).filter(|&i| !assigned[i]).collect();
        let index = islands.len() + 1;
        let latent = Variable::latent(latent_name(level, index), level);
        let em = opts.em_stream("island", (u64::from(level) << 32) | index as u64);
        let island = grow_island(data, &remaining, &mi, latent, opts.delta, &em)?;
        for m in island.members() {
            assigned[data.column_of(&m)?] = true;
        }
        islands.push(island);
    }

    let singles: Vec<usize> = (0..islands.len()).filter(|&i| islands[i].members().len() == 1).collect();
    let hosts: Vec<usize> = (0..islands.len()).filter(|i| !singles.contains(i)).collect();
    if hosts.is_empty() {
        return Ok(islands);
    }
    for (k, &s) in singles.iter().enumerate() {
        let x = islands[s].members().remove(0);
        let xi = data.column_of(&x)?;
        let host = hosts[argmax(hosts.iter().enumerate().map(|(h, &i)| {
            let best = islands[i]
                .members()
                .iter()
                .map(|m| mi.get(xi, data.column_of(m).unwrap()))
                .fold(f64::NEG_INFINITY, f64::max);
            (h, best)
        }))
        .unwrap()];
        let mut cols = islands[host].members();
        cols.push(x.clone());
        let d1 = data.project(&cols)?;
        let em = opts.em_stream("merge", (u64::from(level) << 32) | k as u64);
        islands[host] = pem_lcm(&islands[host], &x, &d1, &em)?;
    }
    Ok(islands.into_iter().enumerate().filter(|(i, _)| !singles.contains(i)).map(|(_, m)| m).collect())
}
