use super::JointTable;
use crate::error::{Error, Result};
use crate::ltm::LatentTreeModel;

/// Largest model [`brute_force_joint`] will enumerate.
pub const MAX_ORACLE_VARIABLES: usize = 15;

/// Full joint over every variable (in model order) as the explicit product of
/// all tables. Ground truth for testing the message-passing routines.
pub fn brute_force_joint(model: &LatentTreeModel) -> Result<JointTable> {
    if model.len() > MAX_ORACLE_VARIABLES {
        return Err(Error::TooLarge { what: "model", size: model.len(), limit: MAX_ORACLE_VARIABLES });
    }
    let cards: Vec<usize> = (0..model.len()).map(|v| model.cardinality(v)).collect();
    let mut table = JointTable {
        variables: model.variables().iter().map(|v| v.name.clone()).collect(),
        probabilities: Vec::with_capacity(cards.iter().product()),
        cardinalities: cards,
    };
    let total: usize = table.cardinalities.iter().product();
    for i in 0..total {
        let config = table.config_of(i);
        let p: f64 = (0..model.len())
            .map(|v| {
                let row = model.parent(v).map_or(0, |p| config[p]);
                model.table(v).get(row, config[v])
            })
            .product();
        table.probabilities.push(p);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltm::{new_lcm, ConditionalTable, Variable};

    #[test]
    fn single_leaf_product() {
        let tables = vec![
            ConditionalTable::from_rows(&[vec![0.25, 0.75]]),
            ConditionalTable::from_rows(&[vec![0.9, 0.1], vec![0.4, 0.6]]),
        ];
        let m = new_lcm(Variable::latent("Y", 1), vec![Variable::observed("x")], Some(tables)).unwrap();
        let j = brute_force_joint(m.model()).unwrap();
        assert_eq!(j.probabilities.len(), 4);
        assert_eq!(j.get(&[0, 0]), 0.25 * 0.9);
        assert_eq!(j.get(&[1, 1]), 0.75 * 0.6);
        assert!((j.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_large_is_rejected() {
        let observed = (0..15).map(|i| Variable::observed(format!("x{i}"))).collect();
        let m = new_lcm(Variable::latent("Y", 1), observed, None).unwrap();
        assert!(matches!(brute_force_joint(m.model()), Err(Error::TooLarge { .. })));
    }
}
