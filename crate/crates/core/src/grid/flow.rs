//! DC power flow on the in-service topology.
//!
//! Every connected island is solved on its own: the reduced susceptance
//! Laplacian (reference angle pinned at the island's slack) is factored and
//! line flows follow as `b * (theta_from - theta_to)`.

use nalgebra::{DMatrix, DVector};

use super::spec::{GridSpec, NodeKind};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("injection vector has {got} entries, grid has {expected} nodes")]
    InjectionLength { expected: usize, got: usize },
    #[error("topology vector has {got} entries, grid has {expected} lines")]
    TopologyLength { expected: usize, got: usize },
    #[error("singular power-flow system in the island containing node {node}")]
    SingularSystem { node: u32 },
}

/// Connected components of the in-service topology, as node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Islands {
    /// Island number for every node index.
    pub of_node: Vec<usize>,
    /// Node indices per island, ascending.
    pub members: Vec<Vec<usize>>,
}

impl Islands {
    pub fn compute(spec: &GridSpec, in_service: &[bool]) -> Islands {
        let n = spec.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (line, &on) in spec.lines.iter().zip(in_service) {
            if !on {
                continue;
            }
            let a = spec.node_index(line.from).expect("validated endpoint");
            let b = spec.node_index(line.to).expect("validated endpoint");
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut of_node = vec![usize::MAX; n];
        let mut members: Vec<Vec<usize>> = Vec::new();
        let mut root_island: Vec<usize> = vec![usize::MAX; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if root_island[r] == usize::MAX {
                root_island[r] = members.len();
                members.push(Vec::new());
            }
            of_node[v] = root_island[r];
            members[root_island[r]].push(v);
        }
        Islands { of_node, members }
    }

    /// The island's reference node: the grid slack if present, otherwise the
    /// generator with the smallest id; `None` for consumer-only islands.
    pub fn slack_of(&self, spec: &GridSpec, island: usize) -> Option<usize> {
        let members = &self.members[island];
        if let Some(&s) = members.iter().find(|&&v| spec.nodes[v].id == spec.slack_node) {
            return Some(s);
        }
        members
            .iter()
            .copied()
            .filter(|&v| spec.nodes[v].kind == NodeKind::Generator)
            .min_by_key(|&v| spec.nodes[v].id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    /// Flow per line index, positive from `from` to `to`; 0 for lines out of service.
    pub flows_mw: Vec<f64>,
    /// Injections after slack balancing; zeroed in islands without a generator.
    pub injections_mw: Vec<f64>,
    /// Voltage angles (radians, per-unit scaling) per node index.
    pub angles: Vec<f64>,
}

/// Solves the DC flow. Each island's net mismatch is absorbed by its slack;
/// islands without a generator carry no flow and serve nothing.
pub fn flow_solve(spec: &GridSpec, in_service: &[bool], injections_mw: &[f64]) -> Result<FlowSolution, FlowError> {
    if injections_mw.len() != spec.nodes.len() {
        return Err(FlowError::InjectionLength {
            expected: spec.nodes.len(),
            got: injections_mw.len(),
        });
    }
    if in_service.len() != spec.lines.len() {
        return Err(FlowError::TopologyLength {
            expected: spec.lines.len(),
            got: in_service.len(),
        });
    }
    let islands = Islands::compute(spec, in_service);
    let endpoints: Vec<(usize, usize)> = spec
        .lines
        .iter()
        .map(|l| (spec.node_index(l.from).unwrap(), spec.node_index(l.to).unwrap()))
        .collect();
    let mut injections = injections_mw.to_vec();
    let mut angles = vec![0.0; spec.nodes.len()];

    for island in 0..islands.members.len() {
        let members = &islands.members[island];
        let Some(slack) = islands.slack_of(spec, island) else {
            for &v in members {
                injections[v] = 0.0;
            }
            continue;
        };
        let others: f64 = members.iter().filter(|&&v| v != slack).map(|&v| injections[v]).sum();
        injections[slack] = -others;
        if members.len() == 1 {
            continue;
        }
        // Position of every non-slack member in the reduced system.
        let mut slot = vec![usize::MAX; spec.nodes.len()];
        let reduced: Vec<usize> = members.iter().copied().filter(|&v| v != slack).collect();
        for (k, &v) in reduced.iter().enumerate() {
            slot[v] = k;
        }
        let size = reduced.len();
        let mut lap = DMatrix::<f64>::zeros(size, size);
        for ((line, &on), &(a, b)) in spec.lines.iter().zip(in_service).zip(&endpoints) {
            if !on || islands.of_node[a] != island {
                continue;
            }
            let s = line.susceptance;
            let (sa, sb) = (slot[a], slot[b]);
            if sa != usize::MAX {
                lap[(sa, sa)] += s;
            }
            if sb != usize::MAX {
                lap[(sb, sb)] += s;
            }
            if sa != usize::MAX && sb != usize::MAX {
                lap[(sa, sb)] -= s;
                lap[(sb, sa)] -= s;
            }
        }
        let rhs = DVector::from_iterator(size, reduced.iter().map(|&v| injections[v]));
        let theta = lap
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or(FlowError::SingularSystem {
                node: spec.nodes[slack].id,
            })?;
        for (k, &v) in reduced.iter().enumerate() {
            angles[v] = theta[k];
        }
    }

    let flows_mw = spec
        .lines
        .iter()
        .zip(in_service)
        .zip(&endpoints)
        .map(|((line, &on), &(a, b))| if on { line.susceptance * (angles[a] - angles[b]) } else { 0.0 })
        .collect();
    Ok(FlowSolution {
        flows_mw,
        injections_mw: injections,
        angles,
    })
}

/// Largest nodal imbalance `|injection - net outflow|`, relative to the
/// largest absolute injection (or absolute when all injections are zero).
pub fn node_balance_residual(spec: &GridSpec, injections_mw: &[f64], flows_mw: &[f64]) -> f64 {
    let mut net = injections_mw.to_vec();
    for (line, &f) in spec.lines.iter().zip(flows_mw) {
        net[spec.node_index(line.from).unwrap()] -= f;
        net[spec.node_index(line.to).unwrap()] += f;
    }
    let scale = injections_mw.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    net.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::spec::{Line, Node, Profile};
    use crate::logic::Duration;

    fn grid(nodes: &[(u32, NodeKind)], lines: &[(u32, u32, u32, f64, f64)]) -> GridSpec {
        GridSpec {
            nodes: nodes
                .iter()
                .map(|&(id, kind)| Node {
                    id,
                    kind,
                    profile: Profile::constant(0.0),
                })
                .collect(),
            lines: lines
                .iter()
                .map(|&(id, from, to, susceptance, capacity_mw)| Line {
                    id,
                    from,
                    to,
                    susceptance,
                    capacity_mw,
                })
                .collect(),
            gamma_recovery: Duration::minutes(30),
            tau_trip: Duration::minutes(15),
            slack_node: 1,
        }
    }

    use NodeKind::{Consumer as C, Generator as G};

    #[test]
    fn single_line_carries_everything() {
        let g = grid(&[(1, G), (2, C)], &[(1, 1, 2, 1.0, 8.0)]);
        let sol = flow_solve(&g, &[true], &[10.0, -10.0]).unwrap();
        assert!((sol.flows_mw[0] - 10.0).abs() <= 1e-9 * 10.0);
        assert!((sol.flows_mw[0].abs() / 8.0 - 1.25).abs() < 1e-12);
    }

    #[test]
    fn parallel_lines_split_evenly() {
        let g = grid(&[(1, G), (2, C)], &[(1, 1, 2, 1.0, 8.0), (2, 1, 2, 1.0, 8.0)]);
        let sol = flow_solve(&g, &[true, true], &[10.0, -10.0]).unwrap();
        for f in &sol.flows_mw {
            assert!((f - 5.0).abs() <= 1e-9 * 5.0);
        }
    }

    #[test]
    fn slack_absorbs_mismatch() {
        let g = grid(&[(1, G), (2, C)], &[(1, 1, 2, 2.0, 8.0)]);
        let sol = flow_solve(&g, &[true], &[3.0, -10.0]).unwrap();
        assert_eq!(sol.injections_mw, vec![10.0, -10.0]);
        assert!(node_balance_residual(&g, &sol.injections_mw, &sol.flows_mw) < 1e-12);
    }

    #[test]
    fn consumer_only_island_is_dark() {
        let g = grid(&[(1, G), (2, C), (3, C)], &[(1, 1, 2, 1.0, 8.0), (2, 2, 3, 1.0, 8.0)]);
        let sol = flow_solve(&g, &[true, false], &[5.0, -3.0, -2.0]).unwrap();
        assert_eq!(sol.injections_mw, vec![3.0, -3.0, 0.0]);
        assert!((sol.flows_mw[0] - 3.0).abs() < 1e-12);
        assert_eq!(sol.flows_mw[1], 0.0);
    }

    #[test]
    fn island_without_grid_slack_uses_its_own_generator() {
        let g = grid(
            &[(1, G), (2, C), (3, G), (4, C)],
            &[(1, 1, 2, 1.0, 8.0), (2, 3, 4, 1.0, 8.0), (3, 2, 3, 1.0, 8.0)],
        );
        let sol = flow_solve(&g, &[true, true, false], &[4.0, -4.0, 1.0, -6.0]).unwrap();
        assert_eq!(sol.injections_mw, vec![4.0, -4.0, 6.0, -6.0]);
        assert!((sol.flows_mw[1] - 6.0).abs() < 1e-12);
        let islands = Islands::compute(&g, &[true, true, false]);
        assert_eq!(islands.members, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(islands.slack_of(&g, 1), Some(2));
    }

    #[test]
    fn length_checks() {
        let g = grid(&[(1, G), (2, C)], &[(1, 1, 2, 1.0, 8.0)]);
        assert!(matches!(flow_solve(&g, &[true], &[1.0]), Err(FlowError::InjectionLength { .. })));
        assert!(matches!(flow_solve(&g, &[], &[1.0, -1.0]), Err(FlowError::TopologyLength { .. })));
    }
}
