use super::params::RodParameters;
use super::state::RodState;
use super::RodError;

/// Diagonal of the lumped mass matrix in interleaved DoF order.
///
/// Each node carries half the mass of every incident undeformed edge; each
/// material angle carries the edge's polar inertia `ρ J |ē|`.
pub fn lumped_mass(state: &RodState, params: &RodParameters) -> Result<Vec<f64>, RodError> {
    params.validate()?;
    let rho_a = params.density * params.area();
    let rho_j = params.density * params.polar_moment();
    let mut m = vec![0.0; state.dof_count()];
    for (i, &l) in state.rest().edge_lengths.iter().enumerate() {
        let (a, b) = state.edge_nodes(i);
        for node in [a, b] {
            for d in 0..3 {
                m[RodState::node_dof(node) + d] += 0.5 * rho_a * l;
            }
        }
        m[RodState::edge_dof(i)] = rho_j * l;
    }
    Ok(m)
}
