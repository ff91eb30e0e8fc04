use super::coarsest_bisimulation;
use crate::semantics::{Automaton, AutomatonError, StateId};

/// The quotient by the greatest bisimulation, together with the map from
/// original states to blocks. Each block takes the descriptor of its least
/// member and the pushforward of that member's transitions.
pub fn minimize(aut: &Automaton) -> Result<(Automaton, Vec<StateId>), AutomatonError> {
    let part = coarsest_bisimulation(aut);
    let map: Vec<StateId> = (0..aut.len()).map(|s| part.block_of(s)).collect();
    let states = part.blocks().iter().map(|b| aut.descr(b[0]).clone()).collect();
    let trans =
        part.blocks().iter().map(|b| aut.row(b[0]).iter().map(|d| d.map_states(|t| map[*t])).collect()).collect();
    let quotient = Automaton::new(aut.alphabet().clone(), states, trans)?;
    Ok((quotient, map))
}
