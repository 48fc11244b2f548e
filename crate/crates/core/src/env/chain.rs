use super::TabularMdp;

pub(crate) const CHAIN_MAX_STEPS: usize = 50;

const STATES: usize = 8;
const GOAL: usize = 7;
const FIRST_SHORTCUT: usize = 1;
const FINAL_SHORTCUT: usize = 4;

/// Eight-state chain toward an absorbing goal with two risky shortcuts.
///
/// Action 0 advances one state. Action 1 jumps `1 -> 4` or `4 -> 7`
/// through a hazard at the shortcut states (the second jump also passes a
/// bonus) and waits in place everywhere else.
///
/// Features are indicators `(goal, bonus, hazard, step)`; the hazard and
/// step features are positive, so they carry negative weights.
pub fn chain_mdp() -> TabularMdp {
    let actions = 2;
    let mut transitions = vec![0; STATES * actions];
    let mut features = vec![vec![0.0; 4]; STATES * actions];
    for s in 0..STATES {
        let walk = s * actions;
        let alt = walk + 1;
        if s == GOAL {
            transitions[walk] = GOAL;
            transitions[alt] = GOAL;
            continue;
        }
        transitions[walk] = s + 1;
        features[walk][3] = 1.0;
        if s + 1 == GOAL {
            features[walk][0] = 1.0;
        }
        match s {
            FIRST_SHORTCUT => {
                transitions[alt] = FINAL_SHORTCUT;
                features[alt] = vec![0.0, 0.0, 1.0, 1.0];
            }
            FINAL_SHORTCUT => {
                transitions[alt] = GOAL;
                features[alt] = vec![1.0, 1.0, 1.0, 1.0];
            }
            _ => {
                transitions[alt] = s;
                features[alt][3] = 1.0;
            }
        }
    }
    let mut terminal = vec![false; STATES];
    terminal[GOAL] = true;
    TabularMdp::new(
        actions,
        transitions,
        features,
        terminal,
        0,
        vec!["goal".into(), "bonus".into(), "hazard".into(), "step".into()],
    )
    .expect("chain definition is consistent")
}
