//! Bundled problem instances.
//!
//! The seven-agent problems share voting weights, channel gains, costs,
//! horizon (`T = 10`) and budget (`r = 11`) on a fixed connected topology:
//!
//! ```text
//! 1 - 2 - 4 - 6
//! | /     |   |
//! 3 ----- 5 - 7
//! ```
//!
//! (edges 1-2, 1-3, 2-3, 2-4, 3-5, 4-5, 4-6, 5-7, 6-7, all of weight 1).

use crate::problem::CampaignProblem;

pub const K2_JSON: &str = include_str!("../data/k2.json");
pub const SEVEN_AGENT_JSON: &str = include_str!("../data/seven_agent.json");
pub const SEVEN_AGENT_SIGMOID_JSON: &str = include_str!("../data/seven_agent_sigmoid.json");

fn parse(src: &str) -> CampaignProblem {
    serde_json::from_str(src).expect("bundled problem files are valid")
}

/// Two agents, one channel on agent 1, all weight on agent 2:
/// `h(t) = 1/2 - e^{2 (t - 1)} / 2`.
pub fn k2() -> CampaignProblem {
    parse(K2_JSON)
}

pub fn seven_agent() -> CampaignProblem {
    parse(SEVEN_AGENT_JSON)
}

/// Sigmoid version of [`seven_agent`] with thresholds set so agents 3 and 4
/// end within the default epsilon of their thresholds.
pub fn seven_agent_sigmoid() -> CampaignProblem {
    parse(SEVEN_AGENT_SIGMOID_JSON)
}

pub fn by_name(name: &str) -> Option<CampaignProblem> {
    match name {
        "k2" => Some(k2()),
        "seven-agent" => Some(seven_agent()),
        "seven-agent-sigmoid" => Some(seven_agent_sigmoid()),
        _ => None,
    }
}

pub const NAMES: [&str; 3] = ["k2", "seven-agent", "seven-agent-sigmoid"];
