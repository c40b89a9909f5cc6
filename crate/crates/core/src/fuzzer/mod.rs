// SPDX-License-Identifier: Apache-2.0
//! Mutation engine and campaign driver.

pub mod campaign;
pub mod det;
pub mod fitness;
pub mod forkserver;
pub mod mutate;
pub mod trim;

pub use campaign::{run_campaign, CampaignError, CampaignOptions, CampaignOutcome, CampaignReport};
pub use fitness::{ChampionDecision, Champions, Direction, Fitness};
pub use forkserver::{ForkClient, ForkServer, ProtocolError};
