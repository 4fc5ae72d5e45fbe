"""Value-based agents and the representation regularizers they can carry."""
from beer.agents.config import REGULARIZERS, AgentConfig
from beer.agents.dpg import DPGAgent
from beer.agents.dqn import DQNAgent, LossTerms, StepMetrics
from beer.agents.networks import Actor, AuxHeads, Critic, ValueNetwork, soft_update
from beer.agents.regularizers import beer_bound, beer_regularizer, bound_gap, dr3_penalty, infer_loss

__all__ = [
    "AgentConfig", "REGULARIZERS", "DPGAgent", "DQNAgent", "LossTerms", "StepMetrics", "Actor", "AuxHeads",
    "Critic", "ValueNetwork", "soft_update", "beer_bound", "beer_regularizer", "bound_gap",
    "dr3_penalty", "infer_loss",
]
