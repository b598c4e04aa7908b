from .base import Agent, record_from_evaluator
from .checkpoint import (
    AGENT_KINDS,
    CheckpointError,
    CheckpointKindError,
    load_checkpoint,
    make_agent,
    save_checkpoint,
)
from .policy import PolicyNet, PPOAgent, ReinforceAgent, policy_forward, reinforce_update
from .qlearning import ACTIONS, QAgent, discretize, epsilon_greedy, q_update
