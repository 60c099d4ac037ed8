from .model import PolicyModel
from .training import policy_loss, train_policy
from .evaluate import PolicyEvalItem, closed_loop_eval, replay_joints, write_eval_report

__all__ = [
    "PolicyModel", "policy_loss", "train_policy",
    "PolicyEvalItem", "closed_loop_eval", "replay_joints", "write_eval_report",
]
