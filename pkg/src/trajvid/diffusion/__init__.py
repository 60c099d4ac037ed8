from .schedule import NoiseSchedule, add_noise
from .training import (
    PreparedEpisode,
    TrainBatch,
    assemble_batch,
    build_feature_volume,
    prepare_episode,
    train,
    training_loss,
)
from .sampling import sample, sample_loop, sample_timesteps

__all__ = [
    "NoiseSchedule", "add_noise",
    "PreparedEpisode", "TrainBatch", "assemble_batch", "build_feature_volume",
    "prepare_episode", "train", "training_loss",
    "sample", "sample_loop", "sample_timesteps",
]
