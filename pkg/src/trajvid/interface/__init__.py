from .jobs import Job, JobQueue, JobStore, QueueFull
from .runs import load_flat_config, make_run_dir, train_config_from
from .service import create_app

__all__ = [
    "Job", "JobQueue", "JobStore", "QueueFull",
    "load_flat_config", "make_run_dir", "train_config_from", "create_app",
]
