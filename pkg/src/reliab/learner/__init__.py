from .data import Dataset, load_idx, make_blobs, train_test_split
from .model import ModelState, backward, forward, init_mlp
from .optim import SGD, AdaBound, Adam, make_optimizer
from .perturb import PerturbationSpec, apply_perturbation

__all__ = [
    "Dataset", "load_idx", "make_blobs", "train_test_split",
    "ModelState", "backward", "forward", "init_mlp",
    "SGD", "Adam", "AdaBound", "make_optimizer",
    "PerturbationSpec", "apply_perturbation",
]
