from .docking import AtomSet, DockingComplex, docking_energy, pair_energy, switching_factor
from .evaluator import Evaluator, LogicalClock
from .functions import NOISY, SYNTHETIC
from .noise import NoiseModel, apply_noise
from .problems import (
    DatasetSplit,
    Problem,
    UnknownFunctionError,
    evaluate,
    evaluate_noiseless,
    make_instance,
    problem_from_key,
    split_dataset,
)
