from .config import ConfigError, ExperimentConfig, derive_seed, load_config, run_seed
from .experiment import ExperimentLedger, run_experiment
from .logger import cost_curves, fmt_sci, gap, logger_log, perf_table, read_aei
from .tester import MissingCheckpointError, run_classic, run_learned, tester_test
from .trainer import TrainingLog, checkpoint_interval, trainer_train, validation_return
