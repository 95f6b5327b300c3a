from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiment import RunRecord, prepare_dataset, run_experiment
from .mechanisms import SPECS, MechanismSpec, buy
from .report import ResultsTable, emit_report, read_results, write_results

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "RunRecord",
           "prepare_dataset", "run_experiment", "SPECS", "MechanismSpec", "buy",
           "ResultsTable", "emit_report", "read_results", "write_results"]
