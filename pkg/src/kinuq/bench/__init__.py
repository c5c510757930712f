from .config import ExperimentConfig, load_config
from .cases import CaseSetup, build_case

__all__ = ["ExperimentConfig", "load_config", "CaseSetup", "build_case"]
