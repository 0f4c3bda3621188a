"""Scenario files, experiment runners, CSV/SVG output and the command line."""

from .config import ScenarioConfig, config_from_dict, load_config, loads_config
from .csvio import ResultRow
from .experiments import COMBO_FLAGS, run_edit, run_eta_sweep, run_reconstruction
from .plot import emit_plot
from .presets import preset
from .selftest import report, run_selftest
