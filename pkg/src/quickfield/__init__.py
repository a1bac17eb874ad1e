"""Dynamic distance potential fields for grid pedestrian simulation."""

from .dynamics import ModelParams, RunResult, init_state, run, step
from .experiment import AggregateMetrics, batch, sadd_sweep
from .fields import (ContractError, PotentialField, combine_v1, compute_s_dyn,
                     compute_static, flood_fill)
from .geometry import (CellKind, ExitLabel, ExitVariant, Grid, Neighborhood, ParseError,
                       Rimea11Params, Scenario, ValidationError, build_rimea11, neighbors,
                       parse_scenario)

__version__ = "0.1.0"
