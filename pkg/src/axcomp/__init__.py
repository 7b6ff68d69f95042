"""Simulator and toolkit for decision-tree compensated approximate multipliers."""

from .cells import AMA5, EXACT, AdderCellSpec, CellKind, cell_error_rows, eval_cell, get_cell
from .compensator import (
    AcceleratorConfig,
    CompensatedMultiplier,
    Mode,
    accelerator_compensation,
    characterize_compensated,
    multiply_compensated,
)
from .learner import CompensationTable, CompensationTree, Quantizer, build_table, predict, quantize, train_tree
from .mularray import (
    EXACT_CONFIG,
    DEFAULT_CONFIG,
    MultiplierConfig,
    MultiplierNetlist,
    build_netlist,
    cell_census,
    error_distance,
    multiply,
)
from .profiler import ErrorProfile, ErrorStats, characterize, histogram, tail_count

__version__ = "0.1.0"
