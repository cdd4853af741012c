"""Python access to the armsafe simulator, bounds and safety filter."""

import numpy as np

from ._armsafe import (
    TRACE_COLUMNS,
    ConfigError,
    Fault,
    config_keys,
    error_bound,
    forward_kinematics,
    jacobian,
    list_scenarios,
    mass_matrix,
    scenario_document,
    solve_safety_qp,
)
from ._armsafe import simulate as _simulate

COLUMNS = TRACE_COLUMNS.split(",")


def simulate(scenario="", document="", **overrides):
    """Run a scenario. Keyword overrides use dotted keys with '__' for '.',
    e.g. simulate("sim_wall_y", safety__gamma=5, filter="cbf_nominal").

    Returns a dict with metrics, the trace as {column: array} and the
    scenario document as run."""
    ov = {k.replace("__", "."): _yaml_value(v) for k, v in overrides.items()}
    out = _simulate(scenario, document, ov)
    data = out.pop("trace")
    out["trace"] = {name: data[:, i] for i, name in enumerate(COLUMNS)}
    return out


def _yaml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(repr(float(x)) for x in v) + "]"
    return str(v)


__all__ = [
    "COLUMNS",
    "ConfigError",
    "Fault",
    "config_keys",
    "error_bound",
    "forward_kinematics",
    "jacobian",
    "list_scenarios",
    "mass_matrix",
    "scenario_document",
    "simulate",
    "solve_safety_qp",
]
