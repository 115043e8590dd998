"""A plugin builder used by the CLI tests."""

import numpy as np

from ddeperiodic import linear_system


def build(raw):
    dyn = raw["dynamics"]
    rate = float(raw["system"].get("rate", -1.0))
    return linear_system(np.array([[rate]]), np.zeros((1, 1)),
                         dyn.get("tau", 0.0), dyn["period"])
