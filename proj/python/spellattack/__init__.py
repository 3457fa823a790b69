"""Adversarial perturbation templates against P300 and SSVEP spellers."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import __version__, score_p300_json


def score_p300(model, data, pattern, attackers, repeats=(15,), delay_samples=0):
    """Attack reports as dicts, one per entry of `repeats`."""
    return [_json.loads(r) for r in score_p300_json(str(model), str(data), pattern, attackers, list(repeats), delay_samples)]
