"""Constructive-interference precoding for radar/communication coexistence."""

import json

from ._core import (
    crb_closed_form,
    detection_probability,
    detection_threshold,
    gen_channels,
    instance_hash,
    interf_min,
    marcum_q1,
    power_min,
    psk_phases,
    robust_power_min,
)
from ._core import run as _run

__all__ = [
    "crb_closed_form",
    "detection_probability",
    "detection_threshold",
    "gen_channels",
    "instance_hash",
    "interf_min",
    "marcum_q1",
    "power_min",
    "psk_phases",
    "robust_power_min",
    "run",
]


def run(config):
    """Run an experiment from a config dict; returns (csv_text, summary dict)."""
    text, summary = _run(json.dumps(config))
    return text, json.loads(summary)
