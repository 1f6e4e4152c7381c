from __future__ import annotations

import json
from pathlib import Path

import pytest

from netintent.clock import VirtualClock, parse_epoch
from netintent.records import Snssai, SliceConfig
from netintent.sim import CoreSim, attach_ues
from netintent.stack import Stack, StackConfig

FIXTURES = Path(__file__).parent / "fixtures"

# Monday 16:26 local; use case 2 is anchored one minute before its window.
MONDAY_EPOCH = "2025-01-06T16:26:00+00:00"

USE_CASE_1_TEXT = (
    "Want to predict memory utilization % for the internet slice based on 500 recent values."
)
USE_CASE_2_TEXT = (
    "Increase the data rate for the 'streaming' slice by 20% from 4:27 PM until "
    "4:30 PM on weekdays."
)

TWO_SLICES = [
    {
        "name": "internet",
        "sst": 1,
        "ambr_dl": 50000,
        "ambr_ul": 50000,
        "capacity_dl": 100000,
        "capacity_ul": 100000,
    },
    {
        "name": "streaming",
        "sst": 2,
        "ambr_dl": 100000,
        "ambr_ul": 100000,
        "capacity_dl": 200000,
        "capacity_ul": 200000,
    },
]


def make_clock(epoch: str = MONDAY_EPOCH, tick_ms: int = 1000) -> VirtualClock:
    return VirtualClock(epoch=parse_epoch(epoch), tick_ms=tick_ms)


def make_sim(seed: int = 7, num_ues: int = 10, tick_ms: int = 1000) -> CoreSim:
    sim = CoreSim(seed=seed, clock=make_clock(tick_ms=tick_ms))
    for s in TWO_SLICES:
        sim.create_slice(
            SliceConfig(
                snssai=Snssai(s["sst"]),
                name=s["name"],
                ambr_dl=s["ambr_dl"],
                ambr_ul=s["ambr_ul"],
                capacity_dl=s["capacity_dl"],
                capacity_ul=s["capacity_ul"],
            )
        )
    if num_ues:
        attach_ues(sim, num_ues)
    return sim


def make_stack_config(**overrides) -> StackConfig:
    base = {
        "seed": 7,
        "epoch": MONDAY_EPOCH,
        "slices": TWO_SLICES,
        "num_ues": 10,
        "backend": {"kind": "scripted", "path": str(FIXTURES / "usecase2_script.json")},
    }
    base.update(overrides)
    return StackConfig.from_json_obj(base)


@pytest.fixture
def stack() -> Stack:
    return Stack(make_stack_config())


def write_config(tmp_path: Path, **overrides) -> Path:
    base = {
        "seed": 7,
        "epoch": MONDAY_EPOCH,
        "slices": TWO_SLICES,
        "num_ues": 10,
        "backend": {"kind": "scripted", "path": str(FIXTURES / "usecase2_script.json")},
    }
    base.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(base, indent=2), encoding="utf-8")
    return path
