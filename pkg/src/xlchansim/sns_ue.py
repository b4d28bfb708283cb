"""UE-side spatial non-stationarity from hand and head obstruction."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np


class UsageScenario(str, Enum):
    ONE_HAND = "one_hand"
    TWO_HAND = "two_hand"
    HEAD_ONE_HAND = "head_one_hand"
    FREE_SPACE = "free_space"


OBSTRUCTED_FRACTION = 0.90
# Shares among obstructed UEs.
OBSTRUCTED_SPLIT = {
    UsageScenario.ONE_HAND: 0.58,
    UsageScenario.TWO_HAND: 0.29,
    UsageScenario.HEAD_ONE_HAND: 0.13,
}

# (name, low Hz, high Hz), inclusive edges.
BANDS = (
    ("sub1", 0.0, 1e9),
    ("1-8.4", 1e9, 8.4e9),
    ("14.5-15.5", 14.5e9, 15.5e9),
)


def usage_probabilities(obstructed: float = OBSTRUCTED_FRACTION, split: dict = OBSTRUCTED_SPLIT) -> dict:
    probs = {kind: obstructed * share for kind, share in split.items()}
    probs[UsageScenario.FREE_SPACE] = 1.0 - obstructed
    return probs


def sample_usage_scenario(rng: np.random.Generator, probabilities: dict | None = None) -> UsageScenario:
    probs = probabilities or usage_probabilities()
    kinds = list(probs)
    idx = rng.choice(len(kinds), p=np.array([probs[k] for k in kinds]))
    return kinds[idx]


def band_of(frequency: float, nearest: bool = False) -> str:
    for name, lo, hi in BANDS:
        if lo <= frequency <= hi:
            return name
    if not nearest:
        raise ValueError(f"no UE attenuation data for band containing {frequency / 1e9:g} GHz")
    gaps = [min(abs(frequency - lo), abs(frequency - hi)) for _, lo, hi in BANDS]
    return BANDS[int(np.argmin(gaps))][0]


@dataclass
class UeAttenuationTable:
    """Attenuation in dB keyed by (scenario, band, element index)."""

    entries: dict = field(default_factory=dict)
    nearest_band: bool = False

    @classmethod
    def from_csv(cls, path, nearest_band: bool = False) -> "UeAttenuationTable":
        entries = {}
        with open(Path(path), newline="") as fh:
            for row in csv.DictReader(fh):
                value = float(row["attenuation_db"])
                if value < 0:
                    raise ValueError("UE attenuation must be >= 0 dB")
                key = (UsageScenario(row["scenario"]), row["band"], int(row["element_index"]))
                entries[key] = value
        return cls(entries=entries, nearest_band=nearest_band)

    def attenuation_db(self, kind: UsageScenario, band: str, element: int) -> float:
        try:
            return self.entries[(UsageScenario(kind), band, int(element))]
        except KeyError:
            raise KeyError(f"no UE attenuation entry for {kind}, band {band}, element {element}") from None


def ue_attenuation(kind, frequency: float, element: int, table: UeAttenuationTable) -> float:
    """Linear power factor for one UE element."""
    if UsageScenario(kind) is UsageScenario.FREE_SPACE:
        return 1.0
    band = band_of(frequency, table.nearest_band)
    return 10.0 ** (-table.attenuation_db(kind, band, element) / 10.0)


def ue_attenuation_vector(kind, frequency: float, n_elements: int, table: UeAttenuationTable) -> np.ndarray:
    return np.array([ue_attenuation(kind, frequency, u, table) for u in range(n_elements)])
