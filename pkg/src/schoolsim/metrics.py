"""Outcome classification and school-structure measurements."""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cs_components

from .geometry import Vec2
from .dynamics import SwarmState

# Two fish closer than this are considered in contact for the proximity
# graph (three times the preferred spacing of the default parameters).
DEFAULT_COMPONENT_DELTA = 0.3

CLASSIFIER_KINDS = ("center-distance", "min-x-threshold", "band-three-state")


class OutcomeState(Enum):
    FAILURE = "Failure"
    PRESUCCESS = "PreSuccess"
    SUCCESS = "Success"


@dataclass(frozen=True)
class Classifier:
    """Endpoint outcome rule.

    kind selects the rule:
      * ``center-distance``: Success iff the school center lies within
        success_radius of food_center.
      * ``min-x-threshold``: Success iff every fish has x strictly above
        right_threshold.
      * ``band-three-state``: Failure iff the rightmost fish is left of
        left_threshold; Success iff the leftmost fish is right of
        right_threshold; PreSuccess otherwise.
    """

    kind: str
    food_center: Vec2 | None = None
    success_radius: float | None = None
    left_threshold: float | None = None
    right_threshold: float | None = None

    def __post_init__(self):
        if self.kind not in CLASSIFIER_KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r} (expected one of {CLASSIFIER_KINDS})")
        if self.kind == "center-distance":
            if self.food_center is None or self.success_radius is None or self.success_radius <= 0:
                raise ValueError("center-distance classifier needs food_center and success_radius > 0")
        elif self.kind == "min-x-threshold":
            if self.right_threshold is None:
                raise ValueError("min-x-threshold classifier needs right_threshold")
        else:
            if self.left_threshold is None or self.right_threshold is None:
                raise ValueError("band-three-state classifier needs left_threshold and right_threshold")
            if not self.left_threshold <= self.right_threshold:
                raise ValueError("band-three-state classifier needs left_threshold <= right_threshold")


def school_center(state: SwarmState) -> Vec2:
    """Mean position of the school."""
    c = state.positions.mean(axis=0)
    return Vec2(c[0], c[1])


def connected_components(state: SwarmState, delta: float = DEFAULT_COMPONENT_DELTA) -> int:
    """Number of components of the proximity graph.

    Fish are adjacent when their distance is strictly below delta.
    """
    pos = state.positions
    diff = pos[:, None, :] - pos[None, :, :]
    adjacent = (diff * diff).sum(axis=2) < delta * delta
    np.fill_diagonal(adjacent, False)
    n, _labels = _cs_components(csr_matrix(adjacent), directed=False)
    return int(n)


def classify(state: SwarmState, classifier: Classifier) -> OutcomeState:
    """Apply the endpoint outcome rule to a state."""
    xs = state.positions[:, 0]
    if classifier.kind == "center-distance":
        center = state.positions.mean(axis=0)
        dx = center[0] - classifier.food_center.x
        dy = center[1] - classifier.food_center.y
        if np.hypot(dx, dy) < classifier.success_radius:
            return OutcomeState.SUCCESS
        return OutcomeState.FAILURE
    if classifier.kind == "min-x-threshold":
        if xs.min() > classifier.right_threshold:
            return OutcomeState.SUCCESS
        return OutcomeState.FAILURE
    # band-three-state: the Failure test is applied first, then Success.
    if xs.max() < classifier.left_threshold:
        return OutcomeState.FAILURE
    if xs.min() > classifier.right_threshold:
        return OutcomeState.SUCCESS
    return OutcomeState.PRESUCCESS
