"""Two-layer relationship graph over the signal set.

Layer 1 is complete: every unordered pair carries the latest spectral
similarity. Layer 2 is sparse: pairs are admitted when an exponentially
smoothed similarity crosses an upper threshold and evicted below a lower
one (hysteresis prevents flapping); admitted edges carry coherence payloads.
With alpha = 1 and equal thresholds the gate degenerates to the memoryless
rule "admitted iff similarity >= theta".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .coherence import CoherenceField
from .errors import DimensionMismatch, EdgeNotAdmitted, InvalidThresholds

Pair = tuple[int, int]


def ordered_pair(i: int, j: int) -> Pair:
    if i == j:
        raise ValueError("self-pairs are not edges")
    return (i, j) if i < j else (j, i)


@dataclass
class EdgeState:
    """Gated layer-2 edge bookkeeping."""

    pair: Pair
    ema: float
    admitted_at: int
    last_coherence_at: Optional[int] = None
    coherence: Optional[CoherenceField] = None


@dataclass(frozen=True)
class GateEvents:
    admissions: tuple[Pair, ...]
    evictions: tuple[Pair, ...]


class MultiplexGraph:
    """Single-writer graph state; readers receive copies or payload refs."""

    def __init__(self, labels: Sequence[str]):
        if len(labels) < 2:
            raise ValueError("graph needs at least two signals")
        self.labels = tuple(labels)
        self.m = len(self.labels)
        self.layer1 = np.zeros((self.m, self.m))
        self._ema: Optional[np.ndarray] = None
        self._admitted = np.zeros((self.m, self.m), dtype=bool)
        self.edges: dict[Pair, EdgeState] = {}
        self.dropped_payloads = 0

    # --- layer 1 ---

    def update_layer1(self, similarity: np.ndarray) -> None:
        similarity = np.asarray(similarity, dtype=np.float64)
        if similarity.shape != (self.m, self.m):
            raise DimensionMismatch(
                f"similarity is {similarity.shape}, graph has {self.m} nodes"
            )
        self.layer1 = similarity.copy()

    # --- layer 2 gating ---

    def gate_layer2(self, theta_on: float, theta_off: float, alpha: float,
                    tick: int) -> GateEvents:
        """Fold the current layer-1 weights into the EMA and re-gate.

        theta_on above 1 is allowed and keeps layer 2 empty, which is a
        convenient way to disable coherence work entirely. theta_off equal to
        theta_on (with alpha = 1) is the plain memoryless threshold rule.
        """
        if not (0.0 <= theta_off <= theta_on):
            raise InvalidThresholds(
                f"need 0 <= theta_off <= theta_on, got off={theta_off}, on={theta_on}"
            )
        if not (0.0 < alpha <= 1.0):
            raise InvalidThresholds(f"need 0 < alpha <= 1, got {alpha}")
        if self._ema is None:
            self._ema = self.layer1.copy()
        else:
            self._ema *= 1.0 - alpha
            self._ema += alpha * self.layer1

        iu = np.triu_indices(self.m, k=1)
        ema_u = self._ema[iu]
        present = self._admitted[iu]
        admit = (~present) & (ema_u >= theta_on)
        evict = present & (ema_u < theta_off)

        admissions = []
        for k in np.flatnonzero(admit):
            pair = (int(iu[0][k]), int(iu[1][k]))
            self.edges[pair] = EdgeState(pair=pair, ema=float(ema_u[k]), admitted_at=tick)
            self._admitted[pair] = True
            self._admitted[pair[::-1]] = True
            admissions.append(pair)
        evictions = []
        for k in np.flatnonzero(evict):
            pair = (int(iu[0][k]), int(iu[1][k]))
            # payload is discarded with the edge; history lives in snapshots
            del self.edges[pair]
            self._admitted[pair] = False
            self._admitted[pair[::-1]] = False
            evictions.append(pair)
        for pair, edge in self.edges.items():
            edge.ema = float(self._ema[pair])
        return GateEvents(tuple(sorted(admissions)), tuple(sorted(evictions)))

    # --- coherence scheduling and payloads ---

    def select_coherence_pairs(
        self,
        budget: int,
        interval: int,
        tick: int,
        pinned: Iterable[Pair] = (),
        pinned_recency: Optional[Mapping[Pair, int]] = None,
        exclude: Iterable[Pair] = (),
    ) -> list[Pair]:
        """Pairs due for a coherence refresh, highest EMA first.

        Pinned pairs come first and do not consume the budget; they are due
        on the same interval, tracked by ``pinned_recency`` when not
        admitted. Ties rank lexicographically so scheduling is deterministic.
        """
        if budget < 1:
            raise ValueError("budget must be >= 1")
        excluded = set(exclude)
        recency = pinned_recency or {}

        def due(pair: Pair) -> bool:
            edge = self.edges.get(pair)
            last = edge.last_coherence_at if edge is not None else recency.get(pair)
            return last is None or tick - last >= interval

        out: list[Pair] = []
        for pair in sorted(set(ordered_pair(*p) for p in pinned)):
            if pair not in excluded and due(pair):
                out.append(pair)
        pinned_set = set(out) | set(ordered_pair(*p) for p in pinned)
        ranked = sorted(
            (
                pair
                for pair, edge in self.edges.items()
                if pair not in pinned_set and pair not in excluded and due(pair)
            ),
            key=lambda p: (-self.edges[p].ema, p),
        )
        out.extend(ranked[:budget])
        return out

    def attach_coherence(self, pair: Pair, payload: CoherenceField, tick: int) -> None:
        pair = ordered_pair(*pair)
        edge = self.edges.get(pair)
        if edge is None:
            self.dropped_payloads += 1
            raise EdgeNotAdmitted(f"pair {pair} is not admitted")
        edge.coherence = payload
        edge.last_coherence_at = tick

    # --- views ---

    @property
    def layer2_pairs(self) -> tuple[Pair, ...]:
        return tuple(sorted(self.edges))

    def label_pair(self, pair: Pair) -> tuple[str, str]:
        return (self.labels[pair[0]], self.labels[pair[1]])
