from dataclasses import dataclass, field
from typing import Union

import numpy as np


@dataclass(frozen=True)
class SimplePrimitive:
    """Move a single joint by a signed amount (radians)."""

    joint: int
    delta: float


@dataclass(frozen=True, eq=False)
class AMP:
    """Straight joint-space motion from a source configuration to ``target``.

    ``path`` is the inclusive interpolation, ``path[0]`` being the source.
    """

    target: np.ndarray
    path: list = field(repr=False)

    @property
    def source(self):
        return self.path[0]

    @property
    def cost(self):
        p = np.asarray(self.path)
        if len(p) < 2:
            return 0.0
        return float(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)))


Action = Union[SimplePrimitive, AMP]
