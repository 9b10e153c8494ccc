"""Limits of level sequences a_m -> a from the tail of the sequence."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Extrapolation:
    limit: float
    error: float
    levels: tuple
    values: tuple
    raw_last: float


def tail_window(levels):
    """The last third of the levels, never fewer than three."""
    levels = sorted(levels)
    k = max(3, -(-len(levels) // 3))
    return levels[-k:]


def extrapolate(seq, degree=1, window=None, check_degree=None):
    """Fit a + b/m (+ c/m^2 + ... up to ``degree``) on the tail of ``seq``.

    ``seq`` maps m -> value.  The default window is the last third of the
    levels; ``window="all"`` fits on every level.  The error bar is the
    spread between this fit and a fit of ``check_degree`` (default one
    degree higher), plus the rms residual.
    """
    levels = sorted(m for m in seq if m > 0)
    if len(levels) < 3:
        raise ValueError("need at least three levels to extrapolate")
    win = levels if window == "all" else tail_window(levels)
    if len(win) < degree + 2:
        raise ValueError(f"need at least {degree + 2} levels for a degree {degree} fit")
    m = np.array(win, dtype=float)
    y = np.array([seq[k] for k in win], dtype=float)

    def fit(deg):
        basis = np.vstack([m ** -j for j in range(deg + 1)]).T
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        return coef, y - basis @ coef

    coef, resid = fit(degree)
    check = degree + 1 if check_degree is None else check_degree
    if len(win) < check + 1:
        raise ValueError(f"need at least {check + 1} levels for the check fit")
    coef2, _ = fit(check)
    err = abs(coef[0] - coef2[0]) + float(np.sqrt(np.mean(resid ** 2)))
    return Extrapolation(float(coef[0]), float(err), tuple(levels),
                         tuple(float(seq[k]) for k in levels), float(seq[levels[-1]]))
