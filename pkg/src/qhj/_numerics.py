from __future__ import annotations

import sys
from typing import Callable

from .core import ConvergenceError

EPS = sys.float_info.epsilon
STEP_FACTOR = EPS ** (1.0 / 3.0)


def richardson_derivative(f: Callable[[float], float], h: float, *, levels: int = 2,
                          rtol: float = 1e-6) -> tuple[float, float]:
    """Derivative of ``f`` at 0 from central differences with steps h, h/2, ...

    Builds a Richardson tableau of depth ``levels`` (even-order error terms)
    and returns ``(estimate, error_estimate)``.  Raises ``ConvergenceError``
    when the last two diagonal entries disagree by more than ``rtol`` times
    the estimate plus the rounding floor of the smallest step.
    """
    if not h > 0.0:
        raise ValueError("step must be positive")
    rows: list[list[float]] = []
    fscale = 0.0
    for i in range(levels + 1):
        hi = h / 2**i
        fp, fm = f(hi), f(-hi)
        fscale = max(fscale, abs(fp), abs(fm))
        row = [(fp - fm) / (2.0 * hi)]
        for j in range(1, i + 1):
            w = 4.0**j
            row.append((w * row[j - 1] - rows[i - 1][j - 1]) / (w - 1.0))
        rows.append(row)
    best = rows[-1][-1]
    err = abs(best - rows[-1][-2]) if levels else 0.0
    floor = 1e3 * EPS * max(fscale, 1e-300) / (h / 2**levels)
    if err > rtol * abs(best) + floor:
        raise ConvergenceError(
            f"Richardson tableau not converged: estimate {best:.6e}, error {err:.3e}"
        )
    return best, err
