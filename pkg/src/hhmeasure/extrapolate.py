"""Sequence-limit estimation for slowly converging lattice quantities.

Aitken delta-squared is the default accelerator, Richardson (known power law)
the optional one.  A limit claim is only as good as its shrinking-gap
certificate, so every helper here reports Cauchy diagnostics alongside the
accelerated value, and the Aitken estimate is kept inside a safety hull around
the raw tail rather than trusted blindly: near-geometric noise can make the
raw Delta^2 formula shoot far outside anything the data supports.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def gaps(values):
    return [b - a for a, b in zip(values, values[1:])]


def max_tail_gap(values, tail: int = 3) -> float:
    """Largest |successive gap| over the last `tail` gaps."""
    g = gaps(values)
    if not g:
        return float("nan")
    return max(abs(x) for x in g[-tail:])


def gaps_decreasing(values, strict: bool = True) -> bool:
    """Cauchy certificate: |gaps| decreasing along the whole sequence."""
    g = [abs(x) for x in gaps(values)]
    if len(g) < 2:
        return False
    if strict:
        return all(b < a for a, b in zip(g, g[1:]))
    return all(b <= a for a, b in zip(g, g[1:]))


def endpoint_decrease(values, strict: bool = True) -> dict:
    """Decrease verdict between first and last value (>= 3 points required).

    Interior wobble is tolerated but reported, so callers can log it.
    """
    if len(values) < 3:
        return {"ok": False, "reason": "need at least 3 points", "monotone": False}
    drop = values[-1] < values[0] if strict else values[-1] <= values[0]
    monotone = all(b < a for a, b in zip(values, values[1:]))
    return {
        "ok": bool(drop),
        "monotone": bool(monotone),
        "first": float(values[0]),
        "last": float(values[-1]),
        "reason": "" if drop else "no decrease between endpoints",
    }


@dataclass
class Extrapolation:
    limit: float
    method: str
    raw_limit: float
    clamped: bool
    table: list = field(default_factory=list)
    cauchy_gap: float = float("nan")

    def as_dict(self) -> dict:
        return {
            "limit": self.limit,
            "method": self.method,
            "raw_limit": self.raw_limit,
            "clamped": self.clamped,
            "cauchy_gap": self.cauchy_gap,
        }


def _hull_clamp(candidate: float, values) -> tuple:
    """Clamp to the hull of the last three values, widened by 3 last gaps.

    For a monotone tail the true limit lies on the far side of the last value,
    no further than the geometric-sum bound ~ gap/(1-r); three extra gaps
    covers every ratio r <= 2/3 seen in these series.
    """
    tail = values[-3:]
    g = abs(tail[-1] - tail[-2]) if len(tail) >= 2 else 0.0
    lo, hi = min(tail) - 3.0 * g, max(tail) + 3.0 * g
    if candidate < lo:
        return lo, True
    if candidate > hi:
        return hi, True
    return candidate, False


def aitken(values) -> Extrapolation:
    """Aitken delta-squared limit of the last available triple."""
    v = [float(x) for x in values]
    if len(v) < 3:
        raise ValueError("aitken needs at least 3 values")
    table = []
    for a, b, c in zip(v, v[1:], v[2:]):
        den = (c - b) - (b - a)
        table.append(c if den == 0.0 else c - (c - b) ** 2 / den)
    raw = table[-1]
    limit, clamped = _hull_clamp(raw, v)
    return Extrapolation(
        limit=limit,
        method="aitken",
        raw_limit=raw,
        clamped=clamped,
        table=table,
        cauchy_gap=max_tail_gap(v),
    )


def richardson(values, indices, power: float = 1.0) -> Extrapolation:
    """Limit of v(n) = L + b n^-power from the last pair of indices."""
    v = [float(x) for x in values]
    if len(v) < 2 or len(v) != len(indices):
        raise ValueError("richardson needs matched values/indices, >= 2 points")
    table = []
    for (n1, x1), (n2, x2) in zip(zip(indices, v), zip(indices[1:], v[1:])):
        w1, w2 = float(n1) ** -power, float(n2) ** -power
        table.append((x2 * w1 - x1 * w2) / (w1 - w2))
    raw = table[-1]
    limit, clamped = (raw, False) if len(v) < 3 else _hull_clamp(raw, v)
    return Extrapolation(
        limit=limit,
        method=f"richardson(p={power:g})",
        raw_limit=raw,
        clamped=clamped,
        table=table,
        cauchy_gap=max_tail_gap(v),
    )
