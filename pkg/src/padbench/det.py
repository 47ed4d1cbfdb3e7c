"""DET curves: the full APCER/BPCER trade-off over the threshold sweep.

A curve is the sequence of (threshold, apcer, bpcer) points over the same
candidate-threshold grid the EER search uses, with consecutive duplicate
operating points dropped.  Export is CSV, either in raw fractions or in
normal-deviate (probit) coordinates for the customary DET axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import FormatError, ValidationError
from .metrics import _sweep

__all__ = ["DetCurve", "sweep_det", "export_det", "parse_det", "probit"]

PROBIT_CLAMP = 1e-6  # keeps the inverse normal CDF finite at the endpoints


@dataclass(frozen=True)
class DetCurve:
    points: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.points:
            raise ValidationError("a DET curve needs at least one point")
        points = tuple((float(t), float(a), float(b)) for t, a, b in self.points)
        for t, a, b in points:
            if not (math.isfinite(t) and 0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
                raise ValidationError(f"invalid DET point ({t}, {a}, {b})")
        for (t0, a0, b0), (t1, a1, b1) in zip(points, points[1:]):
            if not t0 < t1:
                raise ValidationError("DET thresholds must be strictly increasing")
            if a1 < a0 or b1 > b0:
                raise ValidationError("DET curve must be a monotone staircase")
        object.__setattr__(self, "points", points)


def sweep_det(bona_fide, pooled_attacks):
    """One point per candidate threshold, deduplicated along the staircase."""
    cands, apcer_c, bpcer_c = _sweep(bona_fide, pooled_attacks)
    points = []
    for t, a, b in zip(cands, apcer_c, bpcer_c):
        if not points or (points[-1][1], points[-1][2]) != (a, b):
            points.append((float(t), float(a), float(b)))
    return DetCurve(points=tuple(points))


def export_det(curve, coordinates="raw"):
    """Render a DetCurve as a CSV text document with 6-decimal fields."""
    if coordinates == "raw":
        lines = ["threshold,apcer,bpcer"]
        for t, a, b in curve.points:
            lines.append(f"{t:.6f},{a:.6f},{b:.6f}")
    elif coordinates == "normal-deviate":
        lines = ["threshold,probit_apcer,probit_bpcer"]
        for t, a, b in curve.points:
            pa = probit(min(max(a, PROBIT_CLAMP), 1.0 - PROBIT_CLAMP))
            pb = probit(min(max(b, PROBIT_CLAMP), 1.0 - PROBIT_CLAMP))
            lines.append(f"{t:.6f},{pa:.6f},{pb:.6f}")
    else:
        raise ValidationError(f"unknown DET coordinates {coordinates!r}")
    return "\n".join(lines) + "\n"


def parse_det(text):
    """Parse a raw DET export back into a DetCurve.

    Only raw-coordinate documents round-trip; probit exports are for
    plotting and are rejected here.
    """
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines or lines[0] != "threshold,apcer,bpcer":
        raise FormatError("line 1: expected DET header 'threshold,apcer,bpcer'")
    points = []
    for n, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise FormatError(f"line {n}: expected 3 comma-separated fields")
        try:
            points.append(tuple(float(p) for p in parts))
        except ValueError:
            raise FormatError(f"line {n}: non-numeric DET field") from None
    try:
        return DetCurve(points=tuple(points))
    except ValidationError as exc:
        raise FormatError(f"DET body invalid: {exc}") from None


_PROBIT_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_PROBIT_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_PROBIT_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_PROBIT_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)


def probit(p):
    """Inverse standard normal CDF.

    Acklam's rational approximation refined with one Halley step against
    erfc, giving absolute error far below 1e-9 over (0, 1).
    """
    if not (isinstance(p, (int, float)) and 0.0 < p < 1.0):
        raise ValidationError("probit argument must lie strictly in (0, 1)")
    p = float(p)
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = _ratpoly(_PROBIT_C, _PROBIT_D, q)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        num = ((((_PROBIT_A[0] * r + _PROBIT_A[1]) * r + _PROBIT_A[2]) * r
                + _PROBIT_A[3]) * r + _PROBIT_A[4]) * r + _PROBIT_A[5]
        den = ((((_PROBIT_B[0] * r + _PROBIT_B[1]) * r + _PROBIT_B[2]) * r
                + _PROBIT_B[3]) * r + _PROBIT_B[4]) * r + 1.0
        x = q * num / den
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -_ratpoly(_PROBIT_C, _PROBIT_D, q)
    # Halley refinement against the exact CDF
    err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = err * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def _ratpoly(c, d, q):
    num = ((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]
    den = (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
    return num / den
