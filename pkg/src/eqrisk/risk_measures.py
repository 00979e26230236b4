"""Empirical risk measure estimators over hedging-error samples."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RiskMeasureSpec",
    "semi_lp_spec",
    "cvar_spec",
    "HedgeStatistics",
    "semi_lp",
    "var_hat",
    "cvar_hat",
    "stats_suite",
]

TAIL_LEVELS = (0.90, 0.95, 0.99, 0.999)


@dataclass(frozen=True)
class RiskMeasureSpec:
    """Either semi-L^p (parameter p > 0) or CVaR (confidence alpha)."""

    kind: str  # "semi_lp" | "cvar"
    p: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == "semi_lp":
            if self.p is None or self.alpha is not None:
                raise ValueError("semi_lp spec takes exactly the parameter p")
            if self.p <= 0:
                raise ValueError("p must be > 0")
        elif self.kind == "cvar":
            if self.alpha is None or self.p is not None:
                raise ValueError("cvar spec takes exactly the parameter alpha")
            if not 0.0 < self.alpha < 1.0:
                raise ValueError("alpha must be in (0, 1)")
        else:
            raise ValueError(f"unknown risk measure kind {self.kind!r}")

    @property
    def translation_invariant(self) -> bool:
        return self.kind == "cvar"

    def evaluate(self, sample: np.ndarray) -> float:
        if self.kind == "semi_lp":
            return semi_lp(sample, self.p)
        return cvar_hat(sample, self.alpha)

    def label(self) -> str:
        if self.kind == "semi_lp":
            p = self.p
            return f"semi-L{int(p)}" if float(p).is_integer() else f"semi-L{p}"
        return f"CVaR{self.alpha}"


def semi_lp_spec(p: float) -> RiskMeasureSpec:
    return RiskMeasureSpec(kind="semi_lp", p=p)


def cvar_spec(alpha: float) -> RiskMeasureSpec:
    return RiskMeasureSpec(kind="cvar", alpha=alpha)


def _validate_sample(sample: np.ndarray) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if not np.isfinite(x).all():
        raise ValueError("sample contains non-finite entries")
    return x


def semi_lp(sample: np.ndarray, p: float) -> float:
    """((1/n) * sum x_i^p 1{x_i > 0})^(1/p); 0 when no positive entries.

    Evaluated with the positive entries rescaled by their maximum so that
    large p does not overflow naive powers.
    """
    if p <= 0:
        raise ValueError("p must be > 0")
    if p < 1:
        warnings.warn("semi-L^p with p < 1: x^p is concave on the loss region", stacklevel=2)
    x = _validate_sample(sample)
    pos = x[x > 0]
    if pos.size == 0:
        return 0.0
    m = pos.max()
    return float(m * (np.sum((pos / m) ** p) / x.size) ** (1.0 / p))


def var_hat(sample: np.ndarray, alpha: float) -> float:
    """Empirical VaR: the ceil(alpha*n)-th ascending order statistic,
    i.e. inf{x : F_hat(x) >= alpha}."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    x = _validate_sample(sample)
    k = math.ceil(alpha * x.size)
    return float(np.partition(x, k - 1)[k - 1])


def cvar_hat(sample: np.ndarray, alpha: float) -> float:
    """VaR plus the normalized average excess beyond it."""
    x = _validate_sample(sample)
    v = var_hat(x, alpha)
    return float(v + np.sum(np.maximum(x - v, 0.0)) / ((1.0 - alpha) * x.size))


@dataclass(frozen=True)
class HedgeStatistics:
    mean: float
    var: dict[float, float]
    cvar: dict[float, float]
    smse: float
    mse: float

    def as_rows(self) -> list[tuple[str, float]]:
        rows = [("Mean", self.mean)]
        rows += [(f"CVaR_{a}", self.cvar[a]) for a in TAIL_LEVELS]
        rows += [(f"VaR_{a}", self.var[a]) for a in TAIL_LEVELS]
        rows += [("SMSE", self.smse), ("MSE", self.mse)]
        return rows


def stats_suite(sample: np.ndarray) -> HedgeStatistics:
    """Mean, VaR/CVaR at the four tail levels, SMSE and MSE."""
    x = _validate_sample(sample)
    return HedgeStatistics(
        mean=float(x.mean()),
        var={a: var_hat(x, a) for a in TAIL_LEVELS},
        cvar={a: cvar_hat(x, a) for a in TAIL_LEVELS},
        smse=float(np.sum(x[x > 0] ** 2) / x.size),
        mse=float(np.mean(x**2)),
    )
