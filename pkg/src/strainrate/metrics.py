"""Per-element peak metrics from deformation histories.

Five scalars summarize one element's history:

* ``mps``       — peak over time of the largest Green-strain eigenvalue
* ``mpsr1``     — peak of the five-point-stencil time derivative of that
  eigenvalue trace (scheme 1; may be negative while the strain relaxes)
* ``mpsr2``     — peak of the largest rate-of-deformation eigenvalue (scheme 2)
* ``mps_x_sr1`` — peak of the pointwise product (instantaneous principal
  strain) x (scheme-1 rate)
* ``mps_x_sr2`` — same with the scheme-2 rate

A history arrives either as a deformation-gradient series F(t) (kinematic
mode, everything derived here) or as already-exported strain and
rate-of-deformation series E(t), D(t) (FE-export mode).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidTensor
from .tensors import (
    DET_FLOOR,
    ScalarSeries,
    det3,
    eig_sym3,
    fd_derivative,
    fd_diff,
    fd_tensor_derivative,
    green_strain,
    rate_of_deformation,
    velocity_gradient,
)


class HistoryMode(Enum):
    KINEMATIC = "F"    # F(t) series, shape (n, 3, 3)
    FE_EXPORT = "ED"   # E(t) and D(t) packed symmetric series, shape (n, 6)


class RateScheme(Enum):
    S1 = 1  # rate = stencil derivative of the principal-strain trace
    S2 = 2  # rate = largest eigenvalue of the rate-of-deformation tensor


@dataclass
class ElementHistory:
    """One element's deformation time series with a uniform timestep."""

    element_id: int
    dt: float
    mode: HistoryMode
    f: np.ndarray | None = None  # (n, 3, 3), kinematic mode
    e: np.ndarray | None = None  # (n, 6), FE-export mode
    d: np.ndarray | None = None  # (n, 6), FE-export mode

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.mode is HistoryMode.KINEMATIC:
            if self.f is None or self.e is not None or self.d is not None:
                raise ValueError("kinematic mode takes exactly the F series")
            self.f = np.asarray(self.f, dtype=float)
            if self.f.ndim != 3 or self.f.shape[1:] != (3, 3):
                raise ValueError(f"F series must have shape (n, 3, 3), got {self.f.shape}")
            if self.f.shape[0] < 5:
                raise ValueError("history needs at least 5 steps")
            if not np.isfinite(self.f).all():
                raise InvalidTensor(f"element {self.element_id}: non-finite F")
            dets = det3(self.f)
            if np.any(dets <= DET_FLOOR):
                step = int(np.argmax(dets <= DET_FLOOR))
                raise ValueError(
                    f"element {self.element_id}: det(F) = {dets[step]:.3e} <= 0 at step {step}"
                )
        elif self.mode is HistoryMode.FE_EXPORT:
            if self.e is None or self.d is None or self.f is not None:
                raise ValueError("FE-export mode takes exactly the E and D series")
            self.e = np.asarray(self.e, dtype=float)
            self.d = np.asarray(self.d, dtype=float)
            for name, arr in (("E", self.e), ("D", self.d)):
                if arr.ndim != 2 or arr.shape[1] != 6:
                    raise ValueError(f"{name} series must have shape (n, 6), got {arr.shape}")
                if not np.isfinite(arr).all():
                    raise InvalidTensor(f"element {self.element_id}: non-finite {name}")
            if self.e.shape[0] != self.d.shape[0]:
                raise ValueError("E and D series must share one length")
            if self.e.shape[0] < 5:
                raise ValueError("history needs at least 5 steps")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def n_steps(self) -> int:
        series = self.f if self.mode is HistoryMode.KINEMATIC else self.e
        return series.shape[0]


@dataclass
class ElementMetrics:
    element_id: int
    mps: float
    mpsr1: float
    mpsr2: float
    mps_x_sr1: float
    mps_x_sr2: float


def _strain_series(h: ElementHistory) -> np.ndarray:
    if h.mode is HistoryMode.KINEMATIC:
        return green_strain(h.f)
    return h.e


def _rate_tensor_series(h: ElementHistory) -> np.ndarray:
    if h.mode is HistoryMode.FE_EXPORT:
        return h.d
    fdot = fd_tensor_derivative(h.f, h.dt)
    return rate_of_deformation(velocity_gradient(fdot, h.f))


def mps_trace(h: ElementHistory) -> ScalarSeries:
    """Largest Green-strain eigenvalue at every step."""
    return ScalarSeries(eig_sym3(_strain_series(h))[:, 0], h.dt)


def element_mps(h: ElementHistory) -> float:
    """Peak over time of the principal-strain trace."""
    return float(mps_trace(h).values.max())


def element_mpsr1(h: ElementHistory) -> float:
    """Scheme-1 rate peak: stencil derivative of the principal-strain trace.

    Negative when the principal strain only ever decreases.
    """
    return float(fd_derivative(mps_trace(h)).values.max())


def element_mpsr2(h: ElementHistory) -> float:
    """Scheme-2 rate peak: largest rate-of-deformation eigenvalue over time."""
    return float(eig_sym3(_rate_tensor_series(h))[:, 0].max())


def element_mps_x_sr(h: ElementHistory, scheme: RateScheme) -> float:
    """Peak of the pointwise product strain(t) * rate(t).

    The strain factor is the instantaneous largest Green-strain eigenvalue
    (not its running peak); the rate factor follows the chosen scheme.
    """
    strain = eig_sym3(_strain_series(h))[:, 0]
    if scheme is RateScheme.S1:
        rate = fd_diff(strain, h.dt)
    else:
        rate = eig_sym3(_rate_tensor_series(h))[:, 0]
    return float((strain * rate).max())


def compute_element_metrics(h: ElementHistory) -> ElementMetrics:
    """All five metrics in one pass over shared intermediates.

    Agrees exactly with the single-metric functions: the same series feed
    the same reductions.
    """
    strain = eig_sym3(_strain_series(h))[:, 0]
    rate1 = fd_diff(strain, h.dt)
    rate2 = eig_sym3(_rate_tensor_series(h))[:, 0]
    return ElementMetrics(
        element_id=h.element_id,
        mps=float(strain.max()),
        mpsr1=float(rate1.max()),
        mpsr2=float(rate2.max()),
        mps_x_sr1=float((strain * rate1).max()),
        mps_x_sr2=float((strain * rate2).max()),
    )
