"""Synthetic deformation-gradient histories and corpus generation.

Five analytic motion families cover the regimes where the two rate schemes
agree or diverge::

    uniaxial          F = diag(1 + r t, 1, 1)
    simple_shear      F = I with f12 = gdot t
    rigid_rotation    F = R_z(w t)
    rotating_stretch  F = R_z(w t) diag(L, 1/L, 1) R_z(w t)^T,  L = 1 + r t
                      (principal stretch direction spins at w; volume preserved)
    smooth_random     F = R(rotation walk) exp(symmetric walk): a seeded,
                      smoothed random walk through stretch and rotation space
                      with the volumetric part clamped so det(F) >= exp(-0.6)

Within the documented parameter bounds every generated F(t) keeps
det(F) > 0.1 at all steps.  All randomness is driven by explicit seeds; a
corpus derives one sub-seed per impact and per element, so regeneration is
bitwise reproducible.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .aggregate import ImpactRecord
from .metrics import ElementHistory, HistoryMode
from .seeding import derive_rng, derive_seed
from .tensors import sym_to_full


class MotionFamily(Enum):
    UNIAXIAL = "uniaxial"
    SIMPLE_SHEAR = "simple_shear"
    RIGID_ROTATION = "rigid_rotation"
    ROTATING_STRETCH = "rotating_stretch"
    SMOOTH_RANDOM = "smooth_random"


#: |stretch_rate| * duration must stay below this (keeps stretches away from collapse)
MAX_STRETCH_EXTENT = 0.85

MAX_RATE = 1000.0
MAX_AMPLITUDE = 2.5

#: volumetric walk clamp: |trace| <= 3 * VOL_CLAMP, so det(F) >= exp(-0.6)
VOL_CLAMP = 0.2


@dataclass
class MotionSpec:
    family: MotionFamily
    duration: float
    dt: float
    stretch_rate: float = 0.0      # 1/s (uniaxial, rotating_stretch)
    shear_rate: float = 0.0        # 1/s (simple_shear)
    angular_velocity: float = 0.0  # rad/s (rigid_rotation, rotating_stretch)
    amplitude: float = 0.0         # walk scale (smooth_random)
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 5:
            raise ValueError(f"duration {self.duration} at dt {self.dt} yields "
                             f"{self.n_steps} steps; need >= 5")
        if self.family in (MotionFamily.UNIAXIAL, MotionFamily.ROTATING_STRETCH):
            if abs(self.stretch_rate) * self.duration > MAX_STRETCH_EXTENT:
                raise ValueError(
                    f"|stretch_rate| * duration = "
                    f"{abs(self.stretch_rate) * self.duration:.3g} exceeds {MAX_STRETCH_EXTENT}"
                )
        if abs(self.shear_rate) > MAX_RATE or abs(self.angular_velocity) > MAX_RATE:
            raise ValueError("rate parameters exceed the documented bound of 1000")
        if self.family is MotionFamily.SMOOTH_RANDOM:
            if not 0.0 < self.amplitude <= MAX_AMPLITUDE:
                raise ValueError(f"amplitude must be in (0, {MAX_AMPLITUDE}], got {self.amplitude}")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt)) + 1


def _rot_z(theta):
    r = np.zeros(np.shape(theta) + (3, 3))
    c, s = np.cos(theta), np.sin(theta)
    r[..., 0, 0] = c
    r[..., 0, 1] = -s
    r[..., 1, 0] = s
    r[..., 1, 1] = c
    r[..., 2, 2] = 1.0
    return r


def _rotation_from_vectors(w):
    """Rodrigues rotation matrices from rotation vectors, shape (n, 3)."""
    angle = np.linalg.norm(w, axis=-1)
    safe = np.where(angle > 0.0, angle, 1.0)
    axis = w / safe[:, None]
    kx, ky, kz = axis[:, 0], axis[:, 1], axis[:, 2]
    zeros = np.zeros_like(kx)
    k = np.stack(
        [
            np.stack([zeros, -kz, ky], axis=-1),
            np.stack([kz, zeros, -kx], axis=-1),
            np.stack([-ky, kx, zeros], axis=-1),
        ],
        axis=-2,
    )
    sin_a = np.sin(angle)[:, None, None]
    cos_a = np.cos(angle)[:, None, None]
    eye = np.eye(3)[None, :, :]
    r = eye + sin_a * k + (1.0 - cos_a) * (k @ k)
    return np.where((angle > 0.0)[:, None, None], r, eye)


def _expm_sym(s_packed):
    """Matrix exponential of packed symmetric tensors via eigendecomposition."""
    lam, q = np.linalg.eigh(sym_to_full(s_packed))
    return np.einsum("...ij,...j,...kj->...ik", q, np.exp(lam), q)


def _smooth_walk(rng, n, channels, dt, scale):
    """Smoothed Gaussian random walk starting at zero, shape (n, channels)."""
    inc = rng.standard_normal((n, channels)) * (scale * math.sqrt(dt))
    window = min(31, max(3, n // 10))
    kernel = np.hanning(window + 2)[1:-1]
    kernel /= kernel.sum()
    smoothed = np.empty_like(inc)
    for c in range(channels):
        smoothed[:, c] = np.convolve(inc[:, c], kernel, mode="same")
    walk = np.cumsum(smoothed, axis=0)
    return walk - walk[0]


def generate_motion(spec: MotionSpec, element_id: int = 0) -> ElementHistory:
    """Deformation-gradient history for one element of the given family."""
    n = spec.n_steps
    t = np.arange(n) * spec.dt
    fam = spec.family

    if fam is MotionFamily.UNIAXIAL:
        f = np.tile(np.eye(3), (n, 1, 1))
        f[:, 0, 0] = 1.0 + spec.stretch_rate * t
    elif fam is MotionFamily.SIMPLE_SHEAR:
        f = np.tile(np.eye(3), (n, 1, 1))
        f[:, 0, 1] = spec.shear_rate * t
    elif fam is MotionFamily.RIGID_ROTATION:
        f = _rot_z(spec.angular_velocity * t)
    elif fam is MotionFamily.ROTATING_STRETCH:
        lam = 1.0 + spec.stretch_rate * t
        stretch = np.zeros((n, 3, 3))
        stretch[:, 0, 0] = lam
        stretch[:, 1, 1] = 1.0 / lam
        stretch[:, 2, 2] = 1.0
        rot = _rot_z(spec.angular_velocity * t)
        f = rot @ stretch @ np.swapaxes(rot, -1, -2)
    elif fam is MotionFamily.SMOOTH_RANDOM:
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
        sym_walk = _smooth_walk(rng, n, 6, spec.dt, spec.amplitude)
        rot_walk = _smooth_walk(rng, n, 3, spec.dt, 2.0 * spec.amplitude)
        vol_walk = _smooth_walk(rng, n, 1, spec.dt, spec.amplitude)[:, 0]
        trace = sym_walk[:, :3].sum(axis=1)
        sym_walk[:, :3] -= trace[:, None] / 3.0  # deviatoric stretch walk
        vol = VOL_CLAMP * np.tanh(vol_walk)
        sym_walk[:, :3] += vol[:, None]
        f = _rotation_from_vectors(rot_walk) @ _expm_sym(sym_walk)
    else:  # pragma: no cover
        raise ValueError(f"unknown family {fam!r}")

    return ElementHistory(element_id=element_id, dt=spec.dt, mode=HistoryMode.KINEMATIC, f=f)


# --- corpus generation ---

@dataclass
class LabeledCohortSpec:
    """Two overlapping amplitude populations realized through smooth_random."""

    n_positive: int = 22
    n_negative: int = 31
    positive_amplitude: float = 1.3
    negative_amplitude: float = 0.7
    amplitude_sd: float = 0.35


@dataclass
class DatasetSpec:
    tag: str
    n_elements: int = 8
    duration: float = 0.1
    dt: float = 1e-3
    impacts: dict = field(default_factory=dict)  # MotionFamily -> impact count
    labeled_cohort: LabeledCohortSpec | None = None

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        fixed = {}
        for family, count in self.impacts.items():
            if not isinstance(family, MotionFamily):
                family = MotionFamily(family)
            if count < 0:
                raise ValueError("impact counts must be >= 0")
            fixed[family] = int(count)
        self.impacts = fixed


@dataclass
class CorpusSpec:
    seed: int
    datasets: list[DatasetSpec]

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusSpec":
        datasets = []
        for ds in data["datasets"]:
            cohort = ds.get("labeled_cohort")
            datasets.append(
                DatasetSpec(
                    tag=ds["tag"],
                    n_elements=ds.get("n_elements", 8),
                    duration=ds.get("duration", 0.1),
                    dt=ds.get("dt", 1e-3),
                    impacts=ds.get("impacts", {}),
                    labeled_cohort=LabeledCohortSpec(**cohort) if cohort is not None else None,
                )
            )
        return cls(seed=int(data.get("seed", 0)), datasets=datasets)

    @classmethod
    def from_json_file(cls, path) -> "CorpusSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


#: per-family parameter ranges used for corpus draws
_FAMILY_RANGES = {
    MotionFamily.UNIAXIAL: {"stretch_rate": (0.05, 0.5)},
    MotionFamily.SIMPLE_SHEAR: {"shear_rate": (1.0, 20.0)},
    MotionFamily.RIGID_ROTATION: {"angular_velocity": (1.0, 100.0)},
    MotionFamily.ROTATING_STRETCH: {"stretch_rate": (0.05, 0.5), "angular_velocity": (5.0, 50.0)},
    MotionFamily.SMOOTH_RANDOM: {"amplitude": (0.2, 1.0)},
}


def _draw_params(family, rng, duration):
    params = {}
    for name, (lo, hi) in _FAMILY_RANGES[family].items():
        if name == "stretch_rate":
            hi = min(hi, MAX_STRETCH_EXTENT / duration)
        params[name] = float(rng.uniform(lo, hi))
    return params


def _jitter(params, family, rng, duration):
    out = {}
    for name, value in params.items():
        lo, hi = _FAMILY_RANGES[family][name]
        if name == "stretch_rate":
            hi = min(hi, MAX_STRETCH_EXTENT / duration)
        out[name] = float(np.clip(value * rng.uniform(0.85, 1.15), lo, hi))
    return out


def _family_impact(root_seed, ds, family, index):
    impact_id = f"{ds.tag}-{family.value}-{index:03d}"
    base = _draw_params(family, derive_rng(root_seed, ds.tag, family.value, index), ds.duration)
    elements = []
    for e in range(ds.n_elements):
        el_rng = derive_rng(root_seed, ds.tag, impact_id, "element", e)
        params = _jitter(base, family, el_rng, ds.duration)
        spec = MotionSpec(
            family=family,
            duration=ds.duration,
            dt=ds.dt,
            seed=derive_seed(root_seed, ds.tag, impact_id, "seed", e),
            **params,
        )
        elements.append(generate_motion(spec, element_id=e))
    return ImpactRecord(impact_id=impact_id, dataset_tag=ds.tag, elements=elements)


def _cohort_impact(root_seed, ds, label, index):
    kind = "pos" if label else "neg"
    impact_id = f"{ds.tag}-{kind}-{index:03d}"
    cohort = ds.labeled_cohort
    mean = cohort.positive_amplitude if label else cohort.negative_amplitude
    rng = derive_rng(root_seed, ds.tag, impact_id)
    amp = float(np.clip(rng.normal(mean, cohort.amplitude_sd), 0.05, MAX_AMPLITUDE))
    elements = []
    for e in range(ds.n_elements):
        el_rng = derive_rng(root_seed, ds.tag, impact_id, "element", e)
        el_amp = float(np.clip(amp * el_rng.uniform(0.85, 1.15), 0.05, MAX_AMPLITUDE))
        spec = MotionSpec(
            family=MotionFamily.SMOOTH_RANDOM,
            duration=ds.duration,
            dt=ds.dt,
            amplitude=el_amp,
            seed=derive_seed(root_seed, ds.tag, impact_id, "seed", e),
        )
        elements.append(generate_motion(spec, element_id=e))
    return ImpactRecord(
        impact_id=impact_id, dataset_tag=ds.tag, elements=elements, injury_label=label
    )


def generate_corpus(spec: CorpusSpec) -> list[ImpactRecord]:
    """Deterministic multi-dataset corpus; same spec, same bytes."""
    records = []
    for ds in spec.datasets:
        for family in sorted(ds.impacts, key=lambda f: f.value):
            for k in range(ds.impacts[family]):
                records.append(_family_impact(spec.seed, ds, family, k))
        if ds.labeled_cohort is not None:
            for k in range(ds.labeled_cohort.n_positive):
                records.append(_cohort_impact(spec.seed, ds, True, k))
            for k in range(ds.labeled_cohort.n_negative):
                records.append(_cohort_impact(spec.seed, ds, False, k))
    return sorted(records, key=lambda r: r.impact_id)


def nfl_like_cohort(
    seed: int = 42,
    tag: str = "nfl-like",
    n_elements: int = 12,
    duration: float = 0.2,
    dt: float = 2.5e-3,
) -> list[ImpactRecord]:
    """The shipped labeled fixture: 22 injurious / 31 non-injurious impacts.

    Whole-brain metric values come from two overlapping seeded amplitude
    distributions realized through the smooth_random family.
    """
    spec = CorpusSpec(
        seed=seed,
        datasets=[
            DatasetSpec(
                tag=tag,
                n_elements=n_elements,
                duration=duration,
                dt=dt,
                labeled_cohort=LabeledCohortSpec(),
            )
        ],
    )
    return generate_corpus(spec)
