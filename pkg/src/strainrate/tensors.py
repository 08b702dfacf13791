"""3x3 tensor kinematics and five-point finite differences.

Array conventions
-----------------
Full tensors (deformation gradient F, velocity gradient L) are ``float64``
arrays of shape ``(..., 3, 3)``; leading axes are batch/time axes.

Symmetric tensors (Green-Lagrange strain E, rate of deformation D) are stored
once per independent component, shape ``(..., 6)``, ordered::

    (11, 22, 33, 12, 13, 23)

Principal values come back as shape ``(..., 3)`` sorted descending.

Time series carry the time axis first, and the sampling interval ``dt`` is in
seconds throughout.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidTensor, SeriesTooShort, SingularDeformation

#: determinant floor below which a deformation gradient is treated as corrupt
DET_FLOOR = 1e-12

#: discriminant margin that triggers Newton refinement of closed-form eigenvalues
_DEGENERATE_TOL = 1e-12

#: (row, col) index of each packed symmetric component
SYM_COMPONENTS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))


def _check_finite(a, name):
    if not np.isfinite(a).all():
        raise InvalidTensor(f"{name} contains non-finite components")


def sym_to_full(s):
    """Expand packed symmetric components ``(..., 6)`` to ``(..., 3, 3)``."""
    s = np.asarray(s, dtype=float)
    full = np.empty(s.shape[:-1] + (3, 3), dtype=float)
    for k, (i, j) in enumerate(SYM_COMPONENTS):
        full[..., i, j] = s[..., k]
        full[..., j, i] = s[..., k]
    return full


def full_to_sym(m):
    """Pack the symmetric part of ``(..., 3, 3)`` into ``(..., 6)``."""
    m = np.asarray(m, dtype=float)
    return np.stack(
        [
            m[..., 0, 0],
            m[..., 1, 1],
            m[..., 2, 2],
            0.5 * (m[..., 0, 1] + m[..., 1, 0]),
            0.5 * (m[..., 0, 2] + m[..., 2, 0]),
            0.5 * (m[..., 1, 2] + m[..., 2, 1]),
        ],
        axis=-1,
    )


def trace_sym(s):
    """Trace of packed symmetric tensors."""
    s = np.asarray(s, dtype=float)
    return s[..., 0] + s[..., 1] + s[..., 2]


def det3(m):
    """Determinant of ``(..., 3, 3)`` tensors, by cofactor expansion."""
    m = np.asarray(m, dtype=float)
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 1])
        - m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] - m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] - m[..., 1, 1] * m[..., 2, 0])
    )


def _char_poly_coeffs(s):
    """Invariants (I1, I2, I3) of packed symmetric tensors.

    The characteristic polynomial is p(x) = -x^3 + I1 x^2 - I2 x + I3.
    """
    a11, a22, a33, a12, a13, a23 = (s[..., k] for k in range(6))
    i1 = a11 + a22 + a33
    i2 = a11 * a22 + a11 * a33 + a22 * a33 - a12 * a12 - a13 * a13 - a23 * a23
    i3 = (
        a11 * (a22 * a33 - a23 * a23)
        - a12 * (a12 * a33 - a23 * a13)
        + a13 * (a12 * a23 - a22 * a13)
    )
    return i1, i2, i3


def eig_sym3(s):
    """Eigenvalues of packed symmetric 3x3 tensors, sorted descending.

    Uses the closed-form trigonometric solution of the characteristic cubic;
    tensors whose cubic discriminant is within ``1e-12`` of degenerate get a
    guarded Newton polish (skipped where the derivative vanishes, i.e. at
    genuinely repeated roots).

    Parameters
    ----------
    s : array, shape (..., 6)
        Symmetric tensors in (11, 22, 33, 12, 13, 23) order.

    Returns
    -------
    array, shape (..., 3), eigenvalues with ``lam[..., 0] >= lam[..., 1] >= lam[..., 2]``.
    """
    s = np.asarray(s, dtype=float)
    if s.shape[-1] != 6:
        raise ValueError(f"expected packed symmetric shape (..., 6), got {s.shape}")
    _check_finite(s, "symmetric tensor")

    a11, a22, a33, a12, a13, a23 = (s[..., k] for k in range(6))
    q = (a11 + a22 + a33) / 3.0
    p1 = a12 * a12 + a13 * a13 + a23 * a23
    b11, b22, b33 = a11 - q, a22 - q, a33 - q
    p2 = b11 * b11 + b22 * b22 + b33 * b33 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)

    # B = (A - q I) / p; p == 0 means an isotropic tensor with triple root q.
    safe_p = np.where(p > 0.0, p, 1.0)
    c11, c22, c33 = b11 / safe_p, b22 / safe_p, b33 / safe_p
    c12, c13, c23 = a12 / safe_p, a13 / safe_p, a23 / safe_p
    det_b = (
        c11 * (c22 * c33 - c23 * c23)
        - c12 * (c12 * c33 - c23 * c13)
        + c13 * (c12 * c23 - c22 * c13)
    )
    r = np.clip(det_b / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0

    two_p = np.where(p > 0.0, 2.0 * p, 0.0)
    e1 = q + two_p * np.cos(phi)
    e3 = q + two_p * np.cos(phi + 2.0 * np.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    lam = np.stack([e1, e2, e3], axis=-1)

    near = (p > 0.0) & (1.0 - np.abs(r) < _DEGENERATE_TOL)
    if np.any(near):
        lam[near] = _newton_polish(s[near], lam[near])
    return lam


def _newton_polish(s, lam):
    """Two guarded Newton steps on the characteristic cubic of each tensor."""
    i1, i2, i3 = _char_poly_coeffs(s)
    i1, i2, i3 = (np.expand_dims(v, -1) for v in (i1, i2, i3))
    scale = 1.0 + lam * lam
    for _ in range(2):
        val = -lam**3 + i1 * lam**2 - i2 * lam + i3
        der = -3.0 * lam**2 + 2.0 * i1 * lam - i2
        step = np.where(np.abs(der) > 1e-8 * scale, val / np.where(der != 0.0, der, 1.0), 0.0)
        lam = lam - step
    return -np.sort(-lam, axis=-1)


def green_strain(f):
    """Green-Lagrange strain E = (F^T F - I) / 2, packed symmetric.

    Zero exactly when F^T F = I (any rigid rotation).
    """
    f = np.asarray(f, dtype=float)
    _check_finite(f, "deformation gradient")
    c = np.einsum("...ji,...jk->...ik", f, f)
    return np.stack(
        [
            0.5 * (c[..., 0, 0] - 1.0),
            0.5 * (c[..., 1, 1] - 1.0),
            0.5 * (c[..., 2, 2] - 1.0),
            0.5 * c[..., 0, 1],
            0.5 * c[..., 0, 2],
            0.5 * c[..., 1, 2],
        ],
        axis=-1,
    )


def velocity_gradient(fdot, f):
    """Velocity gradient L from F-dot = L F, i.e. L = F-dot F^-1.

    Solved as a linear system per tensor (LU with partial pivoting) rather
    than through an explicit inverse, to keep the residual ||L F - F-dot||
    at roundoff level.

    Raises
    ------
    SingularDeformation
        if any det(F) <= 1e-12; physical deformation gradients keep
        det(F) > 0, so hitting the floor signals corrupt input.
    """
    fdot = np.asarray(fdot, dtype=float)
    f = np.asarray(f, dtype=float)
    _check_finite(fdot, "deformation gradient rate")
    _check_finite(f, "deformation gradient")
    d = det3(f)
    bad = d <= DET_FLOOR
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        raise SingularDeformation(
            f"det(F) = {np.atleast_1d(d)[tuple(idx)]:.3e} <= {DET_FLOOR} at index {tuple(idx)}"
        )
    # L F = Fdot  <=>  F^T L^T = Fdot^T
    lt = np.linalg.solve(np.swapaxes(f, -1, -2), np.swapaxes(fdot, -1, -2))
    return np.swapaxes(lt, -1, -2)


def rate_of_deformation(l):
    """Rate of deformation D = (L + L^T) / 2, packed symmetric."""
    l = np.asarray(l, dtype=float)
    _check_finite(l, "velocity gradient")
    return full_to_sym(l)


@dataclass
class ScalarSeries:
    """Uniformly sampled scalar time series.

    values : 1-D float array, all finite
    dt     : sampling interval in seconds, > 0
    """

    values: np.ndarray
    dt: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("series must be a non-empty 1-D array")
        if not self.dt > 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not np.isfinite(self.values).all():
            raise InvalidTensor("series contains non-finite values")

    def __len__(self):
        return self.values.size


def fd_diff(values, dt):
    """Five-point-stencil first derivative along axis 0.

    Interior points use the central stencil
    ``(f[i-2] - 8 f[i-1] + 8 f[i+1] - f[i+2]) / (12 h)``; the first and last
    two points use one-sided five-point formulas of the same (4th) order, so
    the output has the same length as the input and peaks near the ends are
    not lost.  Exact for polynomials up to degree 4.
    """
    v = np.asarray(values, dtype=float)
    n = v.shape[0]
    if n < 5:
        raise SeriesTooShort(f"five-point stencil needs >= 5 samples, got {n}")
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    h12 = 12.0 * dt
    out = np.empty_like(v)
    out[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / h12
    out[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / h12
    out[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / h12
    out[-2] = (-v[-5] + 6.0 * v[-4] - 18.0 * v[-3] + 10.0 * v[-2] + 3.0 * v[-1]) / h12
    out[-1] = (3.0 * v[-5] - 16.0 * v[-4] + 36.0 * v[-3] - 48.0 * v[-2] + 25.0 * v[-1]) / h12
    return out


def fd_derivative(series: ScalarSeries) -> ScalarSeries:
    """Five-point-stencil derivative of a scalar series (same length, same dt)."""
    return ScalarSeries(fd_diff(series.values, series.dt), series.dt)


def fd_tensor_derivative(f_series, dt):
    """Componentwise five-point-stencil derivative of a tensor series.

    ``f_series`` has shape ``(n, 3, 3)`` with n >= 5; each of the nine
    components is differentiated independently with the same stencil and
    boundary policy as :func:`fd_derivative`.
    """
    f = np.asarray(f_series, dtype=float)
    if f.ndim != 3 or f.shape[1:] != (3, 3):
        raise ValueError(f"expected tensor series of shape (n, 3, 3), got {f.shape}")
    _check_finite(f, "tensor series")
    return fd_diff(f, dt)
