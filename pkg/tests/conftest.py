"""Shared history builders for the test suite.

These construct deformation-gradient series directly with numpy (independent
of the motion module) so the metric tests do not rely on the generator they
also help validate.
"""

import numpy as np
import pytest

from strainrate import ElementHistory, HistoryMode


def rot_z(theta):
    theta = np.asarray(theta, dtype=float)
    r = np.zeros(theta.shape + (3, 3))
    c, s = np.cos(theta), np.sin(theta)
    r[..., 0, 0] = c
    r[..., 0, 1] = -s
    r[..., 1, 0] = s
    r[..., 1, 1] = c
    r[..., 2, 2] = 1.0
    return r


def uniaxial_history(rate=0.1, duration=1.0, dt=1e-3, element_id=0):
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    f = np.tile(np.eye(3), (n, 1, 1))
    f[:, 0, 0] = 1.0 + rate * t
    return ElementHistory(element_id, dt, HistoryMode.KINEMATIC, f=f)


def shear_history(rate=10.0, duration=0.1, dt=1e-3, element_id=0):
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    f = np.tile(np.eye(3), (n, 1, 1))
    f[:, 0, 1] = rate * t
    return ElementHistory(element_id, dt, HistoryMode.KINEMATIC, f=f)


def rotation_history(omega=50.0, duration=0.1, dt=1e-3, element_id=0):
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    return ElementHistory(element_id, dt, HistoryMode.KINEMATIC, f=rot_z(omega * t))


def spinning_stretch_history(stretch=1.2, omega=10.0, duration=0.2, dt=1e-4, element_id=0):
    """Constant-magnitude stretch whose principal direction spins at omega."""
    n = int(round(duration / dt)) + 1
    t = np.arange(n) * dt
    s = np.zeros((n, 3, 3))
    s[:, 0, 0] = stretch
    s[:, 1, 1] = 1.0 / stretch
    s[:, 2, 2] = 1.0
    r = rot_z(omega * t)
    f = r @ s @ np.swapaxes(r, -1, -2)
    return ElementHistory(element_id, dt, HistoryMode.KINEMATIC, f=f)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
