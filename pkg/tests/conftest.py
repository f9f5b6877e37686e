from pathlib import Path

import numpy as np
import pytest

from matsir import ModelSpec, SirPhSpec

MODELS = Path(__file__).resolve().parent.parent / "models"


def sir1(**kw) -> ModelSpec:
    """One infectious class: beta = 5, gamma = 1/2, lam = mu = 1/10,
    gamma_r = 1/6, gamma_s = 0.01, nu = 0.9."""
    base = dict(n=1, p=1, lam=0.1, mu=0.1, A=[[-0.5]], B=[[5.0]], W=[[0.5]], nu=[0.9],
                nu_r=[0.0], gamma_s=[0.01], gamma_r=[1 / 6], name="SIR-1")
    base.update(kw)
    return ModelSpec(**base)


def sir1_ph(**kw) -> SirPhSpec:
    base = dict(alpha=[1.0], A=[[-0.5]], b=[5.0], nu=[0.9], nu_r=0.0, gamma_s=0.01,
                gamma_r=1 / 6, lam=0.1, mu=0.1, name="SIR-1")
    base.update(kw)
    return SirPhSpec(**base)


def seirs(**kw) -> SirPhSpec:
    """Exposed (rate 1/4 to infectious), infectious (recovery 1/2, extra
    death 0.2), transmission 1, lam = mu = 0.05."""
    base = dict(alpha=[1.0, 0.0], A=[[-0.25, 0.25], [0.0, -0.5]], b=[0.0, 1.0],
                nu=[0.0, 0.2], gamma_s=0.01, gamma_r=0.1, lam=0.05, mu=0.05, name="SEIRS")
    base.update(kw)
    return SirPhSpec(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
