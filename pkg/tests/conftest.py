import math

import pytest

from ppln_spdc.crystal import CrystalConfig
from ppln_spdc.field import PumpBeam
from ppln_spdc.schmidt import default_grid

# Standalone evaluation of the Gayer 2008 5% MgO:CLN extraordinary index,
# written out independently of the package's coefficient file.
_GAYER = dict(a1=5.756, a2=0.0983, a3=0.2020, a4=189.32, a5=12.52, a6=1.32e-2,
              b1=2.860e-6, b2=4.700e-8, b3=6.113e-8, b4=1.516e-4)


def oracle_index(lam_um, t_c):
    c = _GAYER
    f = (t_c - 24.5) * (t_c + 570.82)
    lam2 = lam_um * lam_um
    return math.sqrt(
        c["a1"] + c["b1"] * f
        + (c["a2"] + c["b2"] * f) / (lam2 - (c["a3"] + c["b3"] * f) ** 2)
        + (c["a4"] + c["b4"] * f) / (lam2 - c["a5"] ** 2)
        - c["a6"] * lam2
    )


def oracle_mismatch(signal_um, t_c, pump_um=0.7752, length_um=40000.0, period_um=19.2):
    idler = 1.0 / (1.0 / pump_um - 1.0 / signal_um)
    k = lambda lam: 2 * math.pi * oracle_index(lam, t_c) / lam  # noqa: E731
    return 0.5 * length_um * (k(pump_um) - k(signal_um) - k(idler) - 2 * math.pi / period_um)


@pytest.fixture(scope="session")
def crystal():
    return CrystalConfig()


@pytest.fixture(scope="session")
def pump():
    return PumpBeam()


@pytest.fixture(scope="session")
def grid(crystal, pump):
    return default_grid(crystal, pump)
