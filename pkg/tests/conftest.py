import numpy as np
import pytest

from evosq.dnmap import compute_dn_family
from evosq.geometry import build_warped_geometry, make_profile

Q1_SPEC = {"kind": "bump", "amplitude": 3.0, "theta0": 1.0, "t0": 0.1, "width": 0.4}
Q2_SPEC = {"kind": "bump", "amplitude": -2.0, "theta0": 4.0, "t0": 0.15, "width": 0.35}


@pytest.fixture(scope="session")
def annulus_geometry():
    return build_warped_geometry(make_profile("annulus", rho=0.25), N=32, M=64, eps=0.3)


@pytest.fixture(scope="session")
def annulus_families(annulus_geometry):
    fam1 = compute_dn_family(annulus_geometry, Q1_SPEC, keep_chain=True)
    fam2 = compute_dn_family(annulus_geometry, Q2_SPEC, keep_chain=True)
    return fam1, fam2


@pytest.fixture()
def rng_vectors():
    return np.array(
        [
            0xE220A8397B1DCDAF,
            0x6E789E6AA1B965F4,
            0x06C45D188009454F,
            0xF88BB8A8724C81EC,
            0x1B39896A51A8749B,
        ],
        dtype=np.uint64,
    )
