import numpy as np
import pytest

from poretopo.material import MaterialParams
from poretopo.mesh import DomainSpec, Mesh, PoreSpec, build_mesh

PDMS = MaterialParams(shear_modulus=0.68, bulk_modulus=3.42, chain_segments=8.0)


@pytest.fixture(scope="session")
def pdms() -> MaterialParams:
    return PDMS


@pytest.fixture(scope="session")
def small_pore_spec() -> DomainSpec:
    """8x12 domain with a 2x2-element pore at the center."""
    return DomainSpec(
        L1=10.0, L2=16.0, nelx=8, nely=12, stretch=10.0,
        pores=(PoreSpec(center=(5.0, 8.0), width=2 * 10 / 8,
                        height=2 * 16 / 12, target_hd=2.0),),
    )


@pytest.fixture(scope="session")
def small_pore_mesh(small_pore_spec) -> Mesh:
    return build_mesh(small_pore_spec)


def make_single_element_mesh(coords: np.ndarray) -> Mesh:
    """One unconstrained quad, for element-level checks."""
    spec = DomainSpec(L1=1.0, L2=1.0, nelx=2, nely=2, stretch=1.0)
    empty = np.array([], dtype=np.int64)
    return Mesh(
        spec=spec,
        coords=np.asarray(coords, dtype=float),
        conn=np.array([[0, 1, 2, 3]], dtype=np.int64),
        fixed_dofs=empty,
        prescribed_dofs=empty,
        pore_rings=[],
        element_area=1.0,
    )


def random_plane_stress_F(rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    """Random admissible in-plane deformation gradient (positive determinant)."""
    while True:
        Fp = np.eye(2) + scale * (rng.random((2, 2)) - 0.5)
        if np.linalg.det(Fp) > 0.2:
            return Fp
