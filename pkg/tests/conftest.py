import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from jointsim.config import FamilySpec, ToleranceConfig
from jointsim.spectra import jordan_block


def family_of(*matrices, names=None, tolerances=None) -> FamilySpec:
    return FamilySpec.from_matrices(list(matrices), name="test", names=names, tolerances=tolerances)


def rotation(theta: float) -> np.ndarray:
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]], dtype=np.complex128)


@pytest.fixture
def tol():
    return ToleranceConfig()


@pytest.fixture
def nilpotent():
    """[[0, 2], [0, 0]]"""
    return np.array([[0, 2], [0, 0]], dtype=np.complex128)


@pytest.fixture
def jordan_plus_scalar():
    """J_2(0.3) (+) [0.9]"""
    T = np.zeros((3, 3), dtype=np.complex128)
    T[:2, :2] = jordan_block(0.3, 2)
    T[2, 2] = 0.9
    return T


@pytest.fixture
def write_family(tmp_path):
    """Write a family document and return its path."""

    def _write(matrices, names=None, filename="family.json", **extra):
        n = np.asarray(matrices[0]).shape[0]
        names = names or [f"T{k + 1}" for k in range(len(matrices))]
        doc = {
            "n": n,
            "matrices": [
                {"name": name, "re": np.real(m).tolist(), "im": np.imag(m).tolist()}
                for name, m in zip(names, matrices)
            ],
            **extra,
        }
        path = tmp_path / filename
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    return _write
