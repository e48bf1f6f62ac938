"""
JSON documents: family input, similarity certificates and the encoders for
every result the CLI writes. Complex matrices travel as separate ``re`` and
``im`` arrays; floats are printed in shortest round-trip form by ``json``.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .config import FamilySpec, PlantedTruth, ToleranceConfig
from .decomp import Decomposition
from .errors import SchemaError
from .simjoint import ObstructionWitness, SimilarityCertificate, UniformFamilyReport
from .spectra import PowerBoundReport, SpectralProfile

logger = logging.getLogger(__name__)

FAMILY_KEYS = {"n", "name", "matrices", "tolerances", "planted"}
MATRIX_KEYS = {"name", "re", "im"}


def encode_matrix(mat: np.ndarray) -> Dict[str, List[List[float]]]:
    mat = np.asarray(mat, dtype=np.complex128)
    return {"re": mat.real.tolist(), "im": mat.imag.tolist()}


def encode_complex(z: complex) -> Dict[str, float]:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def decode_complex(data: Dict[str, float]) -> complex:
    return complex(data["re"], data.get("im", 0.0))


def _real_grid(value: Any, rows: int, cols: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        raise SchemaError(f"{where}: expected {rows} rows")
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            raise SchemaError(f"{where}: row {i} must have {cols} entries")
        for x in row:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                raise SchemaError(f"{where}: row {i} holds a non-finite or non-numeric entry {x!r}")
    return np.array(value, dtype=float)


def decode_matrix(data: Any, rows: int, cols: Optional[int] = None, where: str = "matrix") -> np.ndarray:
    """Parse ``{"re": ..., "im": ...}``; a missing ``im`` means a real matrix."""
    cols = rows if cols is None else cols
    if not isinstance(data, dict) or "re" not in data:
        raise SchemaError(f"{where}: expected an object with 're' and 'im' arrays")
    re = _real_grid(data["re"], rows, cols, f"{where}.re")
    im = _real_grid(data["im"], rows, cols, f"{where}.im") if "im" in data else np.zeros_like(re)
    return re + 1j * im


def _load_json(path: Path) -> Any:
    if not path.exists():
        raise FileNotFoundError(f"Document not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except UnicodeDecodeError as e:
        raise SchemaError(f"{path.name} is not UTF-8 text: {e}") from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path.name} is not valid JSON: {e}") from e


def _decode_tolerances(data: Any, base: ToleranceConfig) -> ToleranceConfig:
    if data is None:
        return base
    if not isinstance(data, dict):
        raise SchemaError("'tolerances' must be an object")
    try:
        return base.with_overrides(**data)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"Invalid tolerances: {e}") from e


def _decode_planted(data: Any) -> Optional[PlantedTruth]:
    if data is None:
        return None
    try:
        blocks = {
            name: [(complex(re, im), int(size)) for re, im, size in rows]
            for name, rows in data.get("blocks", {}).items()
        }
        return PlantedTruth(recipe=str(data.get("recipe", "")), blocks=blocks,
                            partition=[int(d) for d in data.get("partition", [])])
    except (TypeError, ValueError, AttributeError) as e:
        raise SchemaError(f"Invalid 'planted' record: {e}") from e


def parse_family(data: Any, source: str = "family", tolerances: Optional[ToleranceConfig] = None) -> FamilySpec:
    """
    Validate a family document and build the FamilySpec.

    Raises:
        SchemaError: on any structural problem (unknown keys, shapes, names)
    """
    if not isinstance(data, dict):
        raise SchemaError(f"{source}: top level must be an object")
    unknown = set(data) - FAMILY_KEYS
    if unknown:
        raise SchemaError(f"{source}: unknown keys {sorted(unknown)}")
    n = data.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SchemaError(f"{source}: 'n' must be a positive integer, got {n!r}")
    entries = data.get("matrices")
    if not isinstance(entries, list) or not entries:
        raise SchemaError(f"{source}: 'matrices' must be a non-empty list")

    members: Dict[str, np.ndarray] = {}
    for k, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise SchemaError(f"{source}: matrices[{k}] must be an object")
        extra = set(entry) - MATRIX_KEYS
        if extra:
            raise SchemaError(f"{source}: matrices[{k}] has unknown keys {sorted(extra)}")
        name = entry.get("name", f"T{k + 1}")
        if not isinstance(name, str) or not name:
            raise SchemaError(f"{source}: matrices[{k}].name must be a non-empty string")
        if name in members:
            raise SchemaError(f"{source}: duplicate matrix name '{name}'")
        members[name] = decode_matrix(entry, n, where=f"{source}.matrices[{k}]")

    tol = _decode_tolerances(data.get("tolerances"), tolerances or ToleranceConfig())
    return FamilySpec(
        name=str(data.get("name", source)),
        members=members,
        tolerances=tol,
        planted=_decode_planted(data.get("planted")),
    )


class DocumentReader:
    """Reads family documents and similarity documents from disk."""

    def __init__(self, path: str):
        self.path = Path(path).resolve()
        if not self.path.exists():
            raise FileNotFoundError(f"Document not found: {path}")
        if self.path.is_dir():
            raise IsADirectoryError(f"Path is a directory: {path}")

    def read_family(self, overrides: Optional[Dict[str, float]] = None) -> FamilySpec:
        """
        Load the family; tolerance ``overrides`` (from flags) win over the
        document's own tolerances.
        """
        logger.info(f"Reading family document: {self.path.name}")
        family = parse_family(_load_json(self.path), source=self.path.stem)
        if overrides:
            family.tolerances = _decode_tolerances(overrides, family.tolerances)
        logger.debug(f"Family '{family.name}': n = {family.n}, members {family.names}")
        return family

    def read_similarity(self, n: int) -> np.ndarray:
        """The ``Y`` matrix from a certificate document or a bare ``{"Y": ...}`` object."""
        data = _load_json(self.path)
        if not isinstance(data, dict) or "Y" not in data:
            raise SchemaError(f"{self.path.name}: expected an object with a 'Y' matrix")
        return decode_matrix(data["Y"], n, where=f"{self.path.stem}.Y")


def family_document(family: FamilySpec) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "n": family.n,
        "name": family.name,
        "matrices": [{"name": name, **encode_matrix(T)} for name, T in family.members.items()],
        "tolerances": family.tolerances.to_dict(),
    }
    if family.planted is not None:
        doc["planted"] = {
            "recipe": family.planted.recipe,
            "partition": list(family.planted.partition),
            "blocks": {
                name: [[lam.real, lam.imag, size] for lam, size in rows]
                for name, rows in family.planted.blocks.items()
            },
        }
    return doc


def profile_document(prof: SpectralProfile) -> Dict[str, Any]:
    cert = prof.power_bound
    return {
        "spectrum": [
            {**encode_complex(c.value), "multiplicity": c.algebraic_multiplicity} for c in prof.spectrum
        ],
        "delta_set": [encode_complex(lam) for lam in prof.delta_set],
        "delta_value": prof.delta_value,
        "jordan_blocks": [{**encode_complex(lam), "size": size} for lam, size in prof.jordan.blocks],
        "jordan_transform_cond": prof.jordan.transform_cond,
        "jordan_residual": prof.jordan.residual,
        "power_bound": {
            "is_power_bounded": cert.is_power_bounded,
            "K": cert.constant_K,
            "reason": cert.reason.value,
        },
        "norm": prof.norm,
    }


def power_report_document(report: PowerBoundReport) -> Dict[str, Any]:
    return {
        "passed": report.passed,
        "vacuous": report.vacuous,
        "worst_ratio": report.worst_ratio,
        "worst_lambda": encode_complex(report.worst_lambda) if report.worst_lambda is not None else None,
        "worst_norm_ratio": report.worst_norm_ratio,
        "worst_power": report.worst_power,
    }


def uniform_report_document(report: UniformFamilyReport) -> Dict[str, Any]:
    return {
        "uniform_K": report.uniform_K,
        "delta_infimum": report.delta_infimum,
        "delta_radius": report.delta_radius,
        "has_uniform_jordan": report.has_uniform_jordan,
        "theta": report.theta,
        "chain_bound": report.chain_bound,
        "chain_holds": report.chain_holds,
        "radius_bound": report.radius_bound,
        "consistent": report.consistent,
    }


def obstruction_document(witness: ObstructionWitness) -> Dict[str, Any]:
    return {
        "pair": list(witness.pair),
        "spectral_radius": witness.spectral_radius,
        "obstructed": witness.obstructed,
        "growth": [{"p": p, "norm": norm} for p, norm in witness.growth],
    }


def decomposition_document(decomp: Decomposition) -> Dict[str, Any]:
    parts = []
    for part, tags in zip(decomp.parts, decomp.tags):
        parts.append({
            "dim": part.dim,
            "basis": encode_matrix(part.basis),
            "tags": {
                name: {"kind": tag.kind.value, "z": encode_complex(tag.z) if tag.is_scalar else None}
                for name, tag in tags.items()
            },
        })
    return {
        "parts": parts,
        "assembly": encode_matrix(decomp.assembly),
        "alpha": decomp.alpha,
        "splits": decomp.splits,
    }


def certificate_document(cert: SimilarityCertificate, family_name: str = "") -> Dict[str, Any]:
    return {
        "family": family_name,
        "Y": encode_matrix(cert.Y),
        "norm_Y": cert.norm_Y,
        "norm_Yinv": cert.norm_Yinv,
        "bound": cert.bound,
        "K": cert.K,
        "r": cert.r,
        "alpha": cert.alpha,
        "conjugated_norms": dict(cert.conjugated_norms),
        "k_clamped": cert.k_clamped,
        "bound_ratio": cert.bound_ratio,
        "conditioning_lower_bound": cert.conditioning_lower_bound,
        "verified": cert.verified,
        "tolerances": cert.tolerances.to_dict(),
    }


def write_document(doc: Dict[str, Any], output: Optional[str] = None) -> Optional[Path]:
    """Write ``doc`` as UTF-8 JSON to ``output``, or print it when no path is given."""
    text = json.dumps(doc, indent=2, ensure_ascii=False)
    if output is None:
        print(text)
        return None
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text + "\n")
    logger.info(f"Document written: {path}")
    return path
