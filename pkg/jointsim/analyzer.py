import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .config import FamilySpec
from .decomp import worst_commutator
from .documents import (
    obstruction_document,
    power_report_document,
    profile_document,
    uniform_report_document,
)
from .simjoint import ObstructionWitness, UniformFamilyReport, noncommuting_obstruction, uniform_family_report
from .spectra import PowerBoundReport, SpectralProfile, profile, verify_power_bound_inequality

logger = logging.getLogger(__name__)


def blocks_match(found: Sequence[Tuple[complex, int]], planted: Sequence[Tuple[complex, int]],
                 radius: float = 1e-6) -> bool:
    """Equality of Jordan block multisets, eigenvalues compared within ``radius``."""
    if len(found) != len(planted):
        return False
    left = list(planted)
    for lam, size in found:
        hit = next((i for i, (mu, s) in enumerate(left) if s == size and abs(lam - mu) <= radius), None)
        if hit is None:
            return False
        left.pop(hit)
    return True


@dataclass
class FamilyAnalysis:
    family: FamilySpec
    profiles: Dict[str, SpectralProfile]
    power_checks: Dict[str, Optional[PowerBoundReport]]
    worst_pair: Tuple[str, str]
    commutator_residual: float
    uniform: UniformFamilyReport
    obstructions: List[ObstructionWitness] = field(default_factory=list)
    planted_match: Dict[str, bool] = field(default_factory=dict)

    @property
    def commuting(self) -> bool:
        return self.commutator_residual <= self.family.tolerances.tol_commute


class FamilyAnalyzer:

    def __init__(self, p_max: int = 1000):
        self.p_max = p_max

    def analyze_member(self, name: str, T, family: FamilySpec) -> Tuple[SpectralProfile, Optional[PowerBoundReport]]:
        """
        Profile one member and, when it is certified power bounded, sample the
        power-bound inequality up to ``p_max``.

        Args:
            name: member name, for logging
            T: the matrix
            family: owning family (tolerances)

        Returns:
            (profile, power check or None)
        """
        prof = profile(T, family.tolerances)
        check = None
        if prof.power_bound.is_power_bounded:
            check = verify_power_bound_inequality(T, prof, p_max=self.p_max)
            mark = "✓" if check.passed else "✗"
            logger.info(f"{mark} {name}: K = {prof.power_bound.constant_K:.6g}, "
                        f"Delta = {len(prof.delta_set)} eigenvalue(s), worst ratio {check.worst_ratio:.4g}")
        else:
            logger.info(f"✗ {name}: not power bounded ({prof.power_bound.reason.value})")
        return prof, check

    def analyze(self, family: FamilySpec) -> FamilyAnalysis:
        profiles, checks = {}, {}
        for idx, (name, T) in enumerate(family.members.items(), 1):
            logger.info(f"[{idx}/{len(family)}] Profiling: {name}")
            profiles[name], checks[name] = self.analyze_member(name, T, family)

        pair, residual = worst_commutator(family)
        analysis = FamilyAnalysis(
            family=family,
            profiles=profiles,
            power_checks=checks,
            worst_pair=pair,
            commutator_residual=residual,
            uniform=uniform_family_report(family, profiles, p_samples=self.p_max),
        )
        if not analysis.commuting:
            logger.warning(f"Family does not commute: {pair[0]}, {pair[1]} residual {residual:.4g}")
            analysis.obstructions = noncommuting_obstruction(family)
        if family.planted is not None:
            for name, planted in family.planted.blocks.items():
                if name in profiles:
                    radius = max(1e-6, profiles[name].cluster_radius)
                    analysis.planted_match[name] = blocks_match(profiles[name].jordan.blocks, planted, radius)
        return analysis

    def to_document(self, analysis: FamilyAnalysis) -> Dict[str, Any]:
        checks = analysis.power_checks
        return {
            "family": analysis.family.name,
            "n": analysis.family.n,
            "members": {
                name: {
                    **profile_document(prof),
                    "power_check": power_report_document(checks[name]) if checks[name] else None,
                }
                for name, prof in analysis.profiles.items()
            },
            "commutativity": {
                "worst_pair": list(analysis.worst_pair),
                "residual": analysis.commutator_residual,
                "commuting": analysis.commuting,
            },
            "uniform": uniform_report_document(analysis.uniform),
            "obstructions": [obstruction_document(w) for w in analysis.obstructions],
            "planted_match": dict(analysis.planted_match),
            "tolerances": analysis.family.tolerances.to_dict(),
        }

    def create_summary(self, analysis: FamilyAnalysis) -> str:
        """
        Markdown summary of a family analysis.

        Args:
            analysis: result of ``analyze``

        Returns:
            Summary text
        """
        family = analysis.family
        summary = f"""## Overview
- **Members**: {len(family)}
- **Dimension**: {family.n}
- **Commuting**: {"yes" if analysis.commuting else "no"} (worst residual {analysis.commutator_residual:.4g}, pair {analysis.worst_pair[0]}, {analysis.worst_pair[1]})

## Members
"""
        for name, prof in analysis.profiles.items():
            cert = prof.power_bound
            status = "✅" if cert.is_power_bounded else "❌"
            deltas = ", ".join(f"{lam.real:.6g}{lam.imag:+.6g}i" for lam in prof.delta_set) or "empty"
            K = f"K = {cert.constant_K:.6g}" if cert.is_power_bounded else cert.reason.value
            blocks = ", ".join(f"J{size}({lam.real:.4g}{lam.imag:+.4g}i)" for lam, size in prof.jordan.blocks)
            summary += f"- {status} **{name}**: {K}; Delta = {{{deltas}}}; blocks {blocks}\n"

        uniform = analysis.uniform
        summary += f"""
## Uniformity
- **Uniform K**: {uniform.uniform_K if uniform.uniform_K is not None else "n/a"}
- **Infimum of delta**: {uniform.delta_infimum if uniform.delta_infimum is not None else "n/a (every Delta-set empty)"}
- **Delta radius**: {uniform.delta_radius:.6g}
- **Uniform Jordan property**: {"yes" if uniform.has_uniform_jordan else "no"}
"""
        if uniform.radius_bound is not None:
            summary += f"- **Radius bound**: {uniform.radius_bound:.6g} ({'consistent' if uniform.consistent else 'INCONSISTENT'})\n"

        if analysis.obstructions:
            summary += "\n## Obstructions\n"
            for w in analysis.obstructions:
                verdict = "no joint similarity exists" if w.obstructed else "inconclusive"
                summary += f"- ({w.pair[0]}, {w.pair[1]}): spectral radius of the product {w.spectral_radius:.6g}, {verdict}\n"

        if analysis.planted_match:
            summary += "\n## Planted structure\n"
            for name, ok in analysis.planted_match.items():
                summary += f"- {'✅' if ok else '❌'} {name}\n"
        return summary
