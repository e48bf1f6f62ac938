from datetime import datetime
from pathlib import Path
from typing import Dict, Optional
import logging

from .config import FamilySpec
from .decomp import Decomposition
from .simjoint import SimilarityCertificate

logger = logging.getLogger(__name__)


class ReportGenerator:

    def __init__(self, report_path: Optional[str] = None):
        self.report_path = Path(report_path) if report_path else None
        if self.report_path is not None:
            self.report_path.parent.mkdir(parents=True, exist_ok=True)
            logger.info(f"Report will be saved to: {self.report_path}")

    def generate_report(self, command: str, family: FamilySpec, body: str, status: str = "ok") -> Optional[Path]:
        """
        Write a markdown report for one command run.

        Args:
            command: subcommand name
            family: the family the command ran on
            body: markdown sections
            status: outcome shown in the header

        Returns:
            Path to the report, or None when no report path was configured
        """
        if self.report_path is None:
            return None
        timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        tol = family.tolerances

        report_content = f"""# Joint Similarity Report: {command}

**Family**: `{family.name}`  
**Dimension**: {family.n}  
**Members**: {", ".join(family.names)}  
**Date**: {timestamp}  
**Status**: {status.upper()}

---

{body}

---

## Notes

- Tolerances: rank {tol.tol_rank:.1e}, commute {tol.tol_commute:.1e}, cluster {tol.tol_cluster:.1e}, contraction {tol.tol_contraction:.1e}, spectrum {tol.tol_spectrum:.1e}
- Norms are operator 2-norms computed from singular values
- Re-run `jointsim verify` on any certificate to re-check it independently

---

**jointsim** | Joint similarity to contractions
"""
        try:
            with open(self.report_path, 'w', encoding='utf-8') as f:
                f.write(report_content)
            logger.info(f"Report generated: {self.report_path.name}")
            return self.report_path
        except OSError as e:
            logger.error(f"Error writing report {self.report_path}: {str(e)}")
            raise


def decomposition_section(decomp: Decomposition) -> str:
    text = f"""## Decomposition
- **Parts**: {len(decomp.parts)} (dims {decomp.dims})
- **Alpha**: {decomp.alpha:.6g}
- **Splits**: {decomp.splits}

| Part | Dim | Tags |
|------|-----|------|
"""
    for i, (part, tags) in enumerate(zip(decomp.parts, decomp.tags)):
        cells = ", ".join(
            f"{name}: scalar({tag.z.real:.4g}{tag.z.imag:+.4g}i)" if tag.is_scalar else f"{name}: Delta"
            for name, tag in tags.items()
        )
        text += f"| {i} | {part.dim} | {cells} |\n"
    return text


def certificate_section(cert: SimilarityCertificate) -> str:
    text = f"""## Similarity certificate
- **||Y||**: {cert.norm_Y:.10g}
- **||Y^-1||**: {cert.norm_Yinv:.10g}
- **Bound**: {cert.bound:.6g} (bound / ||Y|| = {cert.bound_ratio:.4g})
- **K**: {cert.K:.6g}{" (clamped)" if cert.k_clamped else ""}
- **r**: {cert.r:.6g}
- **Alpha**: {cert.alpha:.6g}
- **Conditioning lower bound**: {cert.conditioning_lower_bound:.6g}
- **Verified**: {"yes" if cert.verified else "no"}

## Conjugated norms
"""
    for name, norm in cert.conjugated_norms.items():
        mark = "✅" if norm <= 1.0 + cert.tolerances.tol_contraction else "❌"
        text += f"- {mark} {name}: {norm:.12g}\n"
    return text


def checks_section(checks: Dict[str, bool], details: Dict[str, str]) -> str:
    text = "## Checks\n"
    for name, ok in checks.items():
        text += f"- {'✅' if ok else '❌'} {name}: {details.get(name, '')}\n"
    return text
