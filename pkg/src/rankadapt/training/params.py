"""Parameter accounting from checkpoint manifests."""
from __future__ import annotations


from .checkpoint import Checkpoint


def _component(name: str) -> str:
    parts = name.split(".")
    if parts[0] in ("pool", "gen") and len(parts) > 1:
        return f"{parts[0]}.{parts[1]}"
    return parts[0]


def parameter_report(ckpt: Checkpoint) -> dict:
    """Counts per tensor, per component, per section, plus the size ratio.

    Also instantiates the closed-form pool-size expression
    L*K*(h*d + d) + d*d (K patched layers of nominal width h=2d) as a
    cross-check bound for the parameter-modulation block.
    """
    report: dict = {"tensors": {}, "components": {}, "sections": {}}
    for section, tensors in ckpt.sections.items():
        total = 0
        for name, arr in tensors.items():
            size = int(arr.size)
            report["tensors"][f"{section}.{name}"] = {"shape": tuple(arr.shape),
                                                      "size": size}
            comp = f"{section}.{_component(name)}"
            report["components"][comp] = report["components"].get(comp, 0) + size
            total += size
        report["sections"][section] = total
    theta = report["sections"].get("theta", 0)
    phi = report["sections"].get("phi", 0)
    report["theta_total"] = theta
    report["phi_total"] = phi
    report["ratio"] = (phi / theta) if theta else float("nan")

    pool_like = sum(v for k, v in report["components"].items()
                    if k.startswith("phi.pool.") or k.startswith("phi.gen."))
    if pool_like:
        report["pool_actual"] = pool_like
        head = ckpt.sections.get("phi", {}).get("pool.w1.heads")
        if head is not None:
            L, d = int(head.shape[0]), int(head.shape[1])
            report["pool_bound"] = closed_form_pool_bound(d, L)
    return report


def format_report(report: dict) -> str:
    lines = ["section totals:"]
    for name, total in sorted(report["sections"].items()):
        lines.append(f"  {name}\t{total}")
    lines.append("components:")
    for name, total in sorted(report["components"].items()):
        lines.append(f"  {name}\t{total}")
    lines.append(f"theta_total\t{report['theta_total']}")
    lines.append(f"phi_total\t{report['phi_total']}")
    if report["theta_total"]:
        lines.append(f"phi_to_theta_ratio\t{report['ratio']:.4f}")
    if "pool_actual" in report:
        lines.append(f"pool_actual\t{report['pool_actual']}")
    if "pool_bound" in report:
        lines.append(f"pool_nominal_bound\t{report['pool_bound']}")
    return "\n".join(lines) + "\n"


def closed_form_pool_bound(dim: int, slots: int, layers: int = 2) -> int:
    """The nominal O(L*K*(h*d+d) + d*d) expression instantiated at h = 2d."""
    h = 2 * dim
    return slots * layers * (h * dim + dim) + dim * dim
