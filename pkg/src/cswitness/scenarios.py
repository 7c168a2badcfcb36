"""Ready-made scenario configurations used by the tests and benchmarks."""

from __future__ import annotations

from .config import ScenarioConfig, build_config


def clique(
    n_senders: int = 5,
    p_s: dict[str, float] | None = None,
    seed: int = 0,
    total_slots: int = 50_000,
    sniffer_loss: tuple[float, ...] = (0.0,),
    **extra,
) -> ScenarioConfig:
    """Saturated senders ``n0..n{k-1}`` that all hear each other, one link each.

    Every sender has its own receiver ``r<k>``; receivers carry no traffic.
    Each entry of ``sniffer_loss`` adds a full-coverage sniffer.
    """
    senders = [f"n{k}" for k in range(n_senders)]
    receivers = [f"r{k}" for k in range(n_senders)]
    p_s = p_s or {}
    raw = {
        "seed": seed,
        "topology": {
            "nodes": senders + receivers,
            "defer_set": "all",
            "links": [[s, r] for s, r in zip(senders, receivers)],
        },
        "nodes": [{"node_id": s, "p_s": p_s.get(s, 0.0)} for s in senders],
        "sim": {"total_slots": total_slots},
        "sniffers": [
            {"sniffer_id": f"s{k}", "coverage": senders, "loss": loss}
            for k, loss in enumerate(sniffer_loss)
        ],
    }
    raw.update(extra)
    return build_config(raw)
