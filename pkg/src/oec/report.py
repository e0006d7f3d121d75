"""CSV and figure output for run metrics.

Column orders are fixed.  Floats are written with 9 significant digits and
credits as integer micro-credits, so two runs of one scenario diff cleanly.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from pathlib import Path

from .sim import Metrics

COLUMNS = {
    "payments.csv": ("epoch", "system", "payer", "payee", "f", "g", "z_micro"),
    "reputations.csv": ("epoch", "node", "reputation"),
    "rejections.csv": ("epoch", "actor", "action", "reason"),
    "utilization.csv": ("epoch", "system", "sum_f", "sum_g", "utilization"),
    "spectrum.csv": ("epoch", "offered_mhz", "committed_mhz"),
    "balances.csv": ("node", "label", "earned_micro", "balance_micro"),
}


def fmt(v) -> str:
    if isinstance(v, bytes):
        return v.hex()
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def rows(metrics: Metrics) -> dict[str, list[tuple]]:
    m = metrics
    balances = [
        (nid, m.labels.get(nid, ""), m.earned.get(nid, 0), bal) for nid, bal in sorted(m.balances.items())
    ]
    return {
        "payments.csv": m.payments,
        "reputations.csv": m.reputations,
        "rejections.csv": m.rejections,
        "utilization.csv": m.utilization,
        "spectrum.csv": m.spectrum,
        "balances.csv": balances,
    }


def render_csv(header, data) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in data:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def summary_text(metrics: Metrics, tip_hash: bytes, height: int) -> str:
    m = metrics
    lines = [
        f"chain_ok={str(m.chain_ok).lower()}",
        f"height={height}",
        f"tip_hash={tip_hash.hex()}",
        f"nodes={len(m.balances)}",
        f"payment_records={len(m.payments)}",
        f"credits_paid_micro={sum(r[6] for r in m.payments)}",
        f"rejections={len(m.rejections)}",
    ]
    for reason, n in sorted(m.rejection_counts.items()):
        lines.append(f"rejections.{reason}={n}")
    lines.append(f"insolvent_nodes={len(m.insolvent)}")
    return "\n".join(lines) + "\n"


def write_csvs(metrics: Metrics, out: str | Path, tip_hash: bytes, height: int) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, data in rows(metrics).items():
        path = out / name
        path.write_text(render_csv(COLUMNS[name], data))
        written.append(path)
    path = out / "summary.txt"
    path.write_text(summary_text(metrics, tip_hash, height))
    written.append(path)
    return written


def _short(node: bytes, labels: dict) -> str:
    label = labels.get(node, "")
    return label.split(":", 1)[-1] if label else node.hex()[:8]


def write_figures(metrics: Metrics, out: str | Path) -> list[Path]:
    """Reputation, utilization, spectrum and earnings plots as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    m = metrics
    written = []

    def save(fig, name):
        path = out / name
        fig.tight_layout()
        fig.savefig(path, dpi=100, metadata={"Software": None})
        plt.close(fig)
        written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    curves = defaultdict(list)
    for e, nid, r in m.reputations:
        curves[nid].append((e, r))
    for nid in sorted(curves, key=lambda n: _short(n, m.labels))[:30]:
        xs, ys = zip(*curves[nid])
        ax.plot(xs, ys, lw=1, label=_short(nid, m.labels))
    ax.set(xlabel="epoch", ylabel="reputation", ylim=(-0.02, 1.02), title="Reputation")
    if curves and len(curves) <= 12:
        ax.legend(fontsize=7)
    save(fig, "reputation.png")

    fig, ax = plt.subplots(figsize=(7, 4))
    by_sys = defaultdict(list)
    for e, sid, _f, _g, u in m.utilization:
        by_sys[sid].append((e, u))
    for sid in sorted(by_sys):
        xs, ys = zip(*by_sys[sid])
        ax.plot(xs, ys, marker=".", lw=1, label=sid.hex()[:8])
    ax.set(xlabel="report epoch", ylabel="sum f / sum g", ylim=(-0.02, 1.05), title="Utilization")
    if by_sys:
        ax.legend(fontsize=7)
    save(fig, "utilization.png")

    fig, ax = plt.subplots(figsize=(7, 4))
    if m.spectrum:
        es, offered, committed = zip(*m.spectrum)
        ax.plot(es, offered, label="offered")
        ax.plot(es, committed, label="committed")
        ax.legend(fontsize=7)
    ax.set(xlabel="epoch", ylabel="MHz", title="Spectrum")
    save(fig, "spectrum.png")

    fig, ax = plt.subplots(figsize=(7, 4))
    nodes = sorted(m.balances)
    ax.bar(range(len(nodes)), [m.earned.get(n, 0) / 1e6 for n in nodes])
    ax.set_xticks(range(len(nodes)), [_short(n, m.labels) for n in nodes], rotation=90, fontsize=6)
    ax.set(ylabel="credits earned", title="Earnings")
    save(fig, "earnings.png")
    return written
