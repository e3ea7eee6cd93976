"""Render robustness sweep curves as PNG files next to the CSV output."""
from __future__ import annotations

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .experiment import ReportRow


def render_figures(rows: list[ReportRow], outdir) -> list[str]:
    """One figure per channel kind: mean accuracy (with +-1 std band) and TPR
    against the swept parameter. Returns the written paths."""
    os.makedirs(outdir, exist_ok=True)
    by_kind = defaultdict(list)
    for row in rows:
        by_kind[row.kind].append(row)

    written = []
    for kind, group in by_kind.items():
        swept = [r for r in group if r.param_name]
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        if swept:
            xs = [float(r.param_value) for r in swept]
            accs = [r.mean_acc for r in swept]
            stds = [r.std_acc for r in swept]
            tprs = [r.tpr for r in swept]
            order = sorted(range(len(xs)), key=xs.__getitem__)
            xs = [xs[i] for i in order]
            accs = [accs[i] for i in order]
            stds = [stds[i] for i in order]
            tprs = [tprs[i] for i in order]
            ax.plot(xs, accs, "o-", color="tab:blue", label="bit accuracy")
            ax.fill_between(xs, [a - s for a, s in zip(accs, stds)],
                            [a + s for a, s in zip(accs, stds)], alpha=0.2, color="tab:blue")
            ax.plot(xs, tprs, "s--", color="tab:red", label="TPR")
            ax.set_xlabel(swept[0].param_name)
        else:
            labels = [kind] * len(group)
            ax.bar(range(len(group)), [r.mean_acc for r in group],
                   yerr=[r.std_acc for r in group], color="tab:blue")
            ax.set_xticks(range(len(group)), labels)
        ax.set_ylabel("score")
        ax.set_ylim(-0.02, 1.05)
        ax.set_title(kind)
        ax.grid(alpha=0.3)
        if swept:
            ax.legend(loc="lower left")
        path = os.path.join(outdir, f"{kind}.png")
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
