"""Report assembly: text and JSON renderings, CSV rows and figures."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .checker import Verdict
from .oracles import FuzzResult

SCHEMA_VERSION = 1


@dataclass
class Report:
    command: str
    problem: str
    status: str
    exit_code: int
    data: dict = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = SCHEMA_VERSION
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        if d.pop("schema", None) != SCHEMA_VERSION:
            raise ValueError("unsupported report schema")
        return cls(**d)

    def render(self, fmt: str = "text") -> str:
        if fmt == "json":
            return self.to_json()
        head = f"{self.command} {self.problem}: {self.status}"
        return "\n".join([head, *self.lines])


def verdict_lines(v: Verdict, trace: bool) -> list[str]:
    out = []
    if v.reason:
        out.append(f"reason: {v.reason}")
    if not trace:
        return out
    for line in v.monotonicity:
        out.append(f"  {line}")
    for t in v.traces:
        mark = "ok" if t.ok else "FAIL"
        out.append(f"rule {t.index}: {t.rule}  [{mark}]")
        if t.gamma:
            out.append("  Gamma: " + ", ".join(f"{x} : {ty}" for x, ty in t.gamma.items()))
        if t.a:
            out.append("  a = (" + ", ".join(t.a) + ")")
        for c in t.calls:
            out.append(f"  call {c['call']}: ({', '.join(c['a'])}) >_A ({', '.join(c['b'])}) [{c['result']}]")
        if t.rhs_size is not None:
            out.append(f"  rhs size {t.rhs_size} vs bound {t.bound}: {t.comparison}")
        if t.error:
            out.append(f"  error: {t.error}")
    if v.nonconstructor is not None:
        for c in v.nonconstructor.conditions:
            mark = "ok" if c.ok else "FAIL"
            out.append(f"side condition [{mark}] {c.condition} for {c.symbol} in {c.rule}: {c.detail}")
    return out


# ---------------------------------------------------------------------------
# fuzzing output

FUZZ_COLUMNS = ("run", "step", "rule", "size_before", "size_after", "increase")


def fuzz_csv(result: FuzzResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FUZZ_COLUMNS)
    for r in result.rows:
        w.writerow([r.run, r.step, r.rule,
                    "" if r.size_before is None else r.size_before,
                    "" if r.size_after is None else r.size_after,
                    int(r.increase)])
    return buf.getvalue()


def plot_fuzz(result: FuzzResult, path: str | Path, title: str = "") -> Path:
    """Scatter of model sizes before and after each step, and a histogram
    of the size change."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pairs = [(r.size_before, r.size_after) for r in result.rows
             if r.size_before is not None and r.size_after is not None]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.8))
    if pairs:
        xs, ys = zip(*pairs)
        ax1.scatter(xs, ys, s=8, alpha=0.5)
        hi = max(max(xs), max(ys))
        ax1.plot([0, hi], [0, hi], color="grey", lw=0.8, ls="--")
        deltas = [b - a for a, b in pairs]
        ax2.hist(deltas, bins=range(min(deltas), max(deltas) + 2), align="left")
    ax1.set_xlabel("size before step")
    ax1.set_ylabel("size after step")
    ax2.set_xlabel("size change")
    ax2.set_ylabel("steps")
    fig.suptitle(title or f"{result.runs} runs, depth {result.depth}")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
