"""Link-count experiment: expected vs sampled intersection links between two random dimensions.

Each dimension gets ``coords`` weight vectors with a level drawn uniformly
from 1..levels (relative level = level / levels) and a resource count drawn
uniformly from 0..max_count.  The covariance is estimated from all vectors of
both dimensions; every cross pair is scored under each policy.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from ..linkstats import (
    BOUNDED,
    LOGISTIC,
    LinkPolicy,
    WeightVector,
    covariance_inverse,
    link_probability,
    mahalanobis,
    sample_link,
)


@dataclass
class LinkExpConfig:
    coords: int = 100
    levels: int = 14
    max_count: int = 1000
    seed: int = 0
    policies: Sequence[str] = (LOGISTIC, BOUNDED)


@dataclass
class PolicySummary:
    policy: str
    expected: float
    sampled: int
    sigma: float  # binomial standard deviation of the sampled count

    @property
    def within_3_sigma(self) -> bool:
        return abs(self.sampled - self.expected) <= 3 * self.sigma


@dataclass
class LinkExpReport:
    config: LinkExpConfig
    rows: List[Dict[str, object]] = field(default_factory=list)
    summary: Dict[str, PolicySummary] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        if not self.rows:
            return ""
        w = csv.DictWriter(buf, fieldnames=list(self.rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows)
        return buf.getvalue()


def random_vectors(n: int, levels: int, max_count: int, rng: np.random.Generator) -> List[WeightVector]:
    lv = rng.integers(1, levels + 1, size=n)
    counts = rng.integers(0, max_count + 1, size=n)
    return [WeightVector(float(l) / levels, float(c)) for l, c in zip(lv, counts)]


def run_linkexp(cfg: LinkExpConfig) -> LinkExpReport:
    rng = np.random.default_rng(cfg.seed)
    a = random_vectors(cfg.coords, cfg.levels, cfg.max_count, rng)
    b = random_vectors(cfg.coords, cfg.levels, cfg.max_count, rng)
    cov = covariance_inverse(a + b)
    policies = [LinkPolicy.parse(p) for p in cfg.policies]
    report = LinkExpReport(cfg)
    totals = {str(p): [0.0, 0, 0.0] for p in policies}
    for i, wa in enumerate(a):
        for j, wb in enumerate(b):
            x = mahalanobis(wa, wb, cov)
            row: Dict[str, object] = {"a": i, "b": j, "distance": f"{x:.6f}"}
            for p in policies:
                prob = link_probability(x, p)
                hit = sample_link(x, p, rng)
                t = totals[str(p)]
                t[0] += prob
                t[1] += int(hit)
                t[2] += prob * (1 - prob)
                row[f"p_{p}"] = f"{prob:.6f}"
                row[f"link_{p}"] = int(hit)
            report.rows.append(row)
    for name, (expected, sampled, var) in totals.items():
        report.summary[name] = PolicySummary(name, expected, sampled, math.sqrt(var))
    return report
