"""Preference collection, rank scoring, and weight learning.

Human rankings become per-candidate scores through the Formula One point
scheme; weights [λ', α] are then fit by maximizing Kendall-tau agreement
between score order and fitness order, minus a penalty on mismatched
runner-up fitness/score ratios, via a continuous pattern search.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import LAMBDA_BOUND, WeightSet

F1_POINTS = (25.0, 18.0, 15.0)
EXPECTED_SIGNS = ("+", "+", "-", "+", "+", "+", "+", "-", "-", "+")


# ----------------------------------------------------------------- scoring

@dataclass(frozen=True)
class RankTally:
    """Per-candidate counts of 1st/2nd/3rd placements."""

    candidate_ids: tuple[str, ...]
    counts: np.ndarray  # (n_candidates, n_positions) int64

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != len(self.candidate_ids):
            raise ValueError("counts must be (n_candidates, n_positions)")
        if (c < 0).any():
            raise ValueError("counts must be non-negative")


def f1_score(tally: RankTally) -> np.ndarray:
    """Formula One points per candidate: 25/18/15 for 1st/2nd/3rd."""
    counts = np.asarray(tally.counts, dtype=np.float64)
    if counts.shape[1] > len(F1_POINTS):
        raise ValueError("scoring covers top-3 placements only")
    points = np.asarray(F1_POINTS[: counts.shape[1]])
    return counts @ points


def normalize_scores(scores: np.ndarray) -> np.ndarray:
    """Scores scaled by the maximum; the best candidate gets 1.0."""
    scores = np.asarray(scores, dtype=np.float64)
    top = float(scores.max()) if scores.size else 0.0
    if top <= 0.0:
        raise ValueError("cannot normalize all-zero scores")
    return scores / top


def kendall_tau(order_a: Sequence, order_b: Sequence) -> float:
    """(concordant - discordant) / (n(n-1)/2) between two strict total orders."""
    if set(order_a) != set(order_b) or len(set(order_a)) != len(order_a):
        raise ValueError("orders must range over the same element set without ties")
    n = len(order_a)
    if n < 2:
        raise ValueError("orders need at least 2 elements")
    pos_b = {e: k for k, e in enumerate(order_b)}
    ranks = [pos_b[e] for e in order_a]
    concordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            concordant += 1 if ranks[i] < ranks[j] else -1
    return concordant / (n * (n - 1) / 2)


# ----------------------------------------------------------------- records

@dataclass(frozen=True)
class PreferenceRecord:
    """One subject's answer for one round: a full ranking or a pairwise pick."""

    dataset: str
    subject: str
    candidate_ids: tuple[str, ...]
    ranking: tuple[str, ...] | None = None  # best first, total order
    pair: tuple[str, str] | None = None  # (winner, loser)
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        if (self.ranking is None) == (self.pair is None):
            raise ValueError("record must carry exactly one of ranking / pair")
        if self.ranking is not None:
            if sorted(self.ranking) != sorted(self.candidate_ids):
                raise ValueError("ranking must be a total order over the candidates")
        else:
            w, l = self.pair
            if w == l or w not in self.candidate_ids or l not in self.candidate_ids:
                raise ValueError("pair must reference two distinct candidates")

    def to_json(self) -> dict:
        out = {
            "v": 1,
            "dataset": self.dataset,
            "subject": self.subject,
            "candidate_ids": list(self.candidate_ids),
            "timestamp": self.timestamp,
        }
        if self.ranking is not None:
            out["ranking"] = list(self.ranking)
        else:
            out["pair"] = list(self.pair)
        return out

    @staticmethod
    def from_json(data: dict) -> "PreferenceRecord":
        return PreferenceRecord(
            dataset=data["dataset"],
            subject=data["subject"],
            candidate_ids=tuple(data["candidate_ids"]),
            ranking=tuple(data["ranking"]) if "ranking" in data else None,
            pair=tuple(data["pair"]) if "pair" in data else None,
            timestamp=data.get("timestamp", 0.0),
        )


def write_records(path: str | Path, records: Sequence[PreferenceRecord], append: bool = True) -> None:
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json()) + "\n")


def read_records(path: str | Path) -> list[PreferenceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(PreferenceRecord.from_json(json.loads(line)))
    return records


def _has_cycle(edges: set[tuple[str, str]]) -> bool:
    graph: dict[str, list[str]] = {}
    for w, l in edges:
        graph.setdefault(w, []).append(l)
    state: dict[str, int] = {}  # 1 = on stack, 2 = done

    def visit(node: str) -> bool:
        state[node] = 1
        for nxt in graph.get(node, ()):
            s = state.get(nxt, 0)
            if s == 1 or (s == 0 and visit(nxt)):
                return True
        state[node] = 2
        return False

    return any(state.get(n, 0) == 0 and visit(n) for n in list(graph))


def split_circular(records: Sequence[PreferenceRecord]) -> tuple[list[PreferenceRecord], list[str]]:
    """Drop each subject's pairwise answers if they contain a preference cycle.

    Returns the kept records and the flagged subject tokens.
    """
    by_subject: dict[str, set[tuple[str, str]]] = {}
    for rec in records:
        if rec.pair is not None:
            by_subject.setdefault(rec.subject, set()).add(rec.pair)
    flagged = sorted(s for s, edges in by_subject.items() if _has_cycle(edges))
    kept = [r for r in records if r.pair is None or r.subject not in flagged]
    return kept, flagged


def build_tally(records: Sequence[PreferenceRecord], candidate_ids: Sequence[str]) -> RankTally:
    """Aggregate records into placement counts.

    Full rankings contribute their top-3; a pairwise pick counts as a 1st for
    the winner and a 2nd for the loser.
    """
    ids = tuple(candidate_ids)
    index = {c: k for k, c in enumerate(ids)}
    counts = np.zeros((len(ids), 3), dtype=np.int64)
    for rec in records:
        if set(rec.candidate_ids) - set(ids):
            raise ValueError("record references unknown candidates")
        if rec.ranking is not None:
            for place, cid in enumerate(rec.ranking[:3]):
                counts[index[cid], place] += 1
        else:
            w, l = rec.pair
            counts[index[w], 0] += 1
            counts[index[l], 1] += 1
    return RankTally(ids, counts)


# ----------------------------------------------------------------- features

@dataclass(frozen=True)
class CandidateFeatures:
    """Everything needed to re-score one candidate collage under new weights.

    Criteria other than visibility and ratio balance do not depend on the map
    blend; those two are rebuilt from cached per-kind visible/total integrals,
    which is exact because visibility masks depend only on geometry.
    """

    candidate_id: str
    static: np.ndarray  # (10,) criteria; slots 0 and 2 are placeholders
    visint: np.ndarray  # (3, N) per-kind visible map integrals
    totint: np.ndarray  # (3, N) per-kind whole-map integrals

    def criteria(self, alphas: Sequence[float]) -> np.ndarray:
        a = np.asarray(alphas, dtype=np.float64)
        vis = a @ self.visint
        tot = a @ self.totint
        ratios = vis / np.maximum(tot, 1e-12)
        out = np.array(self.static, dtype=np.float64)
        out[0] = float(ratios.mean())
        out[2] = 1.0 - float(np.std(ratios))
        return out


def candidate_features(candidate_id: str, config, scene) -> CandidateFeatures:
    """Extract re-scorable features for a configuration on a scene."""
    from .criteria import Needs, evaluate_context
    from .core import MAP_KINDS

    ctx = scene.context(config, Needs.all())
    static = evaluate_context(ctx).values
    n = scene.n_images
    visint = np.zeros((3, n))
    totint = np.zeros((3, n))
    cw, ch = scene.canvas.width, scene.canvas.height
    from . import _geometry as geo

    for i in range(n):
        s = config.states[i]
        kind_mass = scene.rotated_kind_mass(i, s.theta_index)
        rot = scene.rotated(i, s.theta_index)
        hp, wp = rot.cover.shape
        win = geo.paste_window(s.tx, s.ty, wp, hp, cw, ch)
        for k, kind in enumerate(MAP_KINDS):
            totint[k, i] = scene.maps[i][kind].sum2()
            if win is not None:
                cy, cx, sy, sx = win
                vis = ctx.labels[cy, cx] == i
                visint[k, i] = float(kind_mass[kind][sy, sx][vis].sum())
    return CandidateFeatures(candidate_id, static, visint, totint)


# ----------------------------------------------------------------- learning

@dataclass(frozen=True)
class TrainingDataset:
    """One dataset's candidates with their features and user-derived scores."""

    name: str
    features: tuple[CandidateFeatures, ...]
    scores: np.ndarray  # (n_candidates,) from f1_score

    def __post_init__(self):
        if len(self.features) < 2:
            raise ValueError("a training dataset needs at least 2 candidates")
        if len(self.scores) != len(self.features):
            raise ValueError("one score per candidate required")
        if float(np.max(self.scores)) <= 0.0:
            raise ValueError("all-zero scores carry no preference signal")


@dataclass(frozen=True)
class LearnSpec:
    eta: float = 1.0
    bound: float = LAMBDA_BOUND
    step_init: float = 1.0
    step_min: float = 1e-4
    max_evals: int = 20000
    restarts: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.bound <= 0:
            raise ValueError("lambda bound must be positive")
        if self.step_min <= 0 or self.step_init < self.step_min:
            raise ValueError("invalid step schedule")


@dataclass
class LearnResult:
    weights: WeightSet
    objective: float
    tau_sum: float
    ratio_penalty: float
    no_improvement: bool
    trained_on: tuple[str, ...]

    def to_json(self) -> dict:
        out = self.weights.to_json()
        out["objective"] = self.objective
        out["trained_on"] = list(self.trained_on)
        return out


def _simplex_project(raw: np.ndarray) -> np.ndarray:
    clipped = np.maximum(raw, 0.0)
    total = float(clipped.sum())
    if total <= 0.0:
        return np.full(3, 1.0 / 3.0)
    return clipped / total


def _score_order(values: np.ndarray) -> list[int]:
    """Descending order with ties broken by candidate index."""
    return sorted(range(len(values)), key=lambda i: (-values[i], i))


def _objective_terms(
    lams: np.ndarray, alphas: np.ndarray, training: Sequence[TrainingDataset], eta: float
) -> tuple[float, float, float]:
    tau_sum = 0.0
    penalty = 0.0
    for ds in training:
        crit = np.stack([f.criteria(alphas) for f in ds.features])
        fvals = crit @ lams
        f_order = _score_order(fvals)
        u_order = _score_order(np.asarray(ds.scores, dtype=np.float64))
        tau_sum += kendall_tau(f_order, u_order)
        f_top = fvals[f_order[0]]
        den = f_top if abs(f_top) > 1e-12 else math.copysign(1e-12, f_top if f_top != 0 else 1.0)
        s_top = float(ds.scores[u_order[0]])
        for k in range(1, min(3, len(f_order))):
            f_ratio = fvals[f_order[k]] / den
            s_ratio = float(ds.scores[u_order[k]]) / s_top
            penalty += abs(f_ratio - s_ratio)
    return tau_sum - eta * penalty, tau_sum, penalty


def learning_objective(
    weights: WeightSet, training: Sequence[TrainingDataset], eta: float = 1.0
) -> float:
    obj, _, _ = _objective_terms(
        np.asarray(weights.lambdas), np.asarray(weights.alphas), training, eta
    )
    return obj


def learn_weights(training: Sequence[TrainingDataset], spec: LearnSpec | None = None) -> LearnResult:
    """Fit [λ', α] by pattern search with step halving over seeded restarts."""
    spec = spec or LearnSpec()
    if not training:
        raise ValueError("no training datasets")
    rng = np.random.default_rng(spec.seed)
    best = None  # (objective, lams, alphas)
    improved_any = False
    for _ in range(spec.restarts):
        x = np.concatenate([rng.uniform(-1.0, 1.0, 10), rng.dirichlet(np.ones(3))])
        obj0 = _eval_point(x, training, spec)
        x, obj, evals = _pattern_search(x, obj0, training, spec)
        if obj > obj0 + 1e-12:
            improved_any = True
        if best is None or obj > best[0]:
            best = (obj, x.copy())
    obj, x = best
    lams = np.clip(x[:10], -spec.bound, spec.bound)
    alphas = _simplex_project(x[10:])
    _, tau_sum, penalty = _objective_terms(lams, alphas, training, spec.eta)
    weights = WeightSet(tuple(float(v) for v in lams), tuple(float(a) for a in alphas))
    return LearnResult(
        weights=weights,
        objective=obj,
        tau_sum=tau_sum,
        ratio_penalty=penalty,
        no_improvement=not improved_any,
        trained_on=tuple(ds.name for ds in training),
    )


def _eval_point(x: np.ndarray, training, spec: LearnSpec) -> float:
    lams = np.clip(x[:10], -spec.bound, spec.bound)
    alphas = _simplex_project(x[10:])
    obj, _, _ = _objective_terms(lams, alphas, training, spec.eta)
    return obj


def _pattern_search(x, obj, training, spec: LearnSpec):
    step = spec.step_init
    evals = 0
    while step >= spec.step_min and evals < spec.max_evals:
        moved = False
        for d in range(13):
            for sgn in (1.0, -1.0):
                trial = x.copy()
                trial[d] += sgn * step
                t_obj = _eval_point(trial, training, spec)
                evals += 1
                if t_obj > obj:
                    x, obj = trial, t_obj
                    moved = True
                    break
                if evals >= spec.max_evals:
                    break
            if evals >= spec.max_evals:
                break
        if not moved:
            step *= 0.5
    return x, obj, evals


def sign_report(weights: WeightSet) -> dict:
    """Per-criterion sign of λ' next to the reference signs, for inspection."""
    rows = []
    mismatched = []
    for k, lam in enumerate(weights.lambdas):
        sign = "+" if lam > 0 else ("-" if lam < 0 else "0")
        match = sign == EXPECTED_SIGNS[k]
        rows.append(
            {"criterion": k + 1, "lambda": lam, "sign": sign, "expected": EXPECTED_SIGNS[k], "match": match}
        )
        if not match:
            mismatched.append(k + 1)
    return {"rows": rows, "mismatched": mismatched, "all_match": not mismatched}
