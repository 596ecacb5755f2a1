"""Asker→answerer graph and ExpertiseRank.

An edge ``A -> B`` means ``B`` answered at least one of ``A``'s questions.
ExpertiseRank is the non-normalised PageRank form

    ER(A) = (1 - d) + d * sum(ER(U) / C(U) for U in predecessors(A))

where ``C(U)`` is the number of distinct users who answered ``U``.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from scipy import sparse

from .corpus import CorpusStore
from .errors import IntegrityError


@dataclass
class QaGraph:
    nodes: list[int]
    edge_weight: dict[tuple[int, int], int]
    orphans_skipped: int = 0
    self_answers_skipped: int = 0
    unowned_skipped: int = 0

    @property
    def edges(self) -> set[tuple[int, int]]:
        return set(self.edge_weight)

    @property
    def out_degree(self) -> dict[int, int]:
        deg = dict.fromkeys(self.nodes, 0)
        for asker, _ in self.edge_weight:
            deg[asker] += 1
        return deg

    def successors(self, user_id: int) -> list[int]:
        return sorted(b for a, b in self.edge_weight if a == user_id)

    def predecessors(self, user_id: int) -> list[int]:
        return sorted(a for a, b in self.edge_weight if b == user_id)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]] | Mapping[tuple[int, int], int],
                   nodes: Iterable[int] = ()) -> "QaGraph":
        if isinstance(edges, Mapping):
            weights = dict(edges)
        else:
            weights = {}
            for e in edges:
                weights[e] = weights.get(e, 0) + 1
        node_set = set(nodes)
        for a, b in weights:
            if a == b:
                raise ValueError(f"self-loop on {a}")
            node_set.update((a, b))
        return cls(sorted(node_set), dict(sorted(weights.items())))

    def write_edge_list(self, path: str | os.PathLike) -> None:
        """``asker_id answerer_id weight`` per line."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for (a, b), w in sorted(self.edge_weight.items()):
                fh.write(f"{a} {b} {w}\n")

    def write_nodes(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(f"{n}\n" for n in self.nodes)

    @classmethod
    def read(cls, edge_path: str | os.PathLike, node_path: str | os.PathLike | None = None) -> "QaGraph":
        weights = {}
        with open(edge_path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    a, b, w = line.split()
                    weights[(int(a), int(b))] = int(w)
        nodes = []
        if node_path is not None:
            with open(node_path, encoding="utf-8") as fh:
                nodes = [int(line) for line in fh if line.strip()]
        return cls.from_edges(weights, nodes)


def build_graph(store: CorpusStore) -> QaGraph:
    """One edge per (asker, answerer) pair; ``edge_weight`` counts distinct questions."""
    pairs: dict[tuple[int, int], set[int]] = {}
    orphans = self_answers = unowned = 0
    for ans in store.answers():
        question = store.parent_of(ans)
        if question is None:
            orphans += 1
            continue
        asker, answerer = question.owner_user_id, ans.owner_user_id
        if asker is None or answerer is None:
            unowned += 1
            continue
        if asker == answerer:
            self_answers += 1
            continue
        pairs.setdefault((asker, answerer), set()).add(question.post_id)
    nodes = {p.owner_user_id for p in store.posts.values() if p.owner_user_id is not None}
    graph = QaGraph.from_edges({e: len(q) for e, q in pairs.items()}, nodes)
    graph.orphans_skipped = orphans
    graph.self_answers_skipped = self_answers
    graph.unowned_skipped = unowned
    return graph


@dataclass
class ErScores:
    er: dict[int, float]
    iterations: int
    residual: float
    converged: bool
    d: float
    weighted: bool = False
    params: dict = field(default_factory=dict)

    def write(self, path: str | os.PathLike) -> None:
        """``user_id score`` per line, scores in round-trippable repr."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for uid in sorted(self.er):
                fh.write(f"{uid} {self.er[uid]!r}\n")

    def meta(self) -> dict:
        return {"d": self.d, "weighted": self.weighted, "iterations": self.iterations,
                "residual": self.residual, "converged": self.converged, **self.params}

    @classmethod
    def read(cls, path: str | os.PathLike, meta: Mapping) -> "ErScores":
        er = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    uid, score = line.split()
                    er[int(uid)] = float(score)
        extra = {k: v for k, v in meta.items()
                 if k not in ("d", "weighted", "iterations", "residual", "converged")}
        return cls(er, meta["iterations"], meta["residual"], meta["converged"], meta["d"],
                   meta.get("weighted", False), extra)


def transition_matrix(graph: QaGraph, weighted: bool = False) -> sparse.csr_matrix:
    """``M[a, u]`` is the share of ``u``'s score passed to ``a`` (a column per source)."""
    pos = {n: i for i, n in enumerate(graph.nodes)}
    n = len(graph.nodes)
    totals: dict[int, float] = {}
    for (a, _), w in graph.edge_weight.items():
        totals[a] = totals.get(a, 0) + (w if weighted else 1)
    rows, cols, vals = [], [], []
    for (a, b), w in graph.edge_weight.items():
        rows.append(pos[b])
        cols.append(pos[a])
        vals.append((w if weighted else 1) / totals[a])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def expertise_rank(graph: QaGraph, d: float = 0.85, tol: float = 1e-8, max_iter: int = 100,
                   weighted: bool = False) -> ErScores:
    """Synchronous fixed-point iteration from ``ER = 1``.

    Stops once the largest per-node change drops below ``tol``.  When
    ``max_iter`` is hit first the scores are returned with
    ``converged=False`` and the last residual.
    """
    if not 0.0 < d < 1.0:
        raise ValueError(f"damping factor must lie in (0, 1), got {d}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    n = len(graph.nodes)
    params = {"tol": tol, "max_iter": max_iter}
    if n == 0:
        return ErScores({}, 0, 0.0, True, d, weighted, params)
    m = transition_matrix(graph, weighted)
    er = np.ones(n)
    base = 1.0 - d
    residual = float("inf")
    it = 0
    while it < max_iter:
        it += 1
        nxt = base + d * (m @ er)
        residual = float(np.max(np.abs(nxt - er)))
        er = nxt
        if residual < tol:
            break
    scores = {node: float(v) for node, v in zip(graph.nodes, er)}
    return ErScores(scores, it, residual, residual < tol, d, weighted, params)


def solve_expertise_rank(graph: QaGraph, d: float = 0.85, weighted: bool = False) -> dict[int, float]:
    """Direct solve of ``(I - d M) er = (1 - d) 1``."""
    n = len(graph.nodes)
    if n == 0:
        return {}
    m = transition_matrix(graph, weighted).toarray()
    er = np.linalg.solve(np.eye(n) - d * m, np.full(n, 1.0 - d))
    return {node: float(v) for node, v in zip(graph.nodes, er)}


def candidate_er(scores: ErScores, candidates: Iterable[int]) -> dict[int, float]:
    """Project global scores onto candidates; unknown users get ``1 - d``."""
    floor = 1.0 - scores.d
    return {uid: scores.er.get(uid, floor) for uid in candidates}


def save_graph_artifacts(out: str | os.PathLike, graph: QaGraph, scores: ErScores,
                         store_fingerprint: str) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    graph.write_edge_list(out / "edges.txt")
    graph.write_nodes(out / "nodes.txt")
    scores.write(out / "er.txt")
    manifest = {
        "kind": "exrec-graph",
        "schema_version": 1,
        "store_fingerprint": store_fingerprint,
        "nodes": len(graph.nodes),
        "edges": len(graph.edge_weight),
        "orphans_skipped": graph.orphans_skipped,
        "self_answers_skipped": graph.self_answers_skipped,
        "unowned_skipped": graph.unowned_skipped,
        "expertise_rank": scores.meta(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return out


def load_graph_artifacts(path: str | os.PathLike) -> tuple[QaGraph, ErScores, dict]:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    if manifest.get("kind") != "exrec-graph":
        raise IntegrityError(f"{path} is not a graph directory")
    graph = QaGraph.read(path / "edges.txt", path / "nodes.txt")
    scores = ErScores.read(path / "er.txt", manifest["expertise_rank"])
    scores.params["store_fingerprint"] = manifest["store_fingerprint"]
    return graph, scores, manifest
