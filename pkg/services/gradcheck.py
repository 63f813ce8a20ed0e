"""
Finite-difference verification of every hand-derived gradient
"""
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel

from models.graph import Graph
from models.params import LinkModelParams, SageParams
from services.graph import build_graph, sample_neighborhood
from services.linkpred import link_loss_and_grads
from services.sage import sage_unsupervised_loss_and_grads
from services.skipgram import PairBatch, attri2vec_loss_and_grads, skipgram_loss_and_grads
from utils.exceptions import VerificationError
from utils.helpers import SeedDeriver
from utils.nn import Params, finite_diff_report
from logs.log import logger


TOLERANCE = 1e-4

# (loss over the parameter dict, parameter dict, analytic gradient dict)
Problem = Tuple[Callable[[Params], float], Params, Params]


class GradcheckRow(BaseModel):
    family: str
    block: str
    max_rel_error: float
    passed: bool


def _fixture_graph(n: int) -> Graph:
    """Cycle plus one chord, no isolated nodes"""
    edges = [(i, (i + 1) % n) for i in range(n)] + [(0, n // 2)]
    return build_graph(edges, n, directed=False)


def _batch(rng: np.random.Generator, n: int, size: int, negatives: int) -> PairBatch:
    return PairBatch(
        centers=rng.integers(0, n, size=size),
        contexts=rng.integers(0, n, size=size),
        negatives=rng.integers(0, n, size=(size, negatives)),
    )


def skipgram_problem(rng: np.random.Generator) -> Problem:
    n, d = 5, 4
    params = {"W_in": rng.uniform(-0.5, 0.5, (n, d)), "W_out": rng.uniform(-0.5, 0.5, (n, d))}
    batch = _batch(rng, n, 6, 2)
    _, grads = skipgram_loss_and_grads(params, batch)
    return (lambda p: skipgram_loss_and_grads(p, batch)[0]), params, grads


def attri2vec_problem(rng: np.random.Generator) -> Problem:
    n, d_x, d = 4, 5, 3
    X = rng.normal(size=(n, d_x))
    params = {"W_map": rng.uniform(-0.5, 0.5, (d, d_x)), "W_out": rng.uniform(-0.5, 0.5, (n, d))}
    batch = _batch(rng, n, 6, 2)
    _, grads = attri2vec_loss_and_grads(params, X, batch)
    return (lambda p: attri2vec_loss_and_grads(p, X, batch)[0]), params, grads


def sage_problem(rng: np.random.Generator, aggregator: str) -> Problem:
    n = 5
    g = _fixture_graph(n)
    X = rng.normal(size=(n, 3))
    sage = SageParams.init(3, [4, 4], aggregator, rng, "sigmoid", normalize=True)
    neighborhoods = [sample_neighborhood(g, k, rng) for k in (3, 2)]
    batch = _batch(rng, n, 6, 2)

    def loss(_: Params) -> float:
        return sage_unsupervised_loss_and_grads(sage, X, neighborhoods, batch)[0]

    _, grads = sage_unsupervised_loss_and_grads(sage, X, neighborhoods, batch)
    return loss, sage.as_dict(), grads


def link_problem(rng: np.random.Generator, aggregator: str, operator: str, hidden: int = 0) -> Problem:
    n = 6
    g = _fixture_graph(n)
    X = rng.normal(size=(n, 3))
    model = LinkModelParams.init(3, [4, 4], aggregator, operator, rng, "sigmoid", normalize=False, classifier_hidden=hidden)
    model.clf_b[:] = rng.normal()
    neighborhoods = [sample_neighborhood(g, k, rng) for k in (3, 2)]
    pairs = np.array([[0, 1], [2, 4], [3, 5], [1, 4], [0, 3], [2, 5]])
    labels = np.array([1, 0, 1, 0, 1, 0])

    def loss(_: Params) -> float:
        return link_loss_and_grads(model, X, neighborhoods, pairs, labels)[0]

    _, grads = link_loss_and_grads(model, X, neighborhoods, pairs, labels)
    return loss, model.as_dict(), grads


def problems(seed: int) -> Dict[str, Callable[[], Problem]]:
    """Every model family at small dims; each family gets its own generator"""
    def rng(label: str) -> np.random.Generator:
        return SeedDeriver.rng(seed, f"gradcheck:{label}")

    return {
        "skipgram": lambda: skipgram_problem(rng("skipgram")),
        "attri2vec": lambda: attri2vec_problem(rng("attri2vec")),
        "sage-mean": lambda: sage_problem(rng("sage-mean"), "mean"),
        "sage-maxpool": lambda: sage_problem(rng("sage-maxpool"), "maxpool"),
        **{
            f"link-{op}": (lambda op=op: link_problem(rng(f"link-{op}"), "mean", op))
            for op in ("L1", "L2", "Hadamard", "Average", "InnerProduct")
        },
        "link-maxpool-hidden": lambda: link_problem(rng("link-maxpool-hidden"), "maxpool", "Hadamard", hidden=3),
    }


def run_gradcheck(
    seed: int = 0,
    tolerance: float = TOLERANCE,
    inject_fault: Optional[str] = None,
    h: float = 1e-5,
) -> List[GradcheckRow]:
    """
    Compare analytic and central-difference gradients for every family

    Args:
        seed: Master seed for the fixtures
        tolerance: Largest acceptable relative error
        inject_fault: Parameter block name whose analytic gradient is
            corrupted (+1 on every coordinate) before the comparison
        h: Finite-difference step

    Returns:
        One row per (family, parameter block)

    Raises:
        VerificationError: If any block exceeds the tolerance; the message
            carries the full per-block table
    """
    rows: List[GradcheckRow] = []
    for family, build in problems(seed).items():
        loss_fn, params, grads = build()
        if inject_fault is not None and inject_fault in grads:
            grads[inject_fault] = grads[inject_fault] + 1.0
        for block, err in finite_diff_report(loss_fn, params, grads, h=h).items():
            rows.append(GradcheckRow(family=family, block=block, max_rel_error=err, passed=err <= tolerance))
            logger.debug("gradcheck %s %s: %.3e", family, block, err)

    if all(r.passed for r in rows):
        logger.info("Gradient check passed: %d blocks, max error %.3e", len(rows), max(r.max_rel_error for r in rows))
        return rows

    raise VerificationError("Gradient check failed:\n" + format_rows(rows))


def format_rows(rows: List[GradcheckRow]) -> str:
    lines = [f"{'family':<22} {'block':<16} {'max_rel_error':>14}  status"]
    for r in rows:
        lines.append(f"{r.family:<22} {r.block:<16} {r.max_rel_error:>14.3e}  {'ok' if r.passed else 'FAIL'}")
    return "\n".join(lines)
