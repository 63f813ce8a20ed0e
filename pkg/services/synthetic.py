"""
Seeded stochastic block model benchmark in ingest-artifact form
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from models.graph import FeatureMatrix, Graph
from models.records import AuthorTable
from services.graph import build_graph
from storage.artifacts import PAPER_COLUMNS, IngestBundle
from utils.helpers import SeedDeriver
from logs.log import logger


class SbmConfig(BaseModel):
    """Block model and interest-feature settings"""
    blocks: int = Field(default=2, ge=1)
    block_size: int = Field(default=50, ge=2)
    p_in: float = Field(default=0.1, ge=0.0, le=1.0)
    p_out: float = Field(default=0.01, ge=0.0, le=1.0)
    interest_dim: int = Field(default=16, ge=1)
    graph_seed: int = 7
    # probability that a member carries one of its block's interests / any other interest
    p_own_interest: float = Field(default=0.7, ge=0.0, le=1.0)
    p_other_interest: float = Field(default=0.1, ge=0.0, le=1.0)


@dataclass
class SyntheticGraph:
    graph: Graph
    labels: np.ndarray
    interests: FeatureMatrix


def generate_sbm(config: SbmConfig) -> Tuple[Graph, np.ndarray]:
    """
    Undirected SBM: each pair is an edge independently with p_in inside a
    block and p_out across blocks

    Returns:
        (graph, block label per node)
    """
    n = config.blocks * config.block_size
    labels = np.repeat(np.arange(config.blocks), config.block_size)
    rng = SeedDeriver.rng(config.graph_seed, "sbm:edges")

    upper = np.triu_indices(n, k=1)
    same = labels[upper[0]] == labels[upper[1]]
    prob = np.where(same, config.p_in, config.p_out)
    keep = rng.random(len(prob)) < prob
    edges = np.column_stack([upper[0][keep], upper[1][keep]])
    return build_graph(edges, n, directed=False), labels


def block_interests(labels: np.ndarray, config: SbmConfig) -> FeatureMatrix:
    """
    Binary interest rows correlated with the block

    The interest slots are dealt round-robin to the blocks; a node holds each
    slot of its own block with p_own_interest and any other slot with
    p_other_interest.
    """
    rng = SeedDeriver.rng(config.graph_seed, "sbm:interests")
    owner = np.arange(config.interest_dim) % config.blocks
    own = labels[:, None] == owner[None, :]
    prob = np.where(own, config.p_own_interest, config.p_other_interest)
    return FeatureMatrix((rng.random(prob.shape) < prob).astype(np.float64))


def generate_synthetic(config: SbmConfig) -> SyntheticGraph:
    graph, labels = generate_sbm(config)
    interests = block_interests(labels, config)
    logger.info(
        "Generated SBM: %d blocks x %d nodes, %d edges (p_in=%s, p_out=%s, seed %d)",
        config.blocks, config.block_size, graph.num_edges, config.p_in, config.p_out, config.graph_seed,
    )
    return SyntheticGraph(graph=graph, labels=labels, interests=interests)


def synthetic_bundle(config: SbmConfig) -> IngestBundle:
    """Ingest artifacts for the SBM: authors only, no papers"""
    synth = generate_synthetic(config)
    n = synth.graph.n
    width = len(str(n - 1))
    table = AuthorTable(names=[f"author-{i:0{width}d}" for i in range(n)], author_papers=[[] for _ in range(n)])
    return IngestBundle(
        papers=pd.DataFrame(columns=PAPER_COLUMNS),
        author_table=table,
        coauthor_graph=synth.graph,
        citation_graph=build_graph(np.zeros((0, 2), dtype=np.int64), 0, directed=True),
        paper_features=FeatureMatrix(np.zeros((0, 0))),
        interests=synth.interests,
    )
