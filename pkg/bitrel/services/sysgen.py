"""Random SoC-like systems with known topology, and traces sampled from them.

A system is a bipartite graph: ``m_src`` independent Bernoulli sources with
arcsine-distributed densities feed ``m_dst`` nodes, each a boolean function
of a lognormal number of distinct sources. System types cycle round-robin by
ordinal through AND, OR, XOR, MIX and LHA.
"""

import operator
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Dict, List, Sequence, Union

import numpy as np
import structlog

from bitrel.core import rng as rngs
from bitrel.exceptions.custom_exceptions import UsageError
from bitrel.models.schemas import (
    HOMOGENEOUS_OPERATOR,
    MAX_NODES_PER_SIDE,
    NodeFunction,
    Operator,
    SystemSpec,
    SystemType,
)
from bitrel.services.bitseries import BitSeries, pack_bits

logger = structlog.get_logger(__name__)

SYSTEM_TYPE_CYCLE = [SystemType.AND, SystemType.OR, SystemType.XOR, SystemType.MIX, SystemType.LHA]
OPERATOR_CHOICES = [Operator.AND, Operator.OR, Operator.XOR]

# works elementwise on python ints and on packed uint64 word arrays alike
OPERATIONS: Dict[Operator, Callable] = {
    Operator.AND: operator.and_,
    Operator.OR: operator.or_,
    Operator.XOR: operator.xor,
}

Operand = Union[int, np.ndarray]


def system_type_for(ordinal: int) -> SystemType:
    return SYSTEM_TYPE_CYCLE[ordinal % len(SYSTEM_TYPE_CYCLE)]


def arcsine_draw(u):
    """Inverse CDF of arcsine(0, 1): sin^2(pi u / 2)."""
    u_array = np.asarray(u, dtype=np.float64)
    if ((u_array < 0) | (u_array > 1)).any():
        raise UsageError(message="Uniform variate must lie in [0, 1]")
    result = np.sin(np.pi * u_array / 2.0) ** 2
    return float(result) if result.ndim == 0 else result


def raw_fan_in(rng: np.random.Generator, size=None):
    """Continuous Lognormal(0, 1) edge-count draws, before discretization."""
    return np.exp(rng.standard_normal(size))


def fan_in(rng: np.random.Generator, m_src: int) -> int:
    k = round(float(raw_fan_in(rng)))
    return min(max(k, 1), m_src)


def _draw_function(rng: np.random.Generator, system_type: SystemType, m_src: int) -> NodeFunction:
    k = fan_in(rng, m_src)
    inputs = tuple(sorted(int(i) for i in rng.choice(m_src, size=k, replace=False)))
    if k == 1:
        return NodeFunction(inputs=inputs)
    if system_type in HOMOGENEOUS_OPERATOR:
        return NodeFunction(inputs=inputs, ops=(HOMOGENEOUS_OPERATOR[system_type],))
    if system_type == SystemType.MIX:
        return NodeFunction(inputs=inputs, ops=(OPERATOR_CHOICES[int(rng.integers(3))],))
    ops = tuple(OPERATOR_CHOICES[int(i)] for i in rng.integers(3, size=k - 1))
    return NodeFunction(inputs=inputs, ops=ops, chain=True)


def draw_system(seed: int, index: int) -> SystemSpec:
    rng = rngs.structure_rng(seed, index)
    system_type = system_type_for(index)
    m_src = int(rng.integers(1, MAX_NODES_PER_SIDE + 1))
    m_dst = int(rng.integers(1, MAX_NODES_PER_SIDE + 1))
    densities = arcsine_draw(rng.random(m_src))
    functions = [_draw_function(rng, system_type, m_src) for _ in range(m_dst)]
    spec = SystemSpec(
        ordinal=index,
        system_type=system_type,
        m_src=m_src,
        m_dst=m_dst,
        seed=rngs.system_token(seed, index),
        src_density=tuple(float(p) for p in densities),
        dst_functions=tuple(functions),
    )
    logger.debug("system_drawn", ordinal=index, system_type=system_type.value, m_src=m_src, m_dst=m_dst)
    return spec


def combine(fn: NodeFunction, operands: Sequence[Operand]) -> Operand:
    """Left-associative evaluation ((x1 op1 x2) op2 x3)... over ``fn``'s operators."""
    operators = fn.operators
    return reduce(
        lambda acc, pair: OPERATIONS[pair[0]](acc, pair[1]),
        zip(operators, operands[1:]),
        operands[0],
    )


def eval_function(fn: NodeFunction, src_values: Sequence[int]) -> int:
    if fn.inputs[-1] >= len(src_values):
        raise UsageError(message="Function references a src index outside the value vector",
                         details={"index": fn.inputs[-1], "m_src": len(src_values)})
    return int(combine(fn, [int(src_values[i]) for i in fn.inputs]))


def sample_traces(spec: SystemSpec, n: int) -> List[BitSeries]:
    """Sample n time steps; src traces first, then dst traces, in node order."""
    if n < 1:
        raise UsageError(message="Sample count must be at least 1", details={"n": n})
    sources = []
    for node, density in enumerate(spec.src_density):
        draws = rngs.node_rng(spec.seed, node).random(n) < density
        sources.append(BitSeries(words=pack_bits(draws), n=n))
    # boolean functions act on the packed words directly; zero pads stay zero
    sinks = [
        BitSeries.from_words(combine(fn, [sources[i].words for i in fn.inputs]), n)
        for fn in spec.dst_functions
    ]
    return sources + sinks


@dataclass(frozen=True, eq=False)
class KnownAdjacency:
    """Symmetric 0/1 ground-truth matrix; node order is src nodes then dst nodes."""

    entries: np.ndarray

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def positives(self) -> int:
        """Number of connected unordered pairs."""
        return int(np.triu(self.entries, 1).sum())


def known_adjacency(spec: SystemSpec) -> KnownAdjacency:
    entries = np.zeros((spec.m, spec.m), dtype=np.int8)
    for offset, fn in enumerate(spec.dst_functions):
        dst = spec.m_src + offset
        for src in fn.inputs:
            entries[dst, src] = entries[src, dst] = 1
    entries.flags.writeable = False
    return KnownAdjacency(entries=entries)
