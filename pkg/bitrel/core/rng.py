"""Seeded substreams for reproducible corpus generation.

Stream splitting uses numpy's ``SeedSequence`` spawn keys over PCG64:

* structure of system ``ordinal`` in a corpus seeded with ``seed``:
  ``SeedSequence(seed, spawn_key=(ordinal,))``
* samples of src node ``i`` of a system whose token is ``spec.seed``:
  ``SeedSequence(spec.seed, spawn_key=(i,))``

The system token is the first 64-bit word drawn from the structure stream's
state, so a ``.spec`` file alone is enough to regenerate its traces.
"""

import numpy as np


def system_stream(seed: int, ordinal: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=(ordinal,))


def system_token(seed: int, ordinal: int) -> int:
    return int(system_stream(seed, ordinal).generate_state(1, dtype=np.uint64)[0])


def structure_rng(seed: int, ordinal: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(system_stream(seed, ordinal)))


def node_rng(token: int, node: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=token, spawn_key=(node,))))
