import sys
import time
from pathlib import Path
from typing import List, Sequence

import numpy as np

# Add the repository root to sys.path to import the icdkit package
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from icdkit.algebra import make_algebra, unit_algebra
from icdkit.config import Settings
from icdkit.morphism import UMap, block_projection, compose, from_op_function, random_cpu_map

# Block layouts of every algebra the acceptance suite sweeps over
SAMPLE_BLOCKS = ([1], [1, 1], [2], [1, 2], [3], [2, 2])
UPPER_CORNER = np.diag([1.0, 1.0, 0.0, 0.0])


def random_blocks(rng: np.random.Generator, max_blocks: int = 3, max_size: int = 2) -> List[int]:
    """Random block layout with at most max_blocks blocks."""
    return [int(n) for n in rng.integers(1, max_size + 1, size=int(rng.integers(1, max_blocks + 1)))]


def corner_maps():
    """omega = half trace of the upper corner of M4; phi and psi agree on that corner only."""
    m4, m2, c = make_algebra([4]), make_algebra([2]), unit_algebra()
    omega = from_op_function(c, m4, lambda x: c.element([[[0.5 * np.trace(UPPER_CORNER @ x.mats[0])]]]))

    def padded(x):
        big = np.zeros((4, 4), dtype=complex)
        big[:2, :2] = x.mats[0]
        big[2, 2] = big[3, 3] = 0.5 * np.trace(x.mats[0])
        return m4.element([big])
    phi = from_op_function(m4, m2, padded)
    psi = from_op_function(m4, m2, lambda x: m4.element([np.kron(np.eye(2), x.mats[0])]))
    return omega, phi, psi


def supported_map(blocks: Sequence[int], support: Sequence[int], rng: np.random.Generator) -> UMap:
    """CPU map into make_algebra(blocks) that is faithful on the support blocks and kills the rest."""
    b = make_algebra(list(blocks))
    sub = make_algebra([blocks[i] for i in support])
    return compose(block_projection(b, list(support)), random_cpu_map(make_algebra([2]), sub, rng))


# Behave setup
def before_all(context):
    context.config.setup_logging()
    context.master_seed = int(context.config.userdata.get("seed", 0))


def before_scenario(context, scenario):
    """Fresh seeded generator and timing slots for each scenario."""
    context.rng = np.random.default_rng(context.master_seed)
    context.settings = Settings(seed=context.master_seed)
    context.start_time = None
    context.elapsed = None
    context.failures = []


def after_scenario(context, scenario):
    if getattr(context, "elapsed", None) is not None:
        print(f"{scenario.name}: {context.elapsed:.3f}s")


def after_all(context):
    pass


def start_timer(context):
    context.start_time = time.perf_counter()


def stop_timer(context):
    context.elapsed = time.perf_counter() - context.start_time
