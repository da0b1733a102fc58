"""Order-independent seed derivation.

Every random draw in the package is keyed by a tuple of non-negative
integers hashed together with the master seed, so results never depend on
the order in which work is scheduled.
"""

import numpy as np


def derive_seed(master: int, *keys: int) -> int:
    """Hash ``(master, *keys)`` into a 63-bit seed."""
    entropy = [int(master) & 0xFFFFFFFFFFFFFFFF] + [int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def nbar_key(nbar: float) -> int:
    """Integer key for a mean photon number, stable to 1e-9."""
    return int(round(float(nbar) * 1_000_000_000))
