"""Portable deterministic random numbers for experiment reproducibility.

A fixed 64-bit linear congruential generator is used instead of numpy's
generators so that the exact error/right-hand-side vectors used by the
experiments can be reproduced from a seed in any language:

    state_{k+1} = (6364136223846793005 * state_k + 1442695040888963407) mod 2^64

and each draw maps the top 53 bits of the new state to a uniform value in
[-1, 1):

    u = ((state >> 11) / 2^53) * 2 - 1

(The multiplier/increment pair is Knuth's MMIX LCG.)
"""
import numpy as np

_MULT = 6364136223846793005
_INC = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg:
    """64-bit LCG yielding uniforms on [-1, 1)."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_uniform(self):
        """Advance once and return a float in [-1, 1)."""
        self.state = (_MULT * self.state + _INC) & _MASK
        return ((self.state >> 11) / float(1 << 53)) * 2.0 - 1.0

    def uniform_vector(self, n):
        """Return an ndarray of n consecutive draws."""
        out = np.empty(n)
        for i in range(n):
            out[i] = self.next_uniform()
        return out


def seeded_vector(n, seed):
    """One-shot: n uniforms on [-1, 1) from a fresh generator."""
    return Lcg(seed).uniform_vector(n)
