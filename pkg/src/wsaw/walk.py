"""Simple random walk paths on the integer lattice.

Paths are stored as step-direction sequences (one byte per step in memory,
two bits per step on the wire for d=2) and expanded to site sequences on
demand.  Direction k moves along axis k // 2, in the positive sense when k
is even; k ^ 1 is the reverse step.
"""

import base64
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .rng import SeededSource

# refuse absurd path lengths before allocating anything
HARD_LENGTH_CAP = 1 << 22

_DIR_CACHE = {}


def directions(d):
    """The 2d unit steps of Z^d as a (2d, d) int array."""
    if d not in _DIR_CACHE:
        m = np.zeros((2 * d, d), dtype=np.int64)
        for axis in range(d):
            m[2 * axis, axis] = 1
            m[2 * axis + 1, axis] = -1
        m.flags.writeable = False
        _DIR_CACHE[d] = m
    return _DIR_CACHE[d]


def _check_dims(n, d):
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if n < 0:
        raise ValueError(f"length must be >= 0, got {n}")
    if n > HARD_LENGTH_CAP:
        raise BudgetExceededError(f"length {n} exceeds hard cap {HARD_LENGTH_CAP}")


class LatticePath:
    """A nearest-neighbour path on Z^d starting at the origin."""

    __slots__ = ("d", "steps")

    def __init__(self, steps, d):
        steps = np.asarray(steps, dtype=np.uint8)
        _check_dims(len(steps), d)
        if steps.size and steps.max() >= 2 * d:
            raise ValueError("step direction out of range for dimension")
        self.d = int(d)
        self.steps = steps
        self.steps.flags.writeable = False

    @property
    def n(self):
        return len(self.steps)

    def sites(self):
        """Site sequence (n+1, d), origin first."""
        out = np.zeros((self.n + 1, self.d), dtype=np.int64)
        if self.n:
            np.cumsum(directions(self.d)[self.steps], axis=0, out=out[1:])
        return out

    @classmethod
    def from_sites(cls, sites):
        sites = np.asarray(sites, dtype=np.int64)
        if sites.ndim != 2 or len(sites) < 1:
            raise ValueError("sites must be a non-empty (n+1, d) array")
        if np.any(sites[0] != 0):
            raise ValueError("path must start at the origin")
        d = sites.shape[1]
        diffs = np.diff(sites, axis=0)
        if len(diffs) and np.any(np.abs(diffs).sum(axis=1) != 1):
            raise ValueError("consecutive sites must be lattice neighbours")
        axes = np.argmax(np.abs(diffs), axis=1)
        signs = diffs[np.arange(len(diffs)), axes]
        steps = (2 * axes + (signs < 0)).astype(np.uint8)
        return cls(steps, d)

    def __eq__(self, other):
        return (
            isinstance(other, LatticePath)
            and self.d == other.d
            and self.steps.shape == other.steps.shape
            and bool(np.all(self.steps == other.steps))
        )

    def __repr__(self):
        return f"LatticePath(d={self.d}, n={self.n})"


def sample_srw(n, d, src: SeededSource):
    """Draw one uniform simple random walk of length n in Z^d."""
    _check_dims(n, d)
    rng = src.generator()
    return LatticePath(rng.integers(0, 2 * d, size=n, dtype=np.uint8), d)


def sample_srw_steps(count, n, d, src: SeededSource):
    """Step matrix (count, n) for a batch of independent walks."""
    _check_dims(n, d)
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = src.generator()
    return rng.integers(0, 2 * d, size=(count, n), dtype=np.uint8)


def site_keys(sites, span):
    """Pack integer sites with |coord| <= span into scalar int64 keys."""
    sites = np.asarray(sites, dtype=np.int64)
    d = sites.shape[-1]
    base = 2 * int(span) + 1
    if d * np.log2(base) > 62:
        raise OverflowError("coordinates too wide to pack into int64")
    keys = sites[..., 0] + span
    for axis in range(1, d):
        keys = keys * base + (sites[..., axis] + span)
    return keys


def _occupancy_counts(path):
    sites = path.sites()
    try:
        keys = site_keys(sites, max(path.n, 1))
        _, counts = np.unique(keys, return_counts=True)
    except OverflowError:
        _, counts = np.unique(sites, axis=0, return_counts=True)
    return counts


def silt_count(path):
    """Number of self-intersection pairs, via the occupancy formula.

    A site visited m times contributes m*(m-1)/2 ordered-index pairs, so the
    sum over sites equals the pairwise count over 0 <= i < j <= n.
    """
    counts = _occupancy_counts(path).astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def endpoint_distance(path):
    """Euclidean distance from origin to the final site."""
    end = path.sites()[-1]
    return float(np.sqrt((end * end).sum()))


def hull_radius(path):
    """Radius of the path's convex hull read from the origin, max_k |S_k|."""
    sites = path.sites()
    return float(np.sqrt((sites * sites).sum(axis=1).max()))


def insert_repetitions(path, positions):
    """Insert an immediate backtrack-and-return at each position, then truncate.

    A repetition at site index j appends, right after step j, the reverse of
    step j and step j again; the walk revisits S_{j-1} and S_j before moving
    on.  The result is truncated back to the original length.
    """
    n = path.n
    positions = sorted(int(j) for j in positions)
    for j in positions:
        if not (1 <= j <= n - 1):
            raise ValueError(f"repetition position {j} outside interior 1..{n - 1}")
    for a, b in zip(positions, positions[1:]):
        if b == a:
            raise ValueError("repetition positions must be distinct")
        if b - a < 2:
            raise ValueError("repetition positions must sit at least 2 apart")
    if not positions:
        return LatticePath(path.steps.copy(), path.d)
    pieces = []
    prev = 0
    for j in positions:
        pieces.append(path.steps[prev:j])
        pieces.append(np.array([path.steps[j - 1] ^ 1, path.steps[j - 1]], dtype=np.uint8))
        prev = j
    pieces.append(path.steps[prev:])
    return LatticePath(np.concatenate(pieces)[:n], path.d)


# ---------------------------------------------------------------------------
# batch observables, shared by the exact census and the samplers


def batch_observables(steps, d, chunk_rows=None):
    """Per-row (silt, endpoint distance, hull radius) for a step matrix."""
    steps = np.asarray(steps, dtype=np.uint8)
    count, n = steps.shape
    if chunk_rows is None:
        chunk_rows = max(1, (1 << 24) // max(n + 1, 1))
    j_out = np.empty(count, dtype=np.int64)
    chi_out = np.empty(count, dtype=np.float64)
    r_out = np.empty(count, dtype=np.float64)
    dirs = directions(d)
    for lo in range(0, count, chunk_rows):
        hi = min(lo + chunk_rows, count)
        block = steps[lo:hi]
        sites = np.zeros((hi - lo, n + 1, d), dtype=np.int64)
        np.cumsum(dirs[block], axis=1, out=sites[:, 1:])
        norms2 = (sites * sites).sum(axis=2)
        chi_out[lo:hi] = np.sqrt(norms2[:, -1])
        r_out[lo:hi] = np.sqrt(norms2.max(axis=1))
        keys = site_keys(sites, max(n, 1))
        keys.sort(axis=1)
        j_out[lo:hi] = row_silt_from_sorted_keys(keys)
    return j_out, chi_out, r_out


def row_silt_from_sorted_keys(keys):
    """Silt count per row of an already sorted key matrix."""
    rows, m = keys.shape
    eq = keys[:, 1:] == keys[:, :-1]
    run = np.zeros(rows, dtype=np.int64)
    total = np.zeros(rows, dtype=np.int64)
    for col in range(m - 1):
        run = (run + 1) * eq[:, col]
        total += run
    return total


# ---------------------------------------------------------------------------
# serialization: "<dimension> <length> <base64 packed steps>" per line


def pack_steps(steps, d):
    steps = np.asarray(steps, dtype=np.uint8)
    if d == 2:
        pad = (-len(steps)) % 4
        padded = np.concatenate([steps, np.zeros(pad, dtype=np.uint8)])
        quads = padded.reshape(-1, 4)
        packed = quads[:, 0] | quads[:, 1] << 2 | quads[:, 2] << 4 | quads[:, 3] << 6
        return packed.astype(np.uint8).tobytes()
    return steps.tobytes()


def unpack_steps(blob, n, d):
    if d == 2:
        packed = np.frombuffer(blob, dtype=np.uint8)
        quads = np.empty((len(packed), 4), dtype=np.uint8)
        quads[:, 0] = packed & 3
        quads[:, 1] = packed >> 2 & 3
        quads[:, 2] = packed >> 4 & 3
        quads[:, 3] = packed >> 6 & 3
        return quads.reshape(-1)[:n].copy()
    return np.frombuffer(blob, dtype=np.uint8)[:n].copy()


def path_record(path):
    b64 = base64.b64encode(pack_steps(path.steps, path.d)).decode("ascii")
    return f"{path.d} {path.n} {b64}"


def path_from_record(line):
    d_str, n_str, b64 = line.split()
    d, n = int(d_str), int(n_str)
    return LatticePath(unpack_steps(base64.b64decode(b64), n, d), d)


def write_paths(paths, fp):
    for p in paths:
        fp.write(path_record(p) + "\n")


def read_paths(fp):
    return [path_from_record(line) for line in fp if line.strip()]
