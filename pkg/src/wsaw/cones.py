"""The self-intersection point process and its cone decomposition.

Each multiply visited site of a planar path becomes an atom carrying
m*(m-1)/2 units of mass.  A fan of equally spaced half-lines from the origin
splits the total mass into cones by nearest-ray assignment; distance ties
share an atom's mass equally, so per-line masses are exact rationals and the
cone masses always re-sum to the silt count.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInputError, UndefinedEstimateError
from .rng import SeededSource
from .walk import LatticePath

TIE_TOL = 1e-9


@dataclass
class IntersectionProcess:
    """Finite point process of self-intersection atoms of one path."""

    n: int
    d: int
    atoms: dict        # site tuple -> integer multiplicity m*(m-1)/2

    @property
    def total(self):
        return sum(self.atoms.values())

    def positions(self):
        if not self.atoms:
            return np.zeros((0, self.d))
        return np.array(sorted(self.atoms.keys()), dtype=np.float64)


def extract_process(path: LatticePath):
    """Atoms of the path's self-intersection process, total mass = silt."""
    sites = path.sites()
    uniq, counts = np.unique(sites, axis=0, return_counts=True)
    atoms = {}
    for row, m in zip(uniq, counts):
        if m >= 2:
            atoms[tuple(int(v) for v in row)] = int(m) * (int(m) - 1) // 2
    return IntersectionProcess(n=path.n, d=path.d, atoms=atoms)


@dataclass(frozen=True)
class TestLineSet:
    """count half-lines from the origin at angles 2*pi*k/count."""

    __test__ = False  # domain object, not a pytest case

    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("need at least one test line")

    @property
    def angles(self):
        return 2.0 * math.pi * np.arange(self.count) / self.count

    @property
    def unit_vectors(self):
        a = self.angles
        return np.column_stack([np.cos(a), np.sin(a)])

    @classmethod
    def for_walk_length(cls, n, v=1.0):
        """Default density: ceil(v * sqrt(n)) lines."""
        if n < 1 or v <= 0:
            raise ValueError("need n >= 1 and v > 0")
        return cls(int(math.ceil(v * math.sqrt(n))))


@dataclass
class ConeDecomposition:
    """Per-line cone masses of one process; exact rationals."""

    n: int
    lines: TestLineSet
    masses: list                  # Fraction per line
    total: int                    # the process total, equals sum(masses)

    @property
    def masses_float(self):
        return np.array([float(m) for m in self.masses])

    def validate(self):
        assert sum(self.masses) == self.total, "cone masses must re-sum to the silt count"
        assert all(m >= 0 for m in self.masses)
        return True


def cone_decompose(process: IntersectionProcess, lines: TestLineSet, tie_tol=TIE_TOL):
    """Assign every atom's mass to its nearest half-line, splitting ties equally.

    The point-to-ray distance is |p| when the ray points away from p and the
    orthogonal distance otherwise.  Ties within a relative tolerance share
    the atom's integer mass as equal fractions, so conservation is exact.
    """
    if process.d != 2:
        raise ValueError("cone decomposition is defined for planar processes")
    masses = [Fraction(0) for _ in range(lines.count)]
    if process.atoms:
        u = lines.unit_vectors
        pts = np.array(list(process.atoms.keys()), dtype=np.float64)
        mults = list(process.atoms.values())
        norms2 = (pts * pts).sum(axis=1)
        dots = pts @ u.T
        proj = np.maximum(dots, 0.0)
        dist2 = norms2[:, None] - proj * proj
        for a in range(len(pts)):
            row = dist2[a]
            cut = row.min() + tie_tol * max(norms2[a], 1.0)
            tied = np.nonzero(row <= cut)[0]
            if len(tied) == 1:
                masses[tied[0]] += mults[a]
            else:
                share = Fraction(mults[a], len(tied))
                for k in tied:
                    masses[k] += share
    dec = ConeDecomposition(n=process.n, lines=lines, masses=masses, total=process.total)
    dec.validate()
    return dec


# ---------------------------------------------------------------------------
# line classes


@dataclass
class LineClassification:
    """Index sets of the doubled cone masses against n^r scales."""

    n: int
    a1: float
    a2: float
    delta: float
    r: float
    half: list          # 2|C| in [a1 n^(1/2), a2 n^(1/2)]
    band: list          # widened class, exponent within delta of 1/2
    minus: list         # positive but below the widened class
    plus: list          # above the widened class
    empty: list         # zero mass
    at_r: list          # 2|C| in [a1 n^r, a2 n^r]


def classify_lines(dec: ConeDecomposition, a1, a2, delta, r=0.5):
    if not (0 < a1 <= a2):
        raise ValueError("need 0 < a1 <= a2")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    n = dec.n
    doubled = 2.0 * dec.masses_float
    lo_band = a1 * n ** (0.5 - delta)
    hi_band = a2 * n ** (0.5 + delta)
    half, band, minus, plus, empty, at_r = [], [], [], [], [], []
    for k, v in enumerate(doubled):
        if v == 0.0:
            empty.append(k)
        elif v < lo_band:
            minus.append(k)
        elif v <= hi_band:
            band.append(k)
        else:
            plus.append(k)
        if a1 * n ** 0.5 <= v <= a2 * n ** 0.5:
            half.append(k)
        if a1 * n ** r <= v <= a2 * n ** r:
            at_r.append(k)
    return LineClassification(
        n=n, a1=a1, a2=a2, delta=delta, r=r,
        half=half, band=band, minus=minus, plus=plus, empty=empty, at_r=at_r,
    )


# ---------------------------------------------------------------------------
# banded shapes


@dataclass
class ShapeBand:
    r: float
    lo: float          # lower doubled-mass edge (0 means open at zero)
    hi: float
    mass: float        # sum of |C_L| over qualifying lines
    qualifies: bool


@dataclass
class ShapeReport:
    n: int
    total: int
    threshold: float
    bands: list
    detected: list     # r values of qualifying bands
    circular: bool     # some qualifying band straddles r = 1/2
    a1: float
    a2: float
    delta: float
    rho: float


def shape_grid(delta):
    if delta <= 0:
        raise ValueError("the default band grid needs delta > 0")
    ticks = int(math.floor(1.0 / delta + 1e-9))
    return [k * delta for k in range(ticks + 1)]


def detect_shapes(dec: ConeDecomposition, a1, a2, delta, rho, grid=None):
    """Scan exponent bands [r, r + delta] for essential cone-mass content.

    A band qualifies when its lines carry at least half of total^(1 - rho).
    The lowest band (r = 0) keeps an open lower edge at zero so every
    positive mass belongs to some band and a qualifying band always exists
    for a nonempty process.
    """
    if dec.total == 0:
        raise DegenerateInputError("shape detection needs a nonempty process")
    if not (0 < a1 <= a2):
        raise ValueError("need 0 < a1 <= a2")
    if grid is None:
        grid = shape_grid(delta)
    n = dec.n
    threshold = 0.5 * dec.total ** (1.0 - rho)
    doubled = 2.0 * dec.masses_float
    masses = dec.masses_float
    bands = []
    detected = []
    circular = False
    for r in grid:
        lo = 0.0 if r == 0 else a1 * n ** r
        hi = a2 * n ** (r + delta)
        sel = (doubled > 0.0) & (doubled >= lo) & (doubled <= hi)
        mass = float(masses[sel].sum())
        ok = mass >= threshold
        bands.append(ShapeBand(r=r, lo=lo, hi=hi, mass=mass, qualifies=ok))
        if ok:
            detected.append(r)
            if r <= 0.5 <= r + delta:
                circular = True
    return ShapeReport(
        n=n, total=dec.total, threshold=threshold, bands=bands,
        detected=detected, circular=circular, a1=a1, a2=a2, delta=delta, rho=rho,
    )


# ---------------------------------------------------------------------------
# the cone-penalty coefficient table


def estimate_ax(ens, law, lines: TestLineSet, a1, a2, beta, r=0.5, member_masses=None):
    """Estimate the per-distance penalty coefficient a_x from cone masses.

    For every distance bin the within-realization mean of exp(-beta |C_L|)
    over lines of class at exponent r is averaged with the ensemble weights
    and inverted through exp(-beta a_x n^r / 2).  Realizations whose class
    is empty carry no information about the class penalty; they are excluded
    from the bin average and counted in the table's diagnostics.
    """
    from .analysis import AxTable

    if not (0 < beta < math.inf):
        raise ValueError("the penalty estimator needs finite beta > 0")
    if not (0 < a1 <= a2):
        raise ValueError("need 0 < a1 <= a2")
    if member_masses is None:
        if ens.paths is None:
            raise ValueError("estimate_ax needs retained paths or precomputed masses")
        member_masses = [cone_decompose(extract_process(p), lines).masses_float for p in ens.paths]
    n = ens.config.n
    scale = float(n) ** r
    lo, hi = a1 * scale, a2 * scale
    nbins = len(law.edges) - 1
    values = np.full(nbins, np.nan)
    counts = np.zeros(nbins, dtype=np.int64)
    empty_counts = np.zeros(nbins, dtype=np.int64)
    for b in range(nbins):
        num = 0.0
        den = 0.0
        for idx in law.bin_members[b]:
            doubled = 2.0 * member_masses[idx]
            sel = (doubled >= lo) & (doubled <= hi)
            if not sel.any():
                empty_counts[b] += 1
                continue
            inner = float(np.exp(-beta * member_masses[idx][sel]).mean())
            w = float(ens.weight[idx])
            num += w * inner
            den += w
            counts[b] += 1
        if den > 0 and num > 0:
            values[b] = -2.0 * math.log(num / den) / (beta * scale)
    return AxTable(
        n=n, beta=beta, r=r, a1=a1, a2=a2,
        edges=np.array(law.edges, dtype=np.float64),
        values=values, counts=counts, empty_counts=empty_counts,
    )


# ---------------------------------------------------------------------------
# Palm estimators and the Poisson reference process


@dataclass(frozen=True)
class Box:
    """Axis-aligned window."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("window corners must share a dimension")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("window must satisfy lo <= hi")

    @property
    def d(self):
        return len(self.lo)

    def volume(self):
        return float(np.prod([h - l for l, h in zip(self.lo, self.hi)]))

    def contains(self, points):
        pts = np.asarray(points, dtype=np.float64)
        lo = np.array(self.lo)
        hi = np.array(self.hi)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def interior_mask(self, points, margin):
        """Points farther than margin from every face of the box."""
        pts = np.asarray(points, dtype=np.float64)
        lo = np.array(self.lo) + margin
        hi = np.array(self.hi) - margin
        return np.all((pts > lo) & (pts < hi), axis=1)


def _minus_sampled_centers(points, window: Box, r):
    pts = np.asarray(points, dtype=np.float64)
    if r <= 0:
        raise ValueError("radius must be positive")
    if len(pts) == 0 or not window.contains(pts).any():
        raise UndefinedEstimateError("no points fall inside the window")
    mask = window.interior_mask(pts, r)
    if not mask.any():
        raise UndefinedEstimateError("minus-sampling removed every candidate center")
    return pts, np.nonzero(mask)[0]


def palm_empty_ball(points, window: Box, r):
    """Fraction of (minus-sampled) points whose nearest neighbour is >= r away.

    Estimates the Palm probability that the ball of radius r around a typical
    point holds no other point; for a Poisson process of intensity lam this
    is exp(-lam * pi * r^2).
    """
    pts, centers = _minus_sampled_centers(points, window, r)
    if len(pts) == 1:
        return PalmEmptyBall(
            fraction=1.0, center_count=1, isolated_count=1, radius=r,
            indicators=np.ones(1), center_indices=centers,
        )
    tree = cKDTree(pts)
    dist, _ = tree.query(pts[centers], k=2)
    flags = dist[:, 1] >= r
    isolated = int(np.count_nonzero(flags))
    return PalmEmptyBall(
        fraction=isolated / len(centers),
        center_count=len(centers),
        isolated_count=isolated,
        radius=r,
        indicators=flags.astype(np.float64),
        center_indices=centers,
    )


@dataclass
class PalmEmptyBall:
    fraction: float
    center_count: int
    isolated_count: int
    radius: float
    indicators: np.ndarray = None
    center_indices: np.ndarray = None


@dataclass
class PalmMarkedPoints:
    weighted_sum: float
    average: float
    center_count: int
    band_count: int
    contributions: np.ndarray
    center_indices: np.ndarray = None


def palm_marked_points(points, window: Box, r, beta, band):
    """Sum exp(-beta * neighbour count within r) over centers whose count
    falls in the inclusive band [s1, s2], plus the count-normalized average."""
    s1, s2 = band
    if s1 > s2 or s1 < 0:
        raise ValueError("band must satisfy 0 <= s1 <= s2")
    pts, centers = _minus_sampled_centers(points, window, r)
    tree = cKDTree(pts)
    neigh = np.array(tree.query_ball_point(pts[centers], r, return_length=True)) - 1
    in_band = (neigh >= s1) & (neigh <= s2)
    contrib = np.where(in_band, np.exp(-beta * neigh.astype(np.float64)), 0.0)
    total = math.fsum(contrib.tolist())
    return PalmMarkedPoints(
        weighted_sum=total,
        average=total / len(centers),
        center_count=len(centers),
        band_count=int(in_band.sum()),
        contributions=contrib,
        center_indices=centers,
    )


def palm_marked_lines(process: IntersectionProcess, lines: TestLineSet, subset, beta):
    """Sum of exp(-beta |C_L|) over a chosen subset of test lines."""
    dec = cone_decompose(process, lines)
    masses = dec.masses_float
    for k in subset:
        if not (0 <= k < lines.count):
            raise ValueError(f"line index {k} out of range")
    return float(math.fsum(math.exp(-beta * masses[k]) for k in subset))


def poisson_points(intensity, window: Box, src: SeededSource):
    """Homogeneous Poisson sample on the window: Poisson count, uniform spread."""
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    rng = src.generator()
    vol = window.volume()
    count = int(rng.poisson(intensity * vol)) if vol > 0 else 0
    lo = np.array(window.lo, dtype=np.float64)
    hi = np.array(window.hi, dtype=np.float64)
    return lo + rng.random((count, window.d)) * (hi - lo)


# ---------------------------------------------------------------------------
# delimited output


def write_cone_csv(dec: ConeDecomposition, classification: LineClassification, fp):
    def class_of(k):
        if k in classification.empty:
            return "empty"
        if k in classification.minus:
            return "minus"
        if k in classification.band:
            return "band"
        return "plus"

    angles = dec.lines.angles
    fp.write("line_index,angle,mass,class\n")
    for k in range(dec.lines.count):
        fp.write(f"{k},{float(angles[k])!r},{float(dec.masses[k])!r},{class_of(k)}\n")
