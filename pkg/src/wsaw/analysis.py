"""Scaling diagnostics: penalty tables, tilted integrals, exponent fits.

The objects here connect the sampled distance law and the cone-penalty
coefficients to the quantities controlling the displacement exponent: the
decay factor q(x), the displacement scale mu_x, the integral split used by
the negligibility condition, and the log-log exponent fits themselves.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .errors import DegenerateInputError, MissingValueError


@dataclass
class AxTable:
    """Penalty coefficient per distance bin, with class parameters attached."""

    n: int
    beta: float
    r: float
    a1: float
    a2: float
    edges: np.ndarray
    values: np.ndarray        # nan marks an undefined bin
    counts: np.ndarray        # realizations contributing to each bin
    empty_counts: np.ndarray  # realizations skipped for an empty line class

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def zeta(self):
        """Uniform lower bound beta * a1 on beta * a_x."""
        return self.beta * self.a1

    @property
    def defined(self):
        return ~np.isnan(self.values)

    def bin_of(self, x):
        if not (self.edges[0] <= x <= self.edges[-1]):
            raise MissingValueError(f"x = {x} outside the table range")
        b = int(np.searchsorted(self.edges, x, side="right") - 1)
        return min(max(b, 0), len(self.values) - 1)

    def value_at(self, x):
        v = self.values[self.bin_of(x)]
        if np.isnan(v):
            raise MissingValueError(f"a_x undefined at x = {x}")
        return float(v)

    @classmethod
    def constant(cls, n, beta, a, r=0.5, nbins=None, a1=None, a2=None):
        """Table holding a constant coefficient, handy for fixtures."""
        nbins = nbins or max(int(round(n)), 1)
        edges = np.linspace(0.0, float(n), nbins + 1)
        return cls(
            n=n, beta=beta, r=r,
            a1=a if a1 is None else a1,
            a2=a if a2 is None else a2,
            edges=edges,
            values=np.full(nbins, float(a)),
            counts=np.ones(nbins, dtype=np.int64),
            empty_counts=np.zeros(nbins, dtype=np.int64),
        )


def q_function(ax: AxTable, x):
    """Decay factor exp(-beta a_x n^r / 2) at distance x."""
    a = ax.value_at(x)
    return math.exp(-ax.beta * a * float(ax.n) ** ax.r / 2.0)


def mu_function(ax: AxTable, x):
    """Displacement scale sqrt(beta a_x) * n^(3/4)."""
    a = ax.value_at(x)
    if ax.beta * a <= 0:
        raise ValueError("mu needs beta * a_x > 0")
    return math.sqrt(ax.beta * a) * float(ax.n) ** 0.75


@dataclass
class Radii:
    r1: float
    r2: float
    gamma: float
    epsilon: float


def radii_r1_r2(ax: AxTable, gamma, epsilon):
    """Largest grid distances below gamma * mu_x * n^(-eps) (r1) and below
    gamma * mu_x (r2); 0 when no grid point qualifies."""
    if gamma <= 0 or epsilon < 0:
        raise ValueError("need gamma > 0 and epsilon >= 0")
    shrink = float(ax.n) ** (-epsilon)
    r1 = 0.0
    r2 = 0.0
    for x, a, ok in zip(ax.centers, ax.values, ax.defined):
        if not ok or x > ax.n:
            continue
        mu = math.sqrt(ax.beta * a) * float(ax.n) ** 0.75
        if x <= gamma * mu * shrink:
            r1 = max(r1, float(x))
        if x <= gamma * mu:
            r2 = max(r2, float(x))
    return Radii(r1=r1, r2=r2, gamma=gamma, epsilon=epsilon)


@dataclass
class IntegralReport:
    n: int
    beta: float
    i_n: float                 # integral of x q(x) against the distance law
    g_n: float                 # integral of sqrt(a_x) q(x)
    h_n: float                 # integral of q(x)
    j1: float                  # x <= r1 part of i_n
    j2: float                  # r1 < x < r2 part
    j3: float                  # x >= r2 part
    r1: float
    r2: float
    ratio: float               # i_n / g_n
    reference_band: tuple      # reported bracket for the ratio, not asserted
    covered_mass: float
    skipped_mass: float


def integrals(law, ax: AxTable, gamma=1.0, epsilon=0.0, split=None, c_rho=1.0, m_const=1.0):
    """Stieltjes sums of x q, sqrt(a_x) q and q against the distance law.

    The x-range splits at (r1, r2), either computed from the table via the
    gamma/epsilon rule or supplied explicitly.  Bins with undefined a_x are
    skipped and their mass reported.
    """
    centers = np.asarray(law.centers if hasattr(law, "centers") else law["centers"])
    masses = np.asarray(law.masses if hasattr(law, "masses") else law["masses"])
    if split is None:
        rad = radii_r1_r2(ax, gamma, epsilon)
        r1, r2 = rad.r1, rad.r2
    else:
        r1, r2 = split
    i_n = g_n = h_n = 0.0
    j1 = j2 = j3 = 0.0
    covered = skipped = 0.0
    any_defined = False
    for x, mass in zip(centers, masses):
        if mass == 0.0:
            continue
        try:
            a = ax.value_at(float(x))
        except MissingValueError:
            skipped += float(mass)
            continue
        any_defined = True
        covered += float(mass)
        q = math.exp(-ax.beta * a * float(ax.n) ** ax.r / 2.0)
        i_n += mass * x * q
        g_n += mass * math.sqrt(a) * q
        h_n += mass * q
        if x <= r1:
            j1 += mass * x * q
        elif x < r2:
            j2 += mass * x * q
        else:
            j3 += mass * x * q
    if not any_defined:
        raise DegenerateInputError("no distance bin has a defined penalty value")
    band = (
        gamma * c_rho * math.sqrt(ax.beta) * float(ax.n) ** 0.75 * float(ax.n) ** (-epsilon),
        m_const * math.sqrt(ax.beta) * float(ax.n) ** 0.75,
    )
    return IntegralReport(
        n=ax.n, beta=ax.beta, i_n=i_n, g_n=g_n, h_n=h_n,
        j1=j1, j2=j2, j3=j3, r1=r1, r2=r2,
        ratio=i_n / g_n if g_n > 0 else math.inf,
        reference_band=band, covered_mass=covered, skipped_mass=skipped,
    )


@dataclass
class ConditionDReport:
    rho_n: float
    infinite: bool
    j1: float
    j2: float
    j3: float
    thresholds: dict


def condition_d(report: IntegralReport, rho_star=None):
    """Far-mass ratio (j2 + j3) / j1 with optional threshold predicates."""
    if report.j1 == 0.0:
        rho_n = math.inf
        infinite = True
    else:
        rho_n = (report.j2 + report.j3) / report.j1
        infinite = False
    stars = []
    if rho_star is not None:
        stars = list(rho_star) if np.iterable(rho_star) else [rho_star]
    thresholds = {float(s): bool(rho_n >= s) for s in stars}
    return ConditionDReport(
        rho_n=rho_n, infinite=infinite,
        j1=report.j1, j2=report.j2, j3=report.j3,
        thresholds=thresholds,
    )


def gaussian_tail_reference(n, x):
    """Reflection-style reference tail 2 exp(-x^2 / 2n), capped at one."""
    if n < 1 or x < 0:
        raise ValueError("need n >= 1 and x >= 0")
    return min(1.0, 2.0 * math.exp(-x * x / (2.0 * n)))


@dataclass
class BoundPanel:
    khat: float                # i_n / (sqrt(beta) n^(3/4) g_n)
    quotient: float            # g_n / h_n
    quotient_lo: float
    quotient_hi: float
    quotient_in_bounds: bool
    report: IntegralReport


def bound_panel(law, ax: AxTable, gamma=1.0, epsilon=0.0, split=None):
    """Empirical displacement constant and the sqrt(a1) <= g/h <= sqrt(a2) check."""
    if not (ax.beta > 0) or math.isinf(ax.beta):
        raise DegenerateInputError("the bound panel needs finite beta > 0")
    rep = integrals(law, ax, gamma=gamma, epsilon=epsilon, split=split)
    if rep.g_n <= 0 or rep.h_n <= 0:
        raise DegenerateInputError("integrals vanished, no bound to report")
    khat = rep.i_n / (math.sqrt(ax.beta) * float(ax.n) ** 0.75 * rep.g_n)
    quotient = rep.g_n / rep.h_n
    lo, hi = math.sqrt(ax.a1), math.sqrt(ax.a2)
    slack = 1e-9 * max(1.0, hi)
    return BoundPanel(
        khat=khat, quotient=quotient,
        quotient_lo=lo, quotient_hi=hi,
        quotient_in_bounds=bool(lo - slack <= quotient <= hi + slack),
        report=rep,
    )


@dataclass
class ExponentFit:
    ns: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    residual_norm: float
    half_width: float

    def predicted(self):
        return np.exp(self.intercept) * self.ns ** self.slope


def fit_exponent(points):
    """Least-squares slope of log(value) against log(n).

    The half width is a 95 percent confidence radius from the residual
    variance; it collapses to zero for exact power laws.
    """
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError("exponent fits need at least three points")
    ns = np.array([p[0] for p in pts])
    vs = np.array([p[1] for p in pts])
    if np.any(ns <= 0) or np.any(vs <= 0):
        raise ValueError("exponent fits need positive abscissas and values")
    lx = np.log(ns)
    ly = np.log(vs)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    rss = float(np.dot(resid, resid))
    df = len(pts) - 2
    sxx = float(np.dot(lx - lx.mean(), lx - lx.mean()))
    if df > 0 and rss > 1e-30 and sxx > 0:
        se = math.sqrt(rss / df / sxx)
        half = float(stats.t.ppf(0.975, df)) * se
    else:
        half = 0.0
    return ExponentFit(
        ns=ns, values=vs, slope=float(slope), intercept=float(intercept),
        residual_norm=math.sqrt(rss), half_width=half,
    )


def nu_formula(d):
    """Predicted displacement exponent: 1 in d = 1, else max(1/2, 1/4 + 1/d)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if d == 1:
        return Fraction(1)
    return max(Fraction(1, 2), Fraction(1, 4) + Fraction(1, d))


def write_ax_csv(table: AxTable, fp):
    fp.write("x_bin,a_x,count\n")
    centers = table.centers
    for b in range(len(table.values)):
        v = table.values[b]
        fp.write(f"{float(centers[b])!r},{float(v)!r},{int(table.counts[b])}\n")
