"""Weakly self-avoiding walk ensembles.

The target law tilts the uniform walk measure by exp(-beta * silt).  Small n
is handled exactly by full enumeration; beyond that there is an importance
reweighting sampler (exact but weight-degenerate for large beta * n) and a
Metropolis chain mixing pivot and local kink moves (the workhorse).
"""

import itertools
import json
import math
from base64 import b64decode, b64encode
from dataclasses import dataclass, field, replace

import numpy as np

from . import census
from .errors import ChainInitializationError, DegenerateEnsembleError
from .rng import SeededSource
from .walk import (
    LatticePath,
    batch_observables,
    directions,
    pack_steps,
    sample_srw_steps,
    site_keys,
    unpack_steps,
)

ESS_FLOOR_DEFAULT = 100.0


def default_window(beta, n, d=2):
    """Silt window [b1*n, b2*n] with beta * b2 = ln(2d), b1 = b2 / 20."""
    if beta <= 0 or not math.isfinite(beta):
        raise ValueError("window defaults need finite beta > 0")
    b2 = math.log(2 * d) / beta
    return (b2 / 20.0 * n, b2 * n)


@dataclass
class McmcParams:
    burn_sweeps: int = 32
    thin_moves: int = 16
    pivot_fraction: float = 0.5
    init_attempts: int = 64

    def __post_init__(self):
        if self.burn_sweeps < 0 or self.thin_moves < 1:
            raise ValueError("burn_sweeps >= 0 and thin_moves >= 1 required")
        if not (0.0 <= self.pivot_fraction <= 1.0):
            raise ValueError("pivot_fraction must lie in [0, 1]")


@dataclass
class EnsembleConfig:
    n: int
    beta: float
    samples: int
    d: int = 2
    sampler: str = "mcmc"
    window: tuple = None          # (lo, hi) bounds on silt, absolute counts
    seed: SeededSource = field(default_factory=lambda: SeededSource(0))
    mcmc: McmcParams = field(default_factory=McmcParams)
    retain_paths: bool = False
    ess_floor: float = ESS_FLOOR_DEFAULT

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.samples < 1:
            raise ValueError("need n >= 1, d >= 1, samples >= 1")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.sampler not in ("mcmc", "reweight"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.window is not None:
            lo, hi = self.window
            if not (0 <= lo <= hi):
                raise ValueError("window must satisfy 0 <= lo <= hi")
            if math.isinf(self.beta) and lo > 0:
                raise ValueError("a positive window is incompatible with beta = inf")

    def to_dict(self):
        return {
            "n": self.n,
            "beta": "inf" if math.isinf(self.beta) else self.beta,
            "samples": self.samples,
            "d": self.d,
            "sampler": self.sampler,
            "window": list(self.window) if self.window is not None else None,
            "seed": self.seed.seed,
            "stream": self.seed.stream,
            "mcmc": {
                "burn_sweeps": self.mcmc.burn_sweeps,
                "thin_moves": self.mcmc.thin_moves,
                "pivot_fraction": self.mcmc.pivot_fraction,
                "init_attempts": self.mcmc.init_attempts,
            },
            "retain_paths": self.retain_paths,
            "ess_floor": self.ess_floor,
        }

    @classmethod
    def from_dict(cls, data):
        beta = data["beta"]
        if beta == "inf":
            beta = math.inf
        return cls(
            n=data["n"],
            beta=beta,
            samples=data["samples"],
            d=data["d"],
            sampler=data["sampler"],
            window=tuple(data["window"]) if data.get("window") else None,
            seed=SeededSource(data["seed"], data.get("stream", 0)),
            mcmc=McmcParams(**data["mcmc"]),
            retain_paths=data.get("retain_paths", False),
            ess_floor=data.get("ess_floor", ESS_FLOOR_DEFAULT),
        )


@dataclass
class WeightedEnsemble:
    """Sampled paths summarized by (silt, endpoint distance, hull radius, weight)."""

    config: EnsembleConfig
    silt: np.ndarray
    chi: np.ndarray
    hull: np.ndarray
    weight: np.ndarray
    paths: list = None
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.silt)

    def total_weight(self):
        return math.fsum(self.weight.tolist())

    def ess(self):
        s = math.fsum(self.weight.tolist())
        s2 = math.fsum((self.weight * self.weight).tolist())
        return s * s / s2 if s2 > 0 else 0.0

    def validate(self):
        m = len(self.silt)
        assert len(self.chi) == len(self.hull) == len(self.weight) == m
        assert np.all(self.weight > 0), "retained records must carry positive weight"
        assert np.all(self.silt >= 0)
        if self.config.window is not None:
            lo, hi = self.config.window
            assert np.all((self.silt >= lo) & (self.silt <= hi)), "window violated"
        if self.paths is not None:
            assert len(self.paths) == m
        return True

    # -- persistence: JSON header line, then one record per sample ----------

    def save(self, fp):
        header = dict(self.config.to_dict())
        header["diagnostics"] = _json_safe(self.diagnostics)
        header["has_paths"] = self.paths is not None
        fp.write(json.dumps(header, sort_keys=True) + "\n")
        has_paths = self.paths is not None
        for i in range(len(self.silt)):
            rec = f"{int(self.silt[i])},{float(self.chi[i])!r},{float(self.hull[i])!r},{float(self.weight[i])!r}"
            if has_paths:
                rec += "," + b64encode(pack_steps(self.paths[i].steps, self.config.d)).decode()
            fp.write(rec + "\n")

    @classmethod
    def load(cls, fp):
        header = json.loads(fp.readline())
        has_paths = header.pop("has_paths", False)
        diagnostics = header.pop("diagnostics", {})
        config = EnsembleConfig.from_dict(header)
        silt, chi, hull, weight, paths = [], [], [], [], [] if has_paths else None
        for line in fp:
            if not line.strip():
                continue
            parts = line.strip().split(",")
            silt.append(int(parts[0]))
            chi.append(float(parts[1]))
            hull.append(float(parts[2]))
            weight.append(float(parts[3]))
            if has_paths:
                paths.append(LatticePath(unpack_steps(b64decode(parts[4]), config.n, config.d), config.d))
        return cls(
            config=config,
            silt=np.array(silt, dtype=np.int64),
            chi=np.array(chi),
            hull=np.array(hull),
            weight=np.array(weight),
            paths=paths,
            diagnostics=diagnostics,
        )


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    return obj


# ---------------------------------------------------------------------------
# exact expectations by full enumeration


@dataclass
class ExactMoments:
    n: int
    d: int
    beta: float
    partition: float
    mean_chi: float
    mean_chi2: float


def _tilt(beta, j):
    if math.isinf(beta):
        return 1.0 if j == 0 else 0.0
    return math.exp(-beta * j)


def exact_expectations(n, d, beta, max_walks=census.DEFAULT_WALK_BUDGET):
    """Partition value and tilted endpoint moments over all (2d)^n walks."""
    joint = census.exact_joint_distribution(n, d, max_walks)
    total = (2 * d) ** n
    z = math.fsum(cnt * _tilt(beta, j) for (j, _), cnt in joint.items())
    s1 = math.fsum(cnt * _tilt(beta, j) * math.sqrt(r2) for (j, r2), cnt in joint.items())
    s2 = math.fsum(cnt * _tilt(beta, j) * r2 for (j, r2), cnt in joint.items())
    if z == 0:
        raise DegenerateEnsembleError("no walk carries weight at this beta")
    return ExactMoments(n, d, beta, z / total, s1 / z, s2 / z)


# ---------------------------------------------------------------------------
# importance reweighting


def sample_reweighted(config: EnsembleConfig):
    """Draw uniform walks and weight each by exp(-beta * silt).

    With a window set, records outside [lo, hi] are dropped; the retained
    weights define the windowed tilted law.
    """
    cfg = config
    steps = sample_srw_steps(cfg.samples, cfg.n, cfg.d, cfg.seed)
    silt, chi, hull = batch_observables(steps, cfg.d)
    if math.isinf(cfg.beta):
        weight = (silt == 0).astype(np.float64)
    elif cfg.beta == 0:
        weight = np.ones(cfg.samples)
    else:
        weight = np.exp(-cfg.beta * silt.astype(np.float64))
    keep = weight > 0
    dropped_window = 0
    if cfg.window is not None:
        lo, hi = cfg.window
        inside = (silt >= lo) & (silt <= hi)
        dropped_window = int(np.count_nonzero(keep & ~inside))
        keep &= inside
    idx = np.nonzero(keep)[0]
    if idx.size == 0:
        raise DegenerateEnsembleError("no sample retained any weight")
    paths = [LatticePath(steps[i], cfg.d) for i in idx] if cfg.retain_paths else None
    ens = WeightedEnsemble(
        config=cfg,
        silt=silt[idx],
        chi=chi[idx],
        hull=hull[idx],
        weight=weight[idx],
        paths=paths,
    )
    ess = ens.ess()
    ens.diagnostics = {
        "sampler": "reweight",
        "attempts": cfg.samples,
        "retained": int(idx.size),
        "window_dropped": dropped_window,
        "ess": ess,
        "ess_warning": bool(ess < cfg.ess_floor),
        "window": list(cfg.window) if cfg.window else None,
    }
    return ens


# ---------------------------------------------------------------------------
# pivot + kink Metropolis chain


def _symmetries(d):
    """Nonidentity signed permutation matrices of Z^d."""
    mats = []
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            m = np.zeros((d, d), dtype=np.int64)
            for row, (col, s) in enumerate(zip(perm, signs)):
                m[row, col] = s
            if not np.array_equal(m, np.eye(d, dtype=np.int64)):
                mats.append(m)
    return np.stack(mats)


class _Chain:
    """Mutable chain state: site array, packed keys, running silt count."""

    def __init__(self, sites, d, span):
        self.d = d
        self.span = span
        self.sites = np.array(sites, dtype=np.int64)
        self.n = len(sites) - 1
        self.keys = site_keys(self.sites, span)
        srt = np.sort(self.keys)
        runs = np.diff(np.nonzero(np.concatenate(([True], srt[1:] != srt[:-1], [True])))[0])
        self.silt = int((runs * (runs - 1) // 2).sum())

    def recentre(self):
        if self.sites[0].any():
            self.sites -= self.sites[0]
            self.keys = site_keys(self.sites, self.span)


def _cross_count(sorted_fixed, keys):
    hi = np.searchsorted(sorted_fixed, keys, side="right")
    lo = np.searchsorted(sorted_fixed, keys, side="left")
    return int((hi - lo).sum())


def _propose_pivot(chain, syms, u_site, u_sym):
    n = chain.n
    i = 1 + int(u_site * (n - 1))
    m = syms[int(u_sym * len(syms))]
    head = i < n - i
    moving = slice(0, i) if head else slice(i + 1, n + 1)
    fixed = slice(i, n + 1) if head else slice(0, i + 1)
    pivot = chain.sites[i]
    new_sites = (chain.sites[moving] - pivot) @ m.T + pivot
    new_keys = site_keys(new_sites, chain.span)
    sorted_fixed = np.sort(chain.keys[fixed])
    delta = _cross_count(sorted_fixed, new_keys) - _cross_count(sorted_fixed, chain.keys[moving])
    return delta, (moving, new_sites, new_keys, head)


def _apply_pivot(chain, payload):
    moving, new_sites, new_keys, head = payload
    chain.sites[moving] = new_sites
    chain.keys[moving] = new_keys
    if head:
        chain.recentre()


def _propose_kink(chain, dirs, u_site, u_choice):
    n = chain.n
    i = 1 + int(u_site * n)
    cur = chain.sites[i]
    if i == n:
        cands = chain.sites[n - 1] + dirs
    else:
        diff = chain.sites[i + 1] - chain.sites[i - 1]
        l1 = int(np.abs(diff).sum())
        if l1 == 0:
            cands = chain.sites[i - 1] + dirs
        elif l1 == 2 and np.count_nonzero(diff) == 2:
            axes = np.nonzero(diff)[0]
            c1 = chain.sites[i - 1].copy()
            c1[axes[0]] += diff[axes[0]]
            c2 = chain.sites[i - 1].copy()
            c2[axes[1]] += diff[axes[1]]
            cands = np.stack([c1, c2])
        else:
            cands = cur[None, :]
    new = cands[int(u_choice * len(cands))]
    if np.array_equal(new, cur):
        return 0, (i, cur, chain.keys[i])
    new_key = int(site_keys(new, chain.span))
    old_key = chain.keys[i]
    cnt_new = int(np.count_nonzero(chain.keys == new_key))
    cnt_old = int(np.count_nonzero(chain.keys == old_key))
    delta = cnt_new - (cnt_old - 1)
    return delta, (i, new, new_key)


def _apply_kink(chain, payload):
    i, new, new_key = payload
    chain.sites[i] = new
    chain.keys[i] = new_key


def _window_ok(window, j):
    if window is None:
        return True
    lo, hi = window
    return lo <= j <= hi


def _accepts(beta, delta, u):
    if math.isinf(beta):
        return delta == 0
    if delta <= 0:
        return True
    return u < math.exp(-beta * delta)


def _initial_state(config: EnsembleConfig, rng):
    n, d = config.n, config.d
    span = 2 * n + 2
    straight = np.zeros((n + 1, d), dtype=np.int64)
    straight[:, 0] = np.arange(n + 1)
    if config.window is None or _window_ok(config.window, 0):
        return _Chain(straight, d, span)
    # hunt for a state inside the window: fresh draws first, then drift
    dirs = directions(d)
    best = None
    lo, hi = config.window

    def dist(j):
        return max(lo - j, j - hi, 0)

    for _ in range(config.mcmc.init_attempts):
        steps = rng.integers(0, 2 * d, size=n, dtype=np.uint8)
        sites = np.zeros((n + 1, d), dtype=np.int64)
        np.cumsum(dirs[steps], axis=0, out=sites[1:])
        chain = _Chain(sites, d, span)
        if dist(chain.silt) == 0:
            return chain
        if best is None or dist(chain.silt) < dist(best.silt):
            best = chain
    chain = best if best is not None else _Chain(straight, d, span)
    syms = _symmetries(d)
    cap = 200 * n
    u = rng.random((cap, 4))
    for t in range(cap):
        if u[t, 0] < 0.5 and n >= 2:
            delta, payload = _propose_pivot(chain, syms, u[t, 1], u[t, 2])
            apply_fn = _apply_pivot
        else:
            delta, payload = _propose_kink(chain, dirs, u[t, 1], u[t, 2])
            apply_fn = _apply_kink
        if dist(chain.silt + delta) <= dist(chain.silt):
            apply_fn(chain, payload)
            chain.silt += delta
            if dist(chain.silt) == 0:
                return chain
    raise ChainInitializationError(
        f"no state with silt in [{lo}, {hi}] found after {config.mcmc.init_attempts} draws and {cap} drift moves"
    )


def sample_mcmc(config: EnsembleConfig):
    """Metropolis sampling of the tilted law with pivot and kink moves.

    Pivot moves apply a random lattice symmetry to the shorter side of a
    random interior site; the silt change is counted by matching the moved
    side's keys against the fixed side (each side's internal count is
    isometry-invariant).  beta = inf restricts the chain to self-avoiding
    paths, beta = 0 accepts everything.
    """
    cfg = config
    rng = cfg.seed.generator()
    chain = _initial_state(cfg, rng)
    dirs = directions(cfg.d)
    syms = _symmetries(cfg.d)
    n = cfg.n
    burn_moves = cfg.mcmc.burn_sweeps * n
    thin = cfg.mcmc.thin_moves
    total_moves = burn_moves + cfg.samples * thin
    pivot_frac = cfg.mcmc.pivot_fraction

    silt_out = np.empty(cfg.samples, dtype=np.int64)
    chi_out = np.empty(cfg.samples)
    hull_out = np.empty(cfg.samples)
    paths = [] if cfg.retain_paths else None

    proposed = {"pivot": 0, "kink": 0}
    accepted = {"pivot": 0, "kink": 0}
    taken = 0
    block = 1 << 14
    done = 0
    while done < total_moves:
        todo = min(block, total_moves - done)
        u = rng.random((todo, 4))
        for t in range(todo):
            if u[t, 0] < pivot_frac and n >= 2:
                kind = "pivot"
                delta, payload = _propose_pivot(chain, syms, u[t, 1], u[t, 2])
                apply_fn = _apply_pivot
            else:
                kind = "kink"
                delta, payload = _propose_kink(chain, dirs, u[t, 1], u[t, 2])
                apply_fn = _apply_kink
            proposed[kind] += 1
            if _accepts(cfg.beta, delta, u[t, 3]) and _window_ok(cfg.window, chain.silt + delta):
                apply_fn(chain, payload)
                chain.silt += delta
                accepted[kind] += 1
            move_index = done + t + 1
            if move_index > burn_moves and (move_index - burn_moves) % thin == 0:
                norms2 = (chain.sites * chain.sites).sum(axis=1)
                silt_out[taken] = chain.silt
                chi_out[taken] = math.sqrt(norms2[-1])
                hull_out[taken] = math.sqrt(norms2.max())
                if paths is not None:
                    paths.append(LatticePath.from_sites(chain.sites))
                taken += 1
        done += todo

    assert taken == cfg.samples
    tau_chi = integrated_autocorr_time(chi_out)
    tau_chi2 = integrated_autocorr_time(chi_out * chi_out)
    tau = max(tau_chi, tau_chi2)
    total_prop = proposed["pivot"] + proposed["kink"]
    total_acc = accepted["pivot"] + accepted["kink"]
    ens = WeightedEnsemble(
        config=cfg,
        silt=silt_out,
        chi=chi_out,
        hull=hull_out,
        weight=np.ones(cfg.samples),
        paths=paths,
        diagnostics={
            "sampler": "mcmc",
            "acceptance_rate": total_acc / total_prop if total_prop else 1.0,
            "pivot_acceptance": accepted["pivot"] / proposed["pivot"] if proposed["pivot"] else 1.0,
            "kink_acceptance": accepted["kink"] / proposed["kink"] if proposed["kink"] else 1.0,
            "tau_chi": tau_chi,
            "tau_chi2": tau_chi2,
            "ess": cfg.samples / (2.0 * tau),
            "burn_moves": burn_moves,
            "thin_moves": thin,
            "window": list(cfg.window) if cfg.window else None,
        },
    )
    return ens


# ---------------------------------------------------------------------------
# series statistics


def integrated_autocorr_time(series, window_factor=6.0):
    """Sokal windowing estimate of the integrated autocorrelation time.

    Returns 0.5 for white noise; variances of means scale by 2 * tau.
    """
    x = np.asarray(series, dtype=np.float64)
    m = len(x)
    if m < 4:
        return 0.5
    x = x - x.mean()
    var = float(np.dot(x, x)) / m
    if var == 0:
        return 0.5
    size = 1 << (2 * m - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:m].real / m
    rho = acov / acov[0]
    tau = 0.5
    for t in range(1, m):
        tau += float(rho[t])
        if t >= window_factor * tau:
            break
    return max(tau, 0.5)


def mcmc_mean_se(series, tau=None):
    """Mean and autocorrelation-corrected standard error of a chain series."""
    x = np.asarray(series, dtype=np.float64)
    if tau is None:
        tau = integrated_autocorr_time(x)
    se = float(x.std(ddof=1)) / math.sqrt(len(x)) * math.sqrt(2.0 * tau)
    return float(x.mean()), se


def weighted_mean_se(values, weights):
    """Self-normalized importance estimate with linearized standard error."""
    v = np.asarray(values, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    s = math.fsum(w.tolist())
    if s <= 0:
        raise DegenerateEnsembleError("total weight is zero")
    mean = math.fsum((w * v).tolist()) / s
    se = math.sqrt(math.fsum((w * w * (v - mean) ** 2).tolist())) / s
    return mean, se


# ---------------------------------------------------------------------------
# the endpoint distance law


@dataclass
class RadialLaw:
    """Weighted empirical distribution of the endpoint distance."""

    n: int
    edges: np.ndarray
    masses: np.ndarray
    mean_chi: float
    mean_chi2: float
    bin_members: list
    total_weight: float

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def default_bin_width(n):
    return float(n) ** 0.25


def distance_law(ens: WeightedEnsemble, bins=None):
    """Bin the ensemble's endpoint distances into a normalized law on [0, n].

    bins may be an edge array, an integer bin count, a bin width, or None
    for the default width n^(1/4).  Bin membership indexes back into the
    ensemble so downstream estimators can condition on the distance.
    """
    n = ens.config.n
    if bins is None:
        bins = default_bin_width(n)
    if isinstance(bins, (int, np.integer)):
        edges = np.linspace(0.0, float(n), int(bins) + 1)
    elif isinstance(bins, (float, np.floating)):
        edges = np.arange(0.0, float(n) + bins, float(bins))
        if edges[-1] < n:
            edges = np.append(edges, float(n))
    else:
        edges = np.asarray(bins, dtype=np.float64)
        if len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be increasing with at least two entries")
    total = math.fsum(ens.weight.tolist())
    if total <= 0:
        raise DegenerateEnsembleError("ensemble carries no weight")
    nbins = len(edges) - 1
    idx = np.clip(np.searchsorted(edges, ens.chi, side="right") - 1, 0, nbins - 1)
    masses = np.bincount(idx, weights=ens.weight, minlength=nbins) / total
    members = [np.nonzero(idx == b)[0] for b in range(nbins)]
    mean_chi = math.fsum((ens.weight * ens.chi).tolist()) / total
    mean_chi2 = math.fsum((ens.weight * ens.chi * ens.chi).tolist()) / total
    return RadialLaw(
        n=n,
        edges=edges,
        masses=masses,
        mean_chi=mean_chi,
        mean_chi2=mean_chi2,
        bin_members=members,
        total_weight=total,
    )


def sample_ensemble(config: EnsembleConfig):
    """Dispatch on config.sampler."""
    if config.sampler == "reweight":
        return sample_reweighted(config)
    return sample_mcmc(config)
