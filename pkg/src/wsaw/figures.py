"""Figure renderers for study output directories.

Each renderer reads the delimited artifacts a study wrote and saves PNG
files next to them.  render_study dispatches on the manifest's study kind
and returns the list of files it created.
"""

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import analysis


def _read_csv(path):
    with open(path) as fp:
        reader = csv.DictReader(fp)
        rows = list(reader)
    return rows


def _col(rows, key, cast=float):
    return np.array([cast(r[key]) for r in rows])


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def census_figure(out_dir):
    rows = _read_csv(Path(out_dir) / "census.csv")
    ns = _col(rows, "n", int)
    mu = _col(rows, "mu_n")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, mu, "o-", label="mu_n = c_n^(1/n)")
    upper = 3.0 * (4.0 / 3.0) ** (1.0 / ns)
    ax.plot(ns, upper, "--", color="gray", label="upper band")
    ax.axhline(2.0, ls="--", color="gray", label="lower band")
    ax.set_xlabel("n")
    ax.set_ylabel("growth rate")
    ax.legend()
    ax.set_title("self-avoiding census growth rate")
    return [_save(fig, Path(out_dir) / "census.png")]


def exact_figure(out_dir):
    rows = _read_csv(Path(out_dir) / "histogram.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    ns = sorted({int(r["n"]) for r in rows})
    for n in ns:
        sub = [r for r in rows if int(r["n"]) == n]
        js = _col(sub, "j", int)
        cnt = _col(sub, "count")
        ax.semilogy(js, cnt / cnt.sum(), "o-", label=f"n = {n}")
    ax.set_xlabel("self-intersection count")
    ax.set_ylabel("probability")
    ax.legend()
    ax.set_title("exact silt distribution")
    return [_save(fig, Path(out_dir) / "histogram.png")]


def _fit_line(ns, slope, intercept):
    xs = np.linspace(ns.min(), ns.max(), 50)
    return xs, np.exp(intercept) * xs ** slope


def exponent_figure(out_dir):
    moments = _read_csv(Path(out_dir) / "moments.csv")
    fits = _read_csv(Path(out_dir) / "fits.csv")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for axis, obs, key, se_key in (
        (axes[0], "chi", "mean_chi", "se_chi"),
        (axes[1], "chi2", "mean_chi2", "se_chi2"),
    ):
        betas = sorted({r["beta"] for r in moments})
        for beta in betas:
            sub = [r for r in moments if r["beta"] == beta]
            ns = _col(sub, "n")
            ys = _col(sub, key)
            es = _col(sub, se_key)
            axis.errorbar(ns, ys, yerr=es, fmt="o", label=f"beta = {beta}")
            fit = next((f for f in fits if f["beta"] == beta and f["observable"] == obs), None)
            if fit is not None:
                xs, line = _fit_line(ns, float(fit["slope"]), float(fit["intercept"]))
                axis.plot(xs, line, "-", alpha=0.7,
                          label=f"slope {float(fit['slope']):.3f}")
        axis.set_xscale("log")
        axis.set_yscale("log")
        axis.set_xlabel("n")
        axis.set_ylabel(obs)
        axis.legend(fontsize=8)
    axes[0].set_title("mean endpoint distance")
    axes[1].set_title("mean squared displacement")
    return [_save(fig, Path(out_dir) / "exponent.png")]


def hull_figure(out_dir):
    rows = _read_csv(Path(out_dir) / "hull.csv")
    xs = _col(rows, "x")
    th = _col(rows, "tail_hull")
    tc = _col(rows, "tail_chi")
    rt = _col(rows, "ratio")
    ref = _col(rows, "gaussian_reference")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].semilogy(xs, th, "-", label="hull radius tail")
    axes[0].semilogy(xs, tc, "-", label="endpoint tail")
    axes[0].semilogy(xs, ref, "--", color="gray", label="2 exp(-x^2/2n)")
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("P(. >= x)")
    axes[0].legend()
    axes[0].set_title("tail comparison")
    axes[1].plot(xs, rt, "-")
    axes[1].axhline(1.0, ls="--", color="gray")
    axes[1].axhline(2.0, ls="--", color="gray")
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("tail ratio")
    axes[1].set_title("hull tail over endpoint tail")
    return [_save(fig, Path(out_dir) / "hull.png")]


def shapes_figure(out_dir):
    rows = _read_csv(Path(out_dir) / "shapes.csv")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    betas = sorted({r["beta"] for r in rows})
    for beta in betas:
        sub = [r for r in rows if r["beta"] == beta]
        ns = _col(sub, "n")
        frac = _col(sub, "circular_frac")
        axes[0].plot(ns, frac, "o-", label=f"beta = {beta}")
    axes[0].set_xlabel("n")
    axes[0].set_ylabel("circular fraction")
    axes[0].set_ylim(-0.05, 1.05)
    axes[0].legend()
    axes[0].set_title("members with a band at r = 1/2")
    ax_rows = _read_csv(Path(out_dir) / "ax.csv")
    for beta in sorted({r["beta"] for r in ax_rows}):
        ns = sorted({r["n"] for r in ax_rows if r["beta"] == beta})
        sub = [r for r in ax_rows if r["beta"] == beta and r["n"] == ns[-1]
               and r["a_x"] != "nan"]
        if sub:
            axes[1].plot(_col(sub, "x_bin"), _col(sub, "a_x"), "o-",
                         label=f"beta = {beta}, n = {ns[-1]}")
    axes[1].set_xlabel("distance bin")
    axes[1].set_ylabel("a_x")
    axes[1].legend(fontsize=8)
    axes[1].set_title("penalty coefficient by distance")
    return [_save(fig, Path(out_dir) / "shapes.png")]


def conditiond_figure(out_dir):
    rows = _read_csv(Path(out_dir) / "conditiond.csv")
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    betas = sorted({r["beta"] for r in rows})
    for beta in betas:
        sub = [r for r in rows if r["beta"] == beta]
        ns = _col(sub, "n")
        rho = np.array([float(r["rho_n"]) if r["rho_n"] != "inf" else np.nan for r in sub])
        axes[0].plot(ns, rho, "o-", label=f"beta = {beta}")
        axes[1].plot(ns, _col(sub, "K"), "o-", label=f"beta = {beta}")
    axes[0].set_xlabel("n")
    axes[0].set_ylabel("far-mass ratio")
    axes[0].legend()
    axes[0].set_title("(J2 + J3) / J1")
    axes[1].set_xlabel("n")
    axes[1].set_ylabel("K estimate")
    axes[1].legend()
    axes[1].set_title("displacement constant")
    return [_save(fig, Path(out_dir) / "conditiond.png")]


def palm_figure(out_dir):
    rows = _read_csv(Path(out_dir) / "palm.csv")
    labels = [r["quantity"] for r in rows]
    est = _col(rows, "estimate")
    ref = _col(rows, "reference")
    se = _col(rows, "se")
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = np.arange(len(labels))
    ax.bar(xs - 0.15, est, width=0.3, yerr=3 * se, capsize=4, label="estimate")
    ax.bar(xs + 0.15, ref, width=0.3, label="analytic")
    ax.set_xticks(xs)
    ax.set_xticklabels(labels)
    ax.legend()
    ax.set_title("Palm estimators on a Poisson sample (3 sigma bars)")
    return [_save(fig, Path(out_dir) / "palm.png")]


def srw_figure(out_dir):
    paths = exponent_figure(out_dir)
    moments = _read_csv(Path(out_dir) / "moments.csv")
    ns = _col(moments, "n")
    ys = _col(moments, "mean_chi2")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, ys / ns, "o-", label="mean chi^2 / n")
    ax.axhline(1.0, ls="--", color="gray")
    ax.set_xlabel("n")
    ax.set_ylabel("ratio")
    ax.legend()
    ax.set_title("unbiasedness of the plain-walk baseline")
    paths.append(_save(fig, Path(out_dir) / "baseline.png"))
    return paths


def nu_figure(out_dir):
    rows = _read_csv(Path(out_dir) / "nu.csv")
    ds = _col(rows, "d", int)
    nus = _col(rows, "nu_float")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ds, nus, "s-")
    ax.axhline(0.5, ls="--", color="gray")
    ax.set_xlabel("dimension")
    ax.set_ylabel("predicted exponent")
    ax.set_title("displacement exponent by dimension")
    return [_save(fig, Path(out_dir) / "nu.png")]


def ensemble_figure(out_dir, ens):
    """Histogram of sampled endpoint distances with the reference tail."""
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    w = ens.weight / ens.total_weight()
    axes[0].hist(ens.chi, bins=40, weights=w, color="steelblue")
    axes[0].set_xlabel("endpoint distance")
    axes[0].set_ylabel("probability")
    axes[0].set_title(f"n = {ens.config.n}, beta = {ens.config.beta}")
    xs = np.quantile(ens.chi, np.linspace(0.01, 0.99, 60))
    tail = np.array([w[ens.chi >= x].sum() for x in xs])
    ref = np.array([analysis.gaussian_tail_reference(ens.config.n, float(x)) for x in xs])
    axes[1].semilogy(xs, tail, "-", label="empirical tail")
    axes[1].semilogy(xs, ref, "--", color="gray", label="2 exp(-x^2/2n)")
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("P(chi >= x)")
    axes[1].legend()
    axes[1].set_title("tail against the reflection reference")
    return [_save(fig, Path(out_dir) / "ensemble.png")]


_RENDERERS = {
    "census": census_figure,
    "exact-small-n": exact_figure,
    "srw-baseline": srw_figure,
    "weaksaw-exponent": exponent_figure,
    "saw-exponent": exponent_figure,
    "shape-study": shapes_figure,
    "condition-d": conditiond_figure,
    "convex-hull": hull_figure,
    "palm-poisson": palm_figure,
    "nu-table": nu_figure,
}


def render_study(out_dir):
    """Render the figures for a finished run directory, returning the paths."""
    out_dir = Path(out_dir)
    with open(out_dir / "manifest.json") as fp:
        manifest = json.load(fp)
    study = manifest["spec"]["study"]
    if study not in _RENDERERS:
        raise ValueError(f"no renderer for study {study!r}")
    return _RENDERERS[study](out_dir)
