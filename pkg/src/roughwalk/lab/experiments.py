"""Seeded experiments over hidden Markov walks.

Every experiment splits its work into fixed chunks of path indices; each
path owns its random stream, and chunk results are reduced in index order,
so the output does not depend on the number of workers.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..hmw.excursions import (
    DegenerateExcursionError,
    ExcursionBatch,
    ResidualMassError,
    _ratio_se,
    estimate,
    exact_excursion_stats,
    finite_pair_expectation,
    simulate_excursions,
)
from ..hmw.fixtures import indicator_model
from ..hmw.model import stationary
from ..hmw.simulate import _Tables, simulate_batch
from ..hmw.transforms import normal_form
from ..tensor_group import T2Element, antisym, batch_hom_norm, batch_increment, is_geometric
from ..words import ergodic_scaling
from .config import ConfigError, ExperimentConfig
from .report import ExperimentReport

# excursions simulated per chunk (chunk j uses path index j)
EXCURSION_CHUNK = 20_000
# paths per chunk for fixed-length replicas
REPLICA_CHUNK = 128
# time steps held in memory per chunk of full-path lifts
LIFT_BUDGET = 2**20


def _map(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# Excursions

def _excursion_chunk(job):
    model, K, seed, index = job
    return simulate_excursions(model, K, seed, path_index=index)


def sample_excursions(model, K, seed, workers=1) -> ExcursionBatch:
    """``K`` excursions from consecutive paths of ``EXCURSION_CHUNK`` excursions each."""
    sizes = [EXCURSION_CHUNK] * (K // EXCURSION_CHUNK)
    if K % EXCURSION_CHUNK:
        sizes.append(K % EXCURSION_CHUNK)
    jobs = [(model, size, seed, j) for j, size in enumerate(sizes)]
    return ExcursionBatch.concat(_map(_excursion_chunk, jobs, workers))


def _exact(model, cfg, report):
    if cfg.exact_horizon is None:
        return exact_excursion_stats(model)
    try:
        return exact_excursion_stats(model, method="enumerate", horizon=cfg.exact_horizon)
    except ResidualMassError as exc:
        msg = f"enumeration infeasible ({exc}); reporting Monte Carlo only"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        report.notices.append(msg)
        return None


def _require_fixed_start(model):
    if not model.chain.deterministic_start:
        raise ConfigError("estimator runs need a deterministic start state, "
                          "the model has a distributional start")


def run_anomaly(cfg: ExperimentConfig) -> ExperimentReport:
    """Excursion estimates of beta, C, gamma, gamma0 and M against the exact values."""
    model = cfg.load_model()
    _require_fixed_start(model)
    report = ExperimentReport("anomaly", cfg.metadata())
    z = cfg.tol("z", 3.0)
    exact = _exact(model, cfg, report)
    batch = sample_excursions(model, cfg.k, cfg.seed, cfg.workers)
    try:
        mc = estimate(batch)
    except DegenerateExcursionError as exc:
        report.notices.append(str(exc))
        report.add("C", 0.0, target=0.0, check="abs", tol=0.0, estimator="mean |X_T1|^2/d",
                   sample_size=cfg.k)
        return report
    est = dict(estimator="excursion mean", sample_size=cfg.k)
    ref = (lambda name: None) if exact is None else (lambda name: getattr(exact, name))
    check = dict(check="z", tol=z, atol=1e-12) if exact is not None else {}
    report.add("beta", mc.beta, se=mc.beta_se, target=ref("beta"), **check, **est)
    report.add("C", mc.C, se=mc.C_se, target=ref("C"), **check, **est)
    report.add_array("mean_increment", mc.mean_increment, mc.mean_increment_se,
                     ref("mean_increment"), **check, **est)
    report.add_array("gamma", mc.gamma, mc.gamma_se, ref("gamma"), antisym_only=True, **check, **est)
    if model.decorated:
        report.add_array("gamma0", mc.gamma0, mc.gamma0_se, ref("gamma0"), antisym_only=True,
                         **check, **est)
    else:
        report.add_array("gamma0", mc.gamma0, mc.gamma0_se, 0.0, antisym_only=True,
                         check="abs", tol=0.0, **est)
    report.add_array("gamma_rho", mc.gamma_rho, mc.gamma_rho_se, ref("gamma_rho"),
                     antisym_only=True, **check, **est)
    report.add_array("M", mc.M, mc.M_se, ref("M"), **check, **est)
    report.add("ito_identity_defect", mc.ito_identity_defect(), target=0.0, check="abs",
               tol=cfg.tol("identity", 1e-12), **est)
    report.add("isotropy", mc.isotropy, estimator="max |offdiag Sigma| / C", sample_size=cfg.k)
    if exact is not None:
        report.add("residual_mass", exact.residual_mass, estimator=f"exact ({exact.method})")
    return report


# Fixed-length replicas

def _grid_index(grid, n):
    return np.array([int(np.floor(t * n + 1e-9)) for t in grid], dtype=np.int64)


def _replica_chunk(job):
    """Level-1 values, pair sums, square sums and area sums at the grid indices."""
    model, n, seed, indices, marks = job
    states, steps, deco = simulate_batch(model, n, seed, indices, _tables=_Tables(model))
    P, _, d = steps.shape
    G = marks.size
    x = np.zeros((P, G, d))
    pair = np.zeros((P, G, d, d))
    square = np.zeros((P, G, d, d))
    area = np.zeros((P, G, d, d))
    x_run = np.zeros((P, d))
    p_run = np.zeros((P, d, d))
    s_run = np.zeros((P, d, d))
    a_run = np.zeros((P, d, d))
    lo = 0
    for g, hi in enumerate(marks):
        seg = steps[:, lo:hi]
        if hi > lo:
            x_prev = x_run[:, None, :] + np.cumsum(seg, axis=1) - seg
            p_run = p_run + np.einsum("pki,pkj->pij", x_prev, seg)
            s_run = s_run + np.einsum("pki,pkj->pij", seg, seg)
            if deco is not None:
                a_run = a_run + deco[:, lo:hi].sum(axis=1)
            x_run = x_run + seg.sum(axis=1)
        x[:, g], pair[:, g], square[:, g], area[:, g] = x_run, p_run, s_run, a_run
        lo = hi
    return x, pair, square, area


def replica_moments(model, n, seed, R, grid, workers=1):
    """Per-replica ``(X, pair, square, area)`` at ``floor(t n)`` for ``t`` in ``grid``."""
    marks = _grid_index(grid, n)
    jobs = [(model, n, seed, range(lo, min(lo + REPLICA_CHUNK, R)), marks)
            for lo in range(0, R, REPLICA_CHUNK)]
    parts = _map(_replica_chunk, jobs, workers)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(4))


def _prepare(cfg, model, report):
    """Centre and isotropize (unless disabled); returns ``(model', exact stats)``."""
    _require_fixed_start(model)
    try:
        model, W, notices = normal_form(model, isotropic=cfg.isotropize)
    except DegenerateExcursionError as exc:
        raise ConfigError(f"model cannot be normalised: {exc}") from None
    report.notices.extend(notices)
    exact = exact_excursion_stats(model)
    if not cfg.isotropize and exact.anisotropy > cfg.tol("cov", 0.05):
        raise ConfigError(f"isotropy diagnostic {exact.anisotropy:.3g} exceeds "
                          f"{cfg.tol('cov', 0.05):g}; drop --no-isotropize")
    return model, exact


def _mean_se(samples):
    R = samples.shape[0]
    se = samples.std(axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros(samples.shape[1:])
    return samples.mean(axis=0), se


def _excess_kurtosis(v):
    c = v - v.mean(axis=0)
    m2 = (c**2).mean(axis=0)
    m4 = (c**4).mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        k = np.where(m2 > 0, m4 / np.where(m2 > 0, m2, 1) ** 2 - 3.0, 0.0)
    return k


def run_donsker(cfg: ExperimentConfig) -> ExperimentReport:
    """Rescaled geometric lifts of ``R`` replicas at the grid times."""
    report = ExperimentReport("donsker", cfg.metadata())
    model, exact = _prepare(cfg, cfg.load_model(), report)
    d, R, N = model.dimension, cfg.replicas, cfg.n
    z, cov_tol = cfg.tol("z", 3.0), cfg.tol("cov", 0.05)
    lam = np.sqrt(exact.beta / (N * exact.C))
    report.add("beta", exact.beta, estimator="exact")
    report.add("C", exact.C, estimator="exact")
    report.add_array("gamma_rho_exact", exact.gamma_rho, antisym_only=True, estimator="exact")
    x, pair, square, area = replica_moments(model, N, cfg.seed, R, cfg.grid, cfg.workers)
    est = dict(estimator="replica mean", sample_size=R)
    for g, t in enumerate(cfg.grid):
        tag = f"t={t:g}"
        lvl1 = lam * x[:, g]
        lvl2_anti = lam**2 * (antisym(pair[:, g]) + area[:, g])
        mean, se = _mean_se(lvl1)
        report.add_array(f"level1_mean[{tag}]", mean, se, 0.0, check="z", tol=z, atol=1e-12, **est)
        cov = np.cov(lvl1, rowvar=False, ddof=1).reshape(d, d) if R > 1 else np.zeros((d, d))
        report.add_array(f"level1_cov[{tag}]", cov, None, t * np.eye(d), check="abs",
                         tol=cov_tol * max(t, 0.0) + 1e-12, estimator="sample covariance",
                         sample_size=R)
        mean, se = _mean_se(lvl2_anti)
        report.add_array(f"level2_anti_mean[{tag}]", mean, se, t * exact.gamma_rho,
                         antisym_only=True, check="z", tol=z, atol=1e-12, **est)
        kurt = _excess_kurtosis(lvl1)
        report.add_array(f"excess_kurtosis[{tag}]", kurt, np.sqrt(24.0 / R), 0.0, check="z",
                         tol=z, atol=1e-12, estimator="moment ratio", sample_size=R)
    return report


def run_nongeo(cfg: ExperimentConfig) -> ExperimentReport:
    """Rescaled non-geometric lifts against the drift ``M t``, and the estimator identity."""
    report = ExperimentReport("nongeo", cfg.metadata())
    model = cfg.load_model()
    if model.decorated:
        raise ConfigError("the non-geometric lift is defined for undecorated models")
    model, exact = _prepare(cfg, model, report)
    d, R, N = model.dimension, cfg.replicas, cfg.n
    z = cfg.tol("z", 3.0)
    lam2 = exact.beta / (N * exact.C)
    report.add_array("M_exact", exact.M, estimator="exact")
    report.add("ito_identity_defect_exact", exact.ito_identity_defect(), target=0.0,
               check="abs", tol=cfg.tol("identity", 1e-12), estimator="exact")
    mc = estimate(sample_excursions(model, cfg.k, cfg.seed, cfg.workers))
    report.add("ito_identity_defect", mc.ito_identity_defect(), target=0.0, check="abs",
               tol=cfg.tol("identity", 1e-12), estimator="excursion mean", sample_size=cfg.k)
    x, pair, square, _ = replica_moments(model, N, cfg.seed, R, cfg.grid, cfg.workers)
    est = dict(estimator="replica mean", sample_size=R)
    for g, t in enumerate(cfg.grid):
        mean, se = _mean_se(lam2 * pair[:, g])
        report.add_array(f"level2_mean[t={t:g}]", mean, se, t * exact.M, check="z", tol=z,
                         atol=1e-12, **est)
    last = len(cfg.grid) - 1
    lam = np.sqrt(lam2)
    moving = np.trace(square[:, last], axis1=1, axis2=2) > 0
    geometric = sum(
        is_geometric(T2Element(lam * x[r, last], lam2 * pair[r, last]), tol=1e-9)
        for r in np.flatnonzero(moving))
    report.add(f"geometric_endpoints[t={cfg.grid[last]:g}]", geometric, target=0.0, check="abs",
               tol=0.0, estimator="is_geometric(tol=1e-9) count", sample_size=int(moving.sum()))
    return report


def run_occupation(cfg: ExperimentConfig) -> ExperimentReport:
    """Ergodic scaling of ``L_w`` and centred pair occupation drifts."""
    report = ExperimentReport("occupation", cfg.metadata())
    model = cfg.load_model()
    _require_fixed_start(model)
    chain = model.chain
    w = cfg.word
    if w is None:
        w = (0, 1) if chain.n_states > 1 else (0, 0)
    w = tuple(w)
    if any(not 0 <= u < chain.n_states for u in w):
        raise ConfigError(f"word {w} has letters outside the {chain.n_states} states")
    pi = stationary(chain)
    N = cfg.n
    grid = sorted({max(1, N >> j) for j in range(4)})
    label = ",".join(map(str, w))
    for row in ergodic_scaling(model, w, grid, pi=pi, seed=cfg.seed):
        report.add(f"scaled_occupation[N={row.N}]", row.rescaled, target=row.predicted,
                   check="abs", tol=cfg.tol("scaling", 0.01), component=label,
                   estimator="L_w / N^|w|", sample_size=row.N)

    ind = indicator_model(chain, pi)
    R = cfg.replicas
    _, pair, _, _ = replica_moments(ind, N, cfg.seed, R, (1.0,), cfg.workers)
    scaled = pair[:, 0] / N
    mean, se = _mean_se(scaled)
    z = cfg.tol("z", 3.0)
    finite = finite_pair_expectation(ind, N) / N
    report.add_array("centered_pair_mean", mean, se, finite, check="z", tol=z, atol=1e-9,
                     estimator="replica mean of pair/N vs exact E at N", sample_size=R)
    batch = sample_excursions(ind, cfg.k, cfg.seed, cfg.workers)
    lengths = batch.lengths.astype(float)
    drift = batch.pair.mean(axis=0) / lengths.mean()
    drift_se = np.sqrt(_ratio_se(batch.pair, lengths, drift) ** 2 + se**2)
    report.add_array("centered_pair_vs_excursions", mean, drift_se, drift, check="z", tol=z,
                     atol=1e-9, estimator="replica mean vs excursion E[pair]/beta",
                     sample_size=R)
    exact = exact_excursion_stats(ind)
    report.add_array("centered_pair_limit_exact", exact.pair_mean / exact.beta,
                     estimator="exact E[pair]/beta")
    return report


def run_compare_embeddings(cfg: ExperimentConfig) -> ExperimentReport:
    """Anomaly of the geodesic embedding against the decorated one."""
    report = ExperimentReport("compare-embeddings", cfg.metadata())
    model = cfg.load_model()
    _require_fixed_start(model)
    z = cfg.tol("z", 3.0)
    exact = _exact(model, cfg, report)
    mc = estimate(sample_excursions(model, cfg.k, cfg.seed, cfg.workers))
    est = dict(estimator="excursion mean", sample_size=cfg.k)
    check = dict(check="z", tol=z, atol=1e-12) if exact is not None else {}
    for name in ("gamma", "gamma0", "gamma_rho"):
        target = None if exact is None else getattr(exact, name)
        report.add_array(f"{name}", getattr(mc, name), getattr(mc, f"{name}_se"), target,
                         antisym_only=True, **check, **est)
    additivity = np.max(np.abs(mc.gamma_rho - mc.gamma - mc.gamma0))
    report.add("additivity_defect", additivity, target=0.0, check="abs", tol=1e-15, **est)
    if exact is not None:
        gap = float(np.max(np.abs(exact.gamma_rho - exact.gamma)))
        report.add("class_gap", gap, estimator="max |gamma_rho - gamma| (exact)")
        report.notices.append("embeddings are equivalent" if gap < 1e-12
                              else "embeddings differ: decorations shift the anomaly")
    return report


# Hoelder statistic

def holder_statistic(x, b, lam):
    """``max |||delta_lam X_{s,t}||| / |t - s|^{1/2}`` over dyadic ``(s, t)``, per path.

    ``x`` and ``b`` are running level-1/level-2 values of shape ``(P, N+1, ...)``.
    """
    N = x.shape[1] - 1
    best = np.zeros(x.shape[0])
    levels = int(np.floor(np.log2(N))) if N >= 1 else 0
    for j in range(levels + 1):
        cut = (np.arange(2**j + 1) * N) // 2**j
        s, t = cut[:-1], cut[1:]
        a, bb = batch_increment(x[:, s], b[:, s], x[:, t], b[:, t])
        ratio = lam * batch_hom_norm(a, bb) / np.sqrt((t - s) / N)
        best = np.maximum(best, ratio.max(axis=1))
    return best


def _holder_chunk(job):
    model, n, seed, indices, lam = job
    _, steps, deco = simulate_batch(model, n, seed, indices, _tables=_Tables(model))
    P, _, d = steps.shape
    x = np.zeros((P, n + 1, d))
    x[:, 1:] = np.cumsum(steps, axis=1)
    local = np.einsum("pki,pkj->pkij", x[:, :-1], steps) + 0.5 * np.einsum(
        "pki,pkj->pkij", steps, steps)
    if deco is not None:
        local += deco
    b = np.zeros((P, n + 1, d, d))
    b[:, 1:] = np.cumsum(local, axis=1)
    return holder_statistic(x, b, lam), holder_statistic(x, b, 1.0)


def holder_samples(model, n, seed, R, lam, workers=1):
    """Dilated and undilated Hoelder statistics of ``R`` replicas of length ``n``."""
    per = max(1, LIFT_BUDGET // (n + 1))
    jobs = [(model, n, seed, range(lo, min(lo + per, R)), lam) for lo in range(0, R, per)]
    parts = _map(_holder_chunk, jobs, workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def _log_slope(ns, means):
    if np.all(means == 0):
        return 0.0
    return float(np.polyfit(np.log(ns), np.log(means), 1)[0])


def run_holder(cfg: ExperimentConfig) -> ExperimentReport:
    """Growth of the mean dyadic Hoelder statistic along the N-grid."""
    report = ExperimentReport("holder", cfg.metadata())
    model = cfg.load_model()
    try:
        model, exact = _prepare(cfg, model, report)
        beta, C = exact.beta, exact.C
    except ConfigError as exc:
        report.notices.append(f"no rescaling applied: {exc}")
        beta = C = None
    R = cfg.replicas
    means, raw_means = [], []
    for N in cfg.holder_ns:
        lam = 1.0 if beta is None else np.sqrt(beta / (N * C))
        h, h_raw = holder_samples(model, N, cfg.seed, R, lam, cfg.workers)
        m, se = _mean_se(h[:, None])
        report.add(f"holder_mean[N={N}]", m[0], se=se[0], estimator="mean H_N", sample_size=R)
        means.append(m[0])
        raw_means.append(h_raw.mean())
    ns = np.array(cfg.holder_ns, dtype=float)
    report.add("holder_log_slope", _log_slope(ns, np.array(means)), check="max",
               tol=cfg.tol("slope", 0.1), estimator="least squares on log mean H_N",
               sample_size=R)
    report.add("holder_log_slope_undilated", _log_slope(ns, np.array(raw_means)),
               check="min" if beta is not None else "info", tol=cfg.tol("control", 0.4),
               estimator="negative control without dilation", sample_size=R)
    return report


RUNNERS = {
    "anomaly": run_anomaly,
    "donsker": run_donsker,
    "nongeo": run_nongeo,
    "occupation": run_occupation,
    "compare-embeddings": run_compare_embeddings,
    "holder": run_holder,
}


def run(cfg: ExperimentConfig) -> ExperimentReport:
    return RUNNERS[cfg.kind](cfg)
