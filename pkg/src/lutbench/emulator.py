"""PCA + Gaussian-process emulation of LUT spectra.

Spectra are compressed to ``p`` principal-component scores; each score is
regressed on the (unit-box normalised) inputs by an independent GP with an
ARD squared-exponential kernel, and predictions are mapped back to full
spectra through the PCA basis.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from . import metrics
from .numerics import NotPositiveDefinite, cholesky, solve_cholesky, sym_eigen
from .simplex import BatchResult
from .store import FormatError, read_container, write_container

log = logging.getLogger(__name__)

LENGTH_BOUNDS = (1e-2, 1e2)
SIGNAL_BOUNDS = (1e-6, 1e4)
NOISE_BOUNDS = (1e-10, 1e1)
JITTER_START = 1e-10
JITTER_MAX = 1e-4


class RankDeficient(ValueError):
    pass


class OptimizationFailed(RuntimeError):
    pass


class NonFiniteInput(ValueError):
    pass


# --------------------------------------------------------------------- PCA

@dataclass
class PcaModel:
    mean: np.ndarray          # (K,)
    basis: np.ndarray         # (K, p), orthonormal columns
    explained: np.ndarray     # (p,) explained-variance ratios

    @property
    def p(self) -> int:
        return self.basis.shape[1]

    def truncate(self, p: int) -> "PcaModel":
        return PcaModel(self.mean, self.basis[:, :p].copy(),
                        self.explained[:p].copy())


def fit_pca(spectra, p: int) -> PcaModel:
    """Principal components of mean-centred spectra.

    Uses the ``n x n`` Gram matrix when there are fewer spectra than bands.
    Each basis vector is signed so that its largest-magnitude entry is
    positive.
    """
    x = np.asarray(spectra, dtype=np.float64)
    n, k = x.shape
    if not 1 <= p < n:
        raise ValueError(f"need 1 <= p < n, got p={p}, n={n}")
    mean = x.mean(axis=0)
    xc = x - mean
    if n < k:
        evals, u = sym_eigen(xc @ xc.T)
        # multiply by every eigenvector so that rounding, and hence the
        # leading columns, do not depend on p
        basis = (xc.T @ u)[:, :p] / np.sqrt(np.where(evals[:p] > 0, evals[:p], 1.0))
    else:
        evals, v = sym_eigen(xc.T @ xc)
        basis = v[:, :p]
    total = float(np.einsum("ij,ij->", xc, xc))
    if total <= 0 or np.count_nonzero(evals[:p] > 1e-12 * total) < p:
        raise RankDeficient(f"fewer than {p} positive eigenvalues")
    pivot = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[pivot, np.arange(p)])
    basis = basis * signs
    return PcaModel(mean=mean, basis=basis, explained=evals[:p] / total)


def project(pca: PcaModel, spectra) -> np.ndarray:
    x = np.asarray(spectra, dtype=np.float64)
    if x.shape[-1] != pca.mean.size:
        raise ValueError(f"spectra have {x.shape[-1]} bands, PCA has {pca.mean.size}")
    xc = x - pca.mean
    # one product per column keeps each score independent of p
    return np.stack([xc @ pca.basis[:, k] for k in range(pca.p)], axis=-1)


def reconstruct(pca: PcaModel, scores) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if s.shape[-1] != pca.p:
        raise ValueError(f"scores have {s.shape[-1]} columns, PCA has {pca.p}")
    return s @ pca.basis.T + pca.mean


# ---------------------------------------------------------------------- GP

def _unpack(log_params, dim):
    th = np.asarray(log_params, dtype=np.float64)
    if th.shape != (dim + 2,):
        raise ValueError(f"expected {dim + 2} log-hyperparameters")
    return math.exp(th[0]), np.exp(th[1:dim + 1]), math.exp(th[dim + 1])


def _sqdist(a, b):
    aa = np.einsum("ij,ij->i", a, a)
    bb = np.einsum("ij,ij->i", b, b)
    d = aa[:, None] + bb[None, :] - 2.0 * (a @ b.T)
    np.maximum(d, 0.0, out=d)
    return d


def se_kernel(x1, x2, signal, lengths):
    """ARD squared-exponential covariance (no noise term)."""
    return signal * np.exp(-0.5 * _sqdist(x1 / lengths, x2 / lengths))


def _factor(kmat, noise):
    """Cholesky of ``kmat + noise*I``, escalating diagonal jitter on failure.

    Returns the factor and the jitter actually added.
    """
    n = kmat.shape[0]
    base = kmat.copy()
    base[np.diag_indices(n)] += noise
    jitter = 0.0
    while True:
        try:
            if jitter:
                a = base.copy()
                a[np.diag_indices(n)] += jitter
            else:
                a = base
            return cholesky(a), jitter
        except NotPositiveDefinite:
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX * (1 + 1e-9):
                raise


def log_marginal_likelihood(log_params, x, z, grad: bool = True):
    """GP log marginal likelihood and its gradient in log-hyperparameters.

    ``log_params`` is ``[log signal_var, log l_1 .. log l_D, log noise_var]``.
    Returns ``value`` or ``(value, gradient)``.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    n, dim = x.shape
    signal, lengths, noise = _unpack(log_params, dim)
    kf = se_kernel(x, x, signal, lengths)
    low, _ = _factor(kf, noise)
    alpha = solve_cholesky(low, z)
    value = (-0.5 * z @ alpha - np.log(np.diag(low)).sum()
             - 0.5 * n * math.log(2.0 * math.pi))
    if not grad:
        return value
    kl, info = scipy.linalg.lapack.dpotri(low, lower=1)
    if info != 0:
        raise NotPositiveDefinite("dpotri failed")
    # dpotri fills the lower triangle of K^-1; the upper one keeps the zeros
    # of the Cholesky factor. Hence K^-1 * Kf = P + P' - diag(P).
    pl = kl * kf
    pd = np.diag(pl)
    a_kf = np.outer(alpha, alpha) * kf
    r = a_kf.sum(axis=1) - (pl.sum(axis=1) + pl.sum(axis=0) - pd)
    mx = a_kf @ x - (pl @ x + pl.T @ x - pd[:, None] * x)
    g = np.empty(dim + 2)
    g[0] = 0.5 * r.sum()
    # sum_ij m_ij (x_id - x_jd)^2 = 2 sum_i x_id^2 r_i - 2 x_d' M x_d
    g[1:dim + 1] = ((x ** 2 * r[:, None]).sum(axis=0)
                    - (x * mx).sum(axis=0)) / lengths ** 2
    g[dim + 1] = 0.5 * noise * (alpha @ alpha - np.trace(kl))
    return value, g


@dataclass
class TrainConfig:
    """Emulator training settings.

    ``max_opt_points`` caps how many training rows enter the
    hyperparameter search; the final GP always conditions on every
    training row. ``None`` uses all of them.
    """

    n_components: int = 10
    train_fraction: float = 0.70
    seed: int = 0
    restarts: int = 5
    max_iter: int = 200
    max_opt_points: Optional[int] = 600

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class GprComponent:
    """One trained GP: hyperparameters plus cached solve vector."""

    log_params: np.ndarray
    alpha: np.ndarray
    z: np.ndarray
    jitter: float = 0.0
    lml: float = float("nan")
    chol: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def signal(self) -> float:
        return float(math.exp(self.log_params[0]))

    @property
    def lengths(self) -> np.ndarray:
        return np.exp(self.log_params[1:-1])

    @property
    def noise(self) -> float:
        return float(math.exp(self.log_params[-1]))

    def factor(self, x):
        if self.chol is None:
            kf = se_kernel(x, x, self.signal, self.lengths)
            kf[np.diag_indices(len(x))] += self.noise + self.jitter
            self.chol = cholesky(kf)
        return self.chol


def _component_rng(seed, index):
    return np.random.Generator(np.random.Philox(
        np.random.SeedSequence([int(seed), int(index)])))


def _bounds(dim):
    lo = [math.log(SIGNAL_BOUNDS[0])] + [math.log(LENGTH_BOUNDS[0])] * dim + [
        math.log(NOISE_BOUNDS[0])]
    hi = [math.log(SIGNAL_BOUNDS[1])] + [math.log(LENGTH_BOUNDS[1])] * dim + [
        math.log(NOISE_BOUNDS[1])]
    return list(zip(lo, hi))


def train_component(x, z, cfg: TrainConfig, index: int = 0) -> GprComponent:
    """Fit one GP by maximising the log marginal likelihood.

    Each restart starts from ``signal = var(z)``, ``noise = 1e-6 var(z)``
    and length-scales drawn log-uniformly from [0.1, 3]; the restart with
    the highest likelihood is kept. Optimisation uses L-BFGS-B in
    log-parameter space with box bounds.
    """
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    n, dim = x.shape
    if n < dim + 2:
        raise ValueError(f"need at least {dim + 2} training points, got {n}")
    rng = _component_rng(cfg.seed, index)
    var = float(z.var())
    var = var if var > SIGNAL_BOUNDS[0] else SIGNAL_BOUNDS[0]
    n_opt = n if cfg.max_opt_points is None else min(n, cfg.max_opt_points)
    xo, zo = x[:n_opt], z[:n_opt]
    bounds = _bounds(dim)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])

    def objective(th):
        try:
            v, g = log_marginal_likelihood(th, xo, zo)
        except NotPositiveDefinite:
            return 1e25, np.zeros_like(th)
        return -v, -g

    best = None
    for _ in range(cfg.restarts):
        start = np.concatenate([[math.log(var)],
                                rng.uniform(math.log(0.1), math.log(3.0), dim),
                                [math.log(1e-6 * var)]])
        start = np.clip(start, lo, hi)
        res = scipy.optimize.minimize(objective, start, jac=True,
                                      method="L-BFGS-B", bounds=bounds,
                                      options={"maxiter": cfg.max_iter})
        if not np.isfinite(res.fun) or res.fun >= 1e25:
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise OptimizationFailed(f"component {index}: every restart failed")
    th = np.clip(best.x, lo, hi)
    signal, lengths, noise = _unpack(th, dim)
    low, jitter = _factor(se_kernel(x, x, signal, lengths), noise)
    alpha = solve_cholesky(low, z)
    return GprComponent(log_params=th, alpha=alpha, z=z.copy(), jitter=jitter,
                        lml=float(-best.fun), chol=low)


PREDICT_CHUNK = 64


def gp_mean(comp: GprComponent, x_train, q) -> np.ndarray:
    """Posterior mean ``k(q, X) alpha``.

    The cross-covariance is built a block of queries at a time and reduced
    in place, so the working set stays cache-sized for large batches.
    """
    q = np.asarray(q, dtype=np.float64)
    xs = x_train / comp.lengths
    qs = q / comp.lengths
    half_bb = 0.5 * np.einsum("ij,ij->i", xs, xs)
    half_aa = 0.5 * np.einsum("ij,ij->i", qs, qs)
    out = np.empty(len(q))
    for i in range(0, len(q), PREDICT_CHUNK):
        j = min(i + PREDICT_CHUNK, len(q))
        t = qs[i:j] @ xs.T
        t -= half_bb
        t -= half_aa[i:j, None]
        np.minimum(t, 0.0, out=t)
        np.exp(t, out=t)
        out[i:j] = t @ comp.alpha
    return comp.signal * out


def gp_variance(comp: GprComponent, x_train, q) -> np.ndarray:
    """Latent predictive variance (noise excluded)."""
    ks = se_kernel(q, x_train, comp.signal, comp.lengths)
    v = scipy.linalg.solve_triangular(comp.factor(x_train), ks.T, lower=True,
                                      check_finite=False)
    return np.maximum(comp.signal - np.einsum("ij,ij->j", v, v), 0.0)


# ---------------------------------------------------------------- emulator

@dataclass
class EmulatorModel:
    """PCA basis, one GP per component, and the scalings that tie them."""

    pca: PcaModel
    components: list
    x_train: np.ndarray        # (n_t, D), unit-box coordinates
    lower: np.ndarray          # input offset (physical units)
    upper: np.ndarray
    score_mean: np.ndarray     # (p,)
    score_std: np.ndarray      # (p,)
    wavelengths: np.ndarray
    train_idx: np.ndarray
    val_idx: np.ndarray
    seed: int = 0
    names: tuple = ()
    validation: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict, repr=False)

    @property
    def p(self) -> int:
        return self.pca.p

    def normalize(self, x):
        return (np.asarray(x, dtype=np.float64) - self.lower) / (self.upper - self.lower)

    def truncate(self, p: int) -> "EmulatorModel":
        """Model keeping only the leading ``p`` components.

        Components are trained independently, so this equals a model
        trained with ``n_components=p`` on the same split and seed. The
        validation entry is left empty.
        """
        if not 1 <= p <= self.p:
            raise ValueError(f"cannot truncate {self.p} components to {p}")
        return replace(self, pca=self.pca.truncate(p),
                       components=self.components[:p],
                       score_mean=self.score_mean[:p].copy(),
                       score_std=self.score_std[:p].copy(), validation={})


def split_rows(n: int, fraction: float, seed: int):
    """Seeded train/validation split; validation size is floor((1-f) n)."""
    n_val = int(math.floor((1.0 - fraction) * n + 1e-9))
    if n_val < 1 or n - n_val < 1:
        raise ValueError(f"split of {n} rows at {fraction} leaves an empty set")
    perm = np.random.Generator(np.random.Philox(
        np.random.SeedSequence([int(seed), 0x5B117]))).permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def train_emulator(lut, cfg: TrainConfig, validate: bool = True) -> EmulatorModel:
    """Train on a seeded ``train_fraction`` split; score the held-out rows."""
    if lut.n < 20:
        raise ValueError(f"need at least 20 LUT rows, got {lut.n}")
    train_idx, val_idx = split_rows(lut.n, cfg.train_fraction, cfg.seed)
    x_phys = lut.design.points
    lower, upper = lut.design.lower, lut.design.upper
    span = np.where(upper > lower, upper - lower, 1.0)
    upper = lower + span
    x_all = (x_phys - lower) / span
    x_train = x_all[train_idx]
    if len(train_idx) <= cfg.n_components:
        raise ValueError("fewer training rows than PCA components")

    t0 = time.perf_counter()
    pca = fit_pca(lut.spectra[train_idx], cfg.n_components)
    scores = project(pca, lut.spectra[train_idx])
    s_mean = scores.mean(axis=0)
    s_std = scores.std(axis=0)
    s_std = np.where(s_std > 0, s_std, 1.0)
    zs = (scores - s_mean) / s_std
    timings = {"pca": time.perf_counter() - t0, "components": []}
    # hyperparameter search uses a seeded subset of the training rows
    order = np.random.Generator(np.random.Philox(
        np.random.SeedSequence([int(cfg.seed), 0x0B7]))).permutation(len(train_idx))
    comps = []
    for k in range(cfg.n_components):
        t0 = time.perf_counter()
        comp = train_component(x_train[order], zs[order, k], cfg, index=k)
        # re-express cached vectors in canonical training-row order
        inv = np.argsort(order)
        comp.alpha = comp.alpha[inv]
        comp.z = comp.z[inv]
        comp.chol = None
        comps.append(comp)
        timings["components"].append(time.perf_counter() - t0)
        log.debug("component %d trained in %.2fs (lml %.3f)", k,
                  timings["components"][-1], comp.lml)

    model = EmulatorModel(pca=pca, components=comps, x_train=x_train,
                          lower=lower, upper=upper, score_mean=s_mean,
                          score_std=s_std, wavelengths=lut.grid.wavelengths.copy(),
                          train_idx=train_idx, val_idx=val_idx, seed=cfg.seed,
                          names=lut.design.names, timings=timings)
    if validate:
        model.validation = validation_summary(model, x_phys[val_idx],
                                              lut.spectra[val_idx])
    return model


def validation_summary(model: EmulatorModel, x, spectra) -> dict:
    """Held-out error of the emulator ("code uncertainty")."""
    pred = predict(model, x).values
    rep = metrics.compare(spectra, pred, model.wavelengths, method="gpr",
                          n_components=model.p)
    qn = model.normalize(x)
    sd = [float(np.sqrt(gp_variance(c, model.x_train, qn)).mean() * s)
          for c, s in zip(model.components, model.score_std)]
    return {"n_validation": int(len(x)), "rmse": rep.rmse_mean,
            "nrmse_pct": rep.nrmse_mean,
            "score_rmse": float(np.sqrt(np.mean(
                (project(model.pca, spectra) - project(model.pca, pred)) ** 2))),
            "mean_predictive_sd": sd}


@dataclass
class PredictResult(BatchResult):
    outside: list = field(default_factory=list)


def predict(model: EmulatorModel, queries) -> PredictResult:
    """Emulated spectra for each query row (physical units).

    Queries outside the training bounds are predicted anyway and listed in
    ``outside``.
    """
    q = np.asarray(queries, dtype=np.float64).reshape(-1, model.x_train.shape[1])
    if not np.all(np.isfinite(q)):
        raise NonFiniteInput("queries contain non-finite values")
    if len(q) == 0:
        return PredictResult(np.empty((0, model.pca.mean.size)), 0.0)
    t0 = time.perf_counter()
    qn = model.normalize(q)
    scores = np.empty((len(q), model.p))
    for k, comp in enumerate(model.components):
        scores[:, k] = gp_mean(comp, model.x_train, qn)
    scores = scores * model.score_std + model.score_mean
    out = reconstruct(model.pca, scores)
    elapsed = time.perf_counter() - t0
    outside = np.flatnonzero(np.any((qn < 0) | (qn > 1), axis=1)).tolist()
    return PredictResult(out, elapsed, outside=outside)


# ----------------------------------------------------------- persistence

def save_model(model: EmulatorModel, path) -> None:
    """Write the model with the LUT container layout."""
    arrays = {
        "pca_mean": model.pca.mean,
        "pca_basis": model.pca.basis,
        "pca_explained": model.pca.explained,
        "x_train": model.x_train,
        "lower": model.lower,
        "upper": model.upper,
        "score_mean": model.score_mean,
        "score_std": model.score_std,
        "wavelengths": model.wavelengths,
        "train_idx": model.train_idx.astype(np.float64),
        "val_idx": model.val_idx.astype(np.float64),
        "log_params": np.array([c.log_params for c in model.components]),
        "alpha": np.array([c.alpha for c in model.components]),
        "z": np.array([c.z for c in model.components]),
        "jitter": np.array([c.jitter for c in model.components]),
        "lml": np.array([c.lml for c in model.components]),
    }
    meta = {"type": "emulator", "seed": model.seed, "names": list(model.names),
            "validation": model.validation}
    write_container(path, meta, arrays)


def load_model(path) -> EmulatorModel:
    meta, a = read_container(path)
    if meta.get("type") != "emulator":
        raise FormatError(f"{path}: not an emulator container")
    try:
        comps = [GprComponent(log_params=a["log_params"][k], alpha=a["alpha"][k],
                              z=a["z"][k], jitter=float(a["jitter"][k]),
                              lml=float(a["lml"][k]))
                 for k in range(a["log_params"].shape[0])]
        pca = PcaModel(a["pca_mean"], a["pca_basis"], a["pca_explained"])
        if pca.p != len(comps) or a["alpha"].shape[1] != a["x_train"].shape[0]:
            raise FormatError(f"{path}: inconsistent array shapes")
        return EmulatorModel(pca=pca, components=comps, x_train=a["x_train"],
                             lower=a["lower"], upper=a["upper"],
                             score_mean=a["score_mean"], score_std=a["score_std"],
                             wavelengths=a["wavelengths"],
                             train_idx=a["train_idx"].astype(np.int64),
                             val_idx=a["val_idx"].astype(np.int64),
                             seed=int(meta.get("seed", 0)),
                             names=tuple(meta.get("names", ())),
                             validation=meta.get("validation", {}))
    except KeyError as exc:
        raise FormatError(f"{path}: missing array {exc}") from None
