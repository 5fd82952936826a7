"""The three winning-probability models and their fitting procedures.

All three score a position with a real number f(x) that maps to a
winning probability through the logistic curve 1/(1+exp(-f)):

* Gaussian quadratic discriminant: class-conditional normal densities
  with separate covariances give a quadratic f.
* Fisher's linear discriminant: the pooled-covariance special case,
  where f collapses to a linear function.
* Logistic regression: f = x.beta fitted by maximum likelihood via
  Newton-Raphson / iteratively reweighted least squares.

The Gaussian models exclude the constant intercept feature (a constant
column makes the covariance singular); logistic regression includes it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.special

from . import features, linalg
from .board import Position, disc_count
from .errors import OthlearnError
from .features import TerminalPosition  # noqa: F401  (re-exported for callers)


class InsufficientData(OthlearnError):
    pass


class FeatureVersionMismatch(OthlearnError):
    pass


class RequiresPooled(OthlearnError):
    pass


class Diverged(OthlearnError):
    pass


class RankDeficient(OthlearnError):
    pass


class DomainError(OthlearnError):
    pass


class FormatError(OthlearnError):
    pass


class ModelKind(str, Enum):
    QDA = "QDA"
    FISHER = "FISHER"
    LOGIT = "LOGIT"


@dataclass(frozen=True)
class LabeledExample:
    """One training observation: y successes out of n trials at `x`.

    Positions enter the pipeline with n = 1 and y = 1 (win), 0 (loss) or
    0.5 (draw, resolved by `corpus.expand_draws`); `discs` is the
    game-phase measure used for bucketing.
    """

    x: np.ndarray
    y: float
    n: int
    discs: int

    @property
    def is_win(self) -> bool:
        return self.y == self.n

    @property
    def is_loss(self) -> bool:
        return self.y == 0

    @property
    def is_draw(self) -> bool:
        return 0 < self.y < self.n


@dataclass(frozen=True)
class GaussianClassStats:
    """Per-class sample means and maximum-likelihood covariances.

    Covariances divide by the class count (not count-1). When `pooled`
    is set both classes share the single pooled covariance, which
    divides the summed scatter by the total count.
    """

    mu_w: np.ndarray
    mu_l: np.ndarray
    sigma_w: np.ndarray
    sigma_l: np.ndarray
    inv_w: np.ndarray
    inv_l: np.ndarray
    logdet_w: float
    logdet_l: float
    count_w: int
    count_l: int
    pooled: bool


@dataclass(frozen=True)
class LogisticModel:
    beta: np.ndarray
    iterations: int
    final_log_likelihood: float


@dataclass
class IrlsWorkspace:
    """Fitting state kept by the logistic fitter for inspection."""

    pi: np.ndarray
    delta: np.ndarray
    z: np.ndarray
    log_likelihood_trace: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class ModelParams:
    """A fitted model plus the metadata needed to apply it safely."""

    kind: ModelKind
    payload: GaussianClassStats | LogisticModel
    feature_version: str = features.FEATURE_VERSION
    bucket_lo: int = 4
    bucket_hi: int = 63


@dataclass(frozen=True)
class PhaseTable:
    """Disc-count buckets mapped to fitted models.

    Every model scores on the same probability scale, so values from
    different phases stay comparable. Disc counts that fall in a gap
    (a bucket that could not be fitted) use the nearest fitted bucket.
    """

    models: tuple[ModelParams, ...]

    def model_for(self, discs: int) -> ModelParams:
        if not self.models:
            raise InsufficientData("phase table is empty")
        best = None
        best_dist = None
        for m in self.models:
            if m.bucket_lo <= discs <= m.bucket_hi:
                return m
            dist = min(abs(discs - m.bucket_lo), abs(discs - m.bucket_hi))
            if best_dist is None or dist < best_dist:
                best, best_dist = m, dist
        return best

    def probability(self, p: Position) -> float:
        return evaluate(self.model_for(disc_count(p)), p)


def win_probability(score: float) -> float:
    """Logistic curve: maps a discriminant score to a probability."""
    if score >= 0:
        return 1.0 / (1.0 + math.exp(-score))
    e = math.exp(score)
    return e / (1.0 + e)


def logit(t: float) -> float:
    """Inverse of `win_probability` on (0, 1)."""
    if not 0.0 < t < 1.0:
        raise DomainError(f"logit requires 0 < t < 1, got {t}")
    return math.log(t) - math.log1p(-t)


def fit_gaussian(examples: list[LabeledExample], pooled: bool) -> GaussianClassStats:
    """Maximum-likelihood Gaussian class stats over non-intercept features.

    Expects draw-free examples (see `corpus.expand_draws`): wins have
    y = n, losses y = 0.
    """
    x_w = np.array([e.x[1:] for e in examples if e.is_win], dtype=np.float64)
    x_l = np.array([e.x[1:] for e in examples if e.is_loss], dtype=np.float64)
    if len(x_w) < 2 or len(x_l) < 2:
        raise InsufficientData(
            f"need at least 2 examples per class, got {len(x_w)} wins / {len(x_l)} losses"
        )

    mu_w = x_w.mean(axis=0)
    mu_l = x_l.mean(axis=0)
    dev_w = x_w - mu_w
    dev_l = x_l - mu_l
    scatter_w = dev_w.T @ dev_w
    scatter_l = dev_l.T @ dev_l

    if pooled:
        sigma = (scatter_w + scatter_l) / (len(x_w) + len(x_l))
        sigma_w = sigma_l = sigma
        f = linalg.spd_factor_auto(sigma)
        inv_w = inv_l = linalg.inverse(f)
        logdet_w = logdet_l = linalg.log_det(f)
    else:
        sigma_w = scatter_w / len(x_w)
        sigma_l = scatter_l / len(x_l)
        f_w = linalg.spd_factor_auto(sigma_w)
        f_l = linalg.spd_factor_auto(sigma_l)
        inv_w = linalg.inverse(f_w)
        inv_l = linalg.inverse(f_l)
        logdet_w = linalg.log_det(f_w)
        logdet_l = linalg.log_det(f_l)

    return GaussianClassStats(
        mu_w=mu_w,
        mu_l=mu_l,
        sigma_w=sigma_w,
        sigma_l=sigma_l,
        inv_w=inv_w,
        inv_l=inv_l,
        logdet_w=logdet_w,
        logdet_l=logdet_l,
        count_w=len(x_w),
        count_l=len(x_l),
        pooled=pooled,
    )


def qda_score(stats: GaussianClassStats, x: np.ndarray) -> float:
    """Quadratic discriminant score (equal class priors assumed).

    With equal covariances the quadratic term vanishes and the score
    equals `fisher_score`.
    """
    z = np.asarray(x, dtype=np.float64)[1:]
    if z.shape[0] != stats.mu_w.shape[0]:
        raise linalg.DimensionMismatch(
            f"model has {stats.mu_w.shape[0]} features, vector has {z.shape[0]}"
        )
    quad = 0.5 * (z @ (stats.inv_w - stats.inv_l) @ z)
    lin = (stats.mu_l @ stats.inv_l - stats.mu_w @ stats.inv_w) @ z
    const = 0.5 * (
        stats.mu_w @ stats.inv_w @ stats.mu_w
        - stats.mu_l @ stats.inv_l @ stats.mu_l
        + stats.logdet_w
        - stats.logdet_l
    )
    return float(-(quad + lin + const))


def fisher_score(stats: GaussianClassStats, x: np.ndarray) -> float:
    """Pooled-covariance linear discriminant score."""
    if not stats.pooled:
        raise RequiresPooled("fisher_score needs pooled covariance stats")
    z = np.asarray(x, dtype=np.float64)[1:]
    if z.shape[0] != stats.mu_w.shape[0]:
        raise linalg.DimensionMismatch(
            f"model has {stats.mu_w.shape[0]} features, vector has {z.shape[0]}"
        )
    direction = (stats.mu_w - stats.mu_l) @ stats.inv_w
    return float(direction @ (z - 0.5 * (stats.mu_w + stats.mu_l)))


def clamp_boundary_labels(examples: list[LabeledExample]) -> list[LabeledExample]:
    """Replace boundary observations so the logistic MLE exists.

    y = n becomes 99/100, y = 0 becomes 1/100; interior observations are
    untouched.
    """
    out = []
    for e in examples:
        if e.y == e.n:
            out.append(LabeledExample(x=e.x, y=99.0, n=100, discs=e.discs))
        elif e.y == 0:
            out.append(LabeledExample(x=e.x, y=1.0, n=100, discs=e.discs))
        else:
            out.append(e)
    return out


def _log_likelihood(
    x: np.ndarray, y: np.ndarray, n: np.ndarray, beta: np.ndarray
) -> float:
    eta = x @ beta
    return float(np.sum(y * eta - n * np.logaddexp(0.0, eta)))


def fit_logistic_traced(
    examples: list[LabeledExample],
    tol: float = 1e-8,
    max_iter: int = 50,
    start_pi: np.ndarray | None = None,
) -> tuple[LogisticModel, IrlsWorkspace]:
    """Newton-Raphson ML fit, returning the reweighting workspace too.

    Starts from pi_i = (y_i + 1/2)/(n_i + 1) (override with `start_pi`
    to probe starting-point sensitivity) and iterates weighted
    normal-equation solves until the largest coefficient change drops
    below `tol`. If a full step would decrease the log-likelihood the
    step is halved (up to 20 times) before giving up, so the trace of
    accepted log-likelihoods is non-decreasing.
    """
    if not examples:
        raise InsufficientData("no examples")
    x = np.array([e.x for e in examples], dtype=np.float64)
    y = np.array([e.y for e in examples], dtype=np.float64)
    n = np.array([e.n for e in examples], dtype=np.float64)
    if np.any(y <= 0) or np.any(y >= n):
        raise ValueError("boundary labels present; clamp_boundary_labels first")

    pi = (y + 0.5) / (n + 1.0) if start_pi is None else np.asarray(start_pi, float)
    ws = IrlsWorkspace(pi=pi, delta=np.empty_like(pi), z=np.empty_like(pi))
    beta: np.ndarray | None = None
    ll = -math.inf
    iterations = 0

    for _ in range(max_iter):
        delta = n * pi * (1.0 - pi)
        z = np.log(pi / (1.0 - pi)) + (y - n * pi) / delta
        try:
            proposal = linalg.weighted_normal_solve(x, delta, z)
        except linalg.NotPositiveDefinite as exc:
            raise RankDeficient(
                "design matrix is rank deficient (collinear features)"
            ) from exc

        ll_new = _log_likelihood(x, y, n, proposal)
        if beta is not None:
            halvings = 0
            while ll_new + 1e-12 < ll and halvings < 20:
                proposal = 0.5 * (beta + proposal)
                ll_new = _log_likelihood(x, y, n, proposal)
                halvings += 1
            if ll_new + 1e-12 < ll:
                raise Diverged("log-likelihood decreased after full damping")

        iterations += 1
        converged = beta is not None and float(np.max(np.abs(proposal - beta))) < tol
        beta, ll = proposal, ll_new
        pi = np.clip(scipy.special.expit(x @ beta), 1e-12, 1.0 - 1e-12)
        ws.pi, ws.delta, ws.z = pi, delta, z
        ws.log_likelihood_trace.append(ll)
        if converged:
            break

    return LogisticModel(beta=beta, iterations=iterations, final_log_likelihood=ll), ws


def fit_logistic(
    examples: list[LabeledExample],
    tol: float = 1e-8,
    max_iter: int = 50,
) -> LogisticModel:
    model, _ = fit_logistic_traced(examples, tol=tol, max_iter=max_iter)
    return model


def score_features(model: ModelParams, x: np.ndarray) -> float:
    """Raw discriminant score of a feature vector under `model`."""
    if model.kind == ModelKind.LOGIT:
        return float(np.asarray(x) @ model.payload.beta)
    if model.kind == ModelKind.FISHER:
        return fisher_score(model.payload, x)
    return qda_score(model.payload, x)


def evaluate(model: ModelParams, p: Position) -> float:
    """Winning probability of the mover in `p` under `model`."""
    if model.feature_version != features.FEATURE_VERSION:
        raise FeatureVersionMismatch(
            f"model built for {model.feature_version!r}, "
            f"extractor is {features.FEATURE_VERSION!r}"
        )
    return win_probability(score_features(model, features.extract(p)))


def evaluator(model):
    """Adapt a ModelParams, PhaseTable, or callable to `f(position)`."""
    if isinstance(model, PhaseTable):
        return model.probability
    if isinstance(model, ModelParams):
        return lambda p: evaluate(model, p)
    if callable(model):
        return model
    raise TypeError(f"cannot evaluate with {type(model).__name__}")


def heuristic_model() -> ModelParams:
    """Fixed hand-weighted evaluator for bootstrapping self-play."""
    weights = {
        "const": 0.0,
        "disc_diff": -0.02,
        "mobility_diff": 0.10,
        "potential_mobility_diff": 0.03,
        "corner_diff": 0.90,
        "x_square_diff": -0.35,
        "c_square_diff": -0.20,
        "frontier_diff": -0.05,
        "stable_edge_diff": 0.30,
        "parity": 0.10,
    }
    beta = np.array([weights[name] for name in features.FEATURE_NAMES])
    payload = LogisticModel(beta=beta, iterations=1, final_log_likelihood=0.0)
    return ModelParams(kind=ModelKind.LOGIT, payload=payload)


_MAGIC = "SFC1"


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_model(model: ModelParams, path: str | os.PathLike) -> None:
    """Write a model as decimal text; 17 significant digits round-trip
    float64 exactly."""
    lines = [
        f"{_MAGIC} {model.kind.value} {model.feature_version} "
        f"{_n_features_of(model)} {model.bucket_lo} {model.bucket_hi}"
    ]
    if model.kind == ModelKind.LOGIT:
        lines.extend(_fmt(v) for v in model.payload.beta)
    else:
        s = model.payload
        for block in (s.mu_w, s.mu_l, s.sigma_w, s.sigma_l, s.inv_w, s.inv_l):
            lines.extend(_fmt(v) for v in np.ravel(block))
        lines.append(_fmt(s.logdet_w))
        lines.append(_fmt(s.logdet_l))
        lines.append(str(s.count_w))
        lines.append(str(s.count_l))
        lines.append("1" if s.pooled else "0")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _n_features_of(model: ModelParams) -> int:
    if model.kind == ModelKind.LOGIT:
        return len(model.payload.beta)
    return len(model.payload.mu_w) + 1


def load_model(path: str | os.PathLike) -> ModelParams:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty model file")
    header = lines[0].split()
    if len(header) != 6 or header[0] != _MAGIC:
        raise FormatError(f"{path}: bad header {lines[0]!r}")
    try:
        kind = ModelKind(header[1])
        version = header[2]
        n = int(header[3])
        bucket_lo = int(header[4])
        bucket_hi = int(header[5])
    except (ValueError, KeyError) as exc:
        raise FormatError(f"{path}: bad header {lines[0]!r}") from exc
    if version == features.FEATURE_VERSION and n != features.N_FEATURES:
        raise FormatError(
            f"{path}: header says {n} features but {version!r} has "
            f"{features.N_FEATURES}"
        )

    try:
        values = [float(v) for v in lines[1:]]
    except ValueError as exc:
        raise FormatError(f"{path}: non-numeric coefficient") from exc

    if kind == ModelKind.LOGIT:
        if len(values) != n:
            raise FormatError(f"{path}: expected {n} coefficients, got {len(values)}")
        payload: GaussianClassStats | LogisticModel = LogisticModel(
            beta=np.array(values), iterations=1, final_log_likelihood=math.nan
        )
    else:
        m = n - 1
        expected = 2 * m + 4 * m * m + 5
        if len(values) != expected:
            raise FormatError(f"{path}: expected {expected} values, got {len(values)}")
        it = iter(values)

        def take(count: int) -> np.ndarray:
            return np.array([next(it) for _ in range(count)])

        mu_w = take(m)
        mu_l = take(m)
        sigma_w = take(m * m).reshape(m, m)
        sigma_l = take(m * m).reshape(m, m)
        inv_w = take(m * m).reshape(m, m)
        inv_l = take(m * m).reshape(m, m)
        logdet_w = next(it)
        logdet_l = next(it)
        count_w = int(next(it))
        count_l = int(next(it))
        pooled = next(it) != 0.0
        payload = GaussianClassStats(
            mu_w=mu_w, mu_l=mu_l, sigma_w=sigma_w, sigma_l=sigma_l,
            inv_w=inv_w, inv_l=inv_l, logdet_w=logdet_w, logdet_l=logdet_l,
            count_w=count_w, count_l=count_l, pooled=pooled,
        )
    return ModelParams(
        kind=kind, payload=payload, feature_version=version,
        bucket_lo=bucket_lo, bucket_hi=bucket_hi,
    )


def save_phase_table(table: PhaseTable, directory: str | os.PathLike) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    paths = []
    for m in table.models:
        name = f"{m.kind.value.lower()}_{m.bucket_lo:02d}_{m.bucket_hi:02d}.model"
        path = os.path.join(directory, name)
        save_model(m, path)
        paths.append(path)
    return paths


def load_phase_table(
    directory: str | os.PathLike, kind: ModelKind | None = None
) -> PhaseTable:
    names = sorted(n for n in os.listdir(directory) if n.endswith(".model"))
    models = [load_model(os.path.join(directory, n)) for n in names]
    if kind is not None:
        models = [m for m in models if m.kind == kind]
    if not models:
        raise FormatError(f"no usable .model files in {directory}")
    models.sort(key=lambda m: m.bucket_lo)
    return PhaseTable(models=tuple(models))
