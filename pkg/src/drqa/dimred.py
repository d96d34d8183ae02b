"""Dimensionality reduction methods producing low-dimensional configurations.

Spectral methods (principal components, classical scaling, locally linear
embedding, Laplacian eigenmaps, and geodesic scaling) rely on dense symmetric
eigendecompositions and are deterministic; every eigenvector's sign is fixed
so its largest-magnitude entry is positive.  Stress majorization is iterative
and reports its full Stress history.  All methods return a
:class:`ReductionResult` bundling the embedded configuration with
method-specific diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import isotonic_regression
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path
from scipy.spatial.distance import cdist

from .geometry import Configuration, ProximityMatrix, euclidean_distances

METHODS = (
    "pca",
    "classical_mds",
    "smacof",
    "local_smacof",
    "lle",
    "isomap",
    "laplacian_eigenmaps",
)

#: Methods consuming coordinates; the others consume a distance matrix.
COORDINATE_METHODS = ("pca", "lle", "isomap", "laplacian_eigenmaps")


class DisconnectedGraphError(ValueError):
    """A neighborhood or weight graph fell apart into several components."""

    def __init__(self, message: str, component_sizes):
        sizes = sorted((int(s) for s in component_sizes), reverse=True)
        super().__init__(f"{message}: {len(sizes)} components of sizes {sizes}")
        self.n_components = len(sizes)
        self.component_sizes = sizes


@dataclass(frozen=True)
class ReductionRequest:
    """Method name, target dimensionality, method parameters, and seed."""

    method: str
    target_dim: int
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.target_dim < 1:
            raise ValueError("target_dim must be at least 1")
        object.__setattr__(self, "params", dict(self.params))


@dataclass(frozen=True, eq=False)
class ReductionResult:
    embedding: Configuration
    diagnostics: dict


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so each one's largest-magnitude entry is positive."""
    v = vectors.copy()
    for j in range(v.shape[1]):
        col = v[:, j]
        lead = col[int(np.argmax(np.abs(col)))]
        if lead < 0:
            v[:, j] = -col
    return v


def _result(x: np.ndarray, source: Configuration | None, method: str,
            diagnostics: dict) -> ReductionResult:
    labels = source.labels if source is not None else None
    emb = Configuration(np.ascontiguousarray(x), labels=labels,
                        provenance=(f"reduced:{method}",))
    return ReductionResult(emb, diagnostics)


def _require_coordinates(config: Configuration, method: str):
    if not isinstance(config, Configuration):
        raise TypeError(f"{method} needs a coordinate Configuration")
    if not config.fully_observed:
        raise ValueError(f"{method} requires a fully observed configuration")


def _require_distance(prox: ProximityMatrix, method: str):
    if not isinstance(prox, ProximityMatrix):
        raise TypeError(f"{method} needs a ProximityMatrix")
    if prox.kind != "distance":
        raise ValueError(f"{method} needs distances, got {prox.kind}")


# ---------------------------------------------------------------------------
# spectral methods on coordinates


def pca(config: Configuration, target_dim: int, use_correlation: bool = False) -> ReductionResult:
    """Principal component scores of a configuration.

    Columns are centered (and standardized to unit variance when
    ``use_correlation`` is set) and the top ``target_dim`` components are kept.
    Diagnostics carry the full eigenvalue spectrum on the covariance scale, so
    the eigenvalues sum to the total variance of the prepared data.
    """
    _require_coordinates(config, "pca")
    n, m = config.n, config.m
    if not 1 <= target_dim < m:
        raise ValueError(f"target_dim must lie in 1 .. {m - 1}, got {target_dim}")
    if n <= target_dim:
        raise ValueError(f"need more than target_dim = {target_dim} items")
    x = config.items - config.items.mean(axis=0)
    if use_correlation:
        sd = x.std(axis=0, ddof=1)
        if (sd == 0).any():
            j = int(np.argmin(sd))
            raise ValueError(f"column {j} has zero variance; correlation scaling impossible")
        x = x / sd
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    scores = _fix_signs(u[:, :target_dim]) * s[:target_dim]
    eigenvalues = np.zeros(m)
    eigenvalues[: s.size] = s**2 / (n - 1)
    total = eigenvalues.sum()
    diagnostics = {
        "method": "pca",
        "eigenvalues": eigenvalues,
        "explained_variance_ratio": eigenvalues / total if total > 0 else eigenvalues,
        "use_correlation": use_correlation,
    }
    return _result(scores, config, "pca", diagnostics)


def classical_mds(dist: ProximityMatrix, target_dim: int) -> ReductionResult:
    """Classical scaling: eigendecomposition of the double-centered squared distances.

    The scalar-product matrix is ``-0.5 * J D^2 J`` with ``J`` the centering
    projector.  Coordinates are eigenvectors scaled by root eigenvalues.
    Negative eigenvalues (non-Euclidean input) are truncated to zero in the
    reported spectrum with a diagnostics warning; if fewer than ``target_dim``
    eigenvalues are positive the input cannot support the requested
    dimensionality and is rejected, except for the all-zero matrix, which
    embeds to all zeros.
    """
    _require_distance(dist, "classical_mds")
    n = dist.n
    if not 1 <= target_dim <= n - 1:
        raise ValueError(f"target_dim must lie in 1 .. {n - 1}, got {target_dim}")
    b = -0.5 * dist.values**2
    b = b - b.mean(axis=1, keepdims=True)
    b = b - b.mean(axis=0, keepdims=True)
    b = (b + b.T) / 2.0
    evals, evecs = np.linalg.eigh(b)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    scale = float(np.abs(evals).max(initial=0.0))
    tol = max(n * np.finfo(float).eps * scale, 1e-12)
    n_positive = int((evals > tol).sum())
    n_negative = int((evals < -tol).sum())
    if scale <= tol:
        x = np.zeros((n, target_dim))
        reported = np.zeros(n)
    elif n_positive < target_dim:
        raise ValueError(
            f"only {n_positive} positive eigenvalues; cannot embed into {target_dim} dimensions"
        )
    else:
        x = _fix_signs(evecs[:, :target_dim]) * np.sqrt(evals[:target_dim])
        reported = np.maximum(evals, 0.0)
    diagnostics = {
        "method": "classical_mds",
        "eigenvalues": reported,
        "n_positive_eigenvalues": n_positive,
        "n_negative_eigenvalues": n_negative,
        "non_euclidean_warning": n_negative > 0,
    }
    return _result(x, None, "classical_mds", diagnostics)


# ---------------------------------------------------------------------------
# stress majorization


def _stress(d_embed, d_hat, weights, off):
    num = (weights * (d_embed - d_hat) ** 2)[off].sum()
    den = (weights * d_embed**2)[off].sum()
    if den <= 0:
        raise ValueError("embedded configuration collapsed to a point")
    return math.sqrt(num / den)


def _fit_ratio(d_embed, delta, weights, off):
    den = (weights * delta**2)[off].sum()
    if den <= 0:
        return np.zeros_like(delta)
    b = (weights * d_embed * delta)[off].sum() / den
    return b * delta


class _OrdinalFit:
    """Monotone regression of embedded distances on the dissimilarity order.

    Pairs are ordered once by ascending dissimilarity (ties by index, the
    primary approach: tied inputs may receive different fitted values).  Each
    call pools the current embedded distances over that order.
    """

    def __init__(self, delta, weights):
        n = delta.shape[0]
        iu, ju = np.triu_indices(n, k=1)
        w = weights[iu, ju]
        keep = w > 0
        self.iu, self.ju, self.w = iu[keep], ju[keep], w[keep]
        self.order = np.lexsort((self.ju, self.iu, delta[self.iu, self.ju]))

    def __call__(self, d_embed):
        y = d_embed[self.iu, self.ju][self.order]
        fit = isotonic_regression(y, weights=self.w[self.order]).x
        d_hat = np.zeros_like(d_embed)
        ii = self.iu[self.order]
        jj = self.ju[self.order]
        d_hat[ii, jj] = fit
        d_hat[jj, ii] = fit
        return d_hat


def _check_weights(weights, n):
    w = np.asarray(weights, dtype=float)
    if w.shape != (n, n):
        raise ValueError(f"weights must have shape ({n}, {n})")
    if (w < 0).any() or not np.isfinite(w).all():
        raise ValueError("weights must be finite and non-negative")
    if np.abs(w - w.T).max() > 1e-12:
        raise ValueError("weights must be symmetric")
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    if w.max() <= 0:
        raise ValueError("all weights are zero")
    n_comp, labels = connected_components(csr_matrix(w > 0), directed=False)
    if n_comp > 1:
        raise DisconnectedGraphError("weight graph is disconnected",
                                     np.bincount(labels))
    return w


def smacof(dist: ProximityMatrix, target_dim: int, weights=None,
           transform: str = "ratio", max_iter: int = 500, tol: float = 1e-6,
           seed: int | None = None, init: str = "classical") -> ReductionResult:
    """Stress majorization of a distance matrix.

    Minimizes normalized Stress, the root of ``sum w (d - dhat)^2`` over
    ``sum w d^2``, where ``d`` are embedded distances and ``dhat`` is the
    admissible transform of the input dissimilarities (a scale factor for
    ``"ratio"``, a monotone fit for ``"ordinal"``).  Each iteration refits the
    transform and applies one majorization update of the coordinates; if an
    update ever fails to decrease the recorded Stress it is rolled back and
    iteration stops, so the Stress history is non-increasing by construction.

    Parameters
    ----------
    dist : ProximityMatrix of kind ``"distance"``
    target_dim : int
    weights : ndarray of shape (n, n), optional
        Symmetric non-negative pair weights; zero-weight pairs are ignored by
        the objective.  The positive-weight graph must be connected.
    transform : {"ratio", "ordinal"}
    max_iter, tol :
        Stop after ``max_iter`` updates or when the relative Stress decrease
        falls below ``tol``.
    seed : int, optional
        Seeds the random start when ``init = "random"``.
    init : {"classical", "random"}
        Classical scaling start by default (falls back to a seeded random
        start if classical scaling rejects the input).
    """
    _require_distance(dist, "smacof")
    n = dist.n
    if not 1 <= target_dim <= n - 1:
        raise ValueError(f"target_dim must lie in 1 .. {n - 1}, got {target_dim}")
    if transform not in ("ratio", "ordinal"):
        raise ValueError(f"transform must be 'ratio' or 'ordinal', got {transform!r}")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    if init not in ("classical", "random"):
        raise ValueError(f"init must be 'classical' or 'random', got {init!r}")
    delta = dist.values
    unit_weights = weights is None
    if unit_weights:
        w = np.ones((n, n))
        np.fill_diagonal(w, 0.0)
    else:
        w = _check_weights(weights, n)
        unit_weights = bool((w[~np.eye(n, dtype=bool)] == 1.0).all())
    off = ~np.eye(n, dtype=bool)

    init_used = init
    x = None
    if init == "classical":
        try:
            x = classical_mds(dist, target_dim).embedding.items.copy()
        except ValueError:
            init_used = "random-fallback"
    if x is None:
        rng = np.random.default_rng(seed)
        scale = delta[off].mean() if delta[off].max() > 0 else 1.0
        x = rng.standard_normal((n, target_dim)) * scale

    solve = None
    if not unit_weights:
        v = np.diag(w.sum(axis=1)) - w
        factor = cho_factor(v + np.ones((n, n)) / n)
        solve = lambda rhs: cho_solve(factor, rhs)  # noqa: E731

    fit = _fit_ratio if transform == "ratio" else None
    ordinal = _OrdinalFit(delta, w) if transform == "ordinal" else None

    def fit_dhat(d_embed):
        if transform == "ratio":
            return fit(d_embed, delta, w, off)
        return ordinal(d_embed)

    def guttman(x_cur, d_embed, d_hat):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(d_embed > 0, d_hat / d_embed, 0.0) * w
        bmat = -ratio
        np.fill_diagonal(bmat, ratio.sum(axis=1))
        rhs = bmat @ x_cur
        return rhs / n if unit_weights else solve(rhs)

    d_embed = cdist(x, x)
    d_hat = fit_dhat(d_embed)
    history = [_stress(d_embed, d_hat, w, off)]
    converged = False
    reason = "max_iter"
    for _ in range(max_iter):
        x_new = guttman(x, d_embed, d_hat)
        d_new = cdist(x_new, x_new)
        d_hat_new = fit_dhat(d_new)
        s_new = _stress(d_new, d_hat_new, w, off)
        if s_new > history[-1]:
            converged = True
            reason = "no_decrease"
            break
        x, d_embed, d_hat = x_new, d_new, d_hat_new
        history.append(s_new)
        prev, cur = history[-2], history[-1]
        if prev - cur < tol * max(prev, np.finfo(float).tiny):
            converged = True
            reason = "stress_change"
            break
        if cur < 1e-12:
            converged = True
            reason = "stress_floor"
            break
    diagnostics = {
        "method": "smacof",
        "transform": transform,
        "stress": history[-1],
        "stress_history": np.asarray(history),
        "n_iterations": len(history) - 1,
        "converged": converged,
        "stop_reason": reason,
        "init": init_used,
    }
    return _result(x, None, "smacof", diagnostics)


def local_smacof(dist: ProximityMatrix, target_dim: int, quantile: float = 0.1,
                 **smacof_kwargs) -> ReductionResult:
    """Stress majorization restricted to the shortest distances.

    Pairs whose distance lies at or below the given quantile of all
    off-diagonal distances get unit weight; every other pair is ignored.
    Emphasizing short distances preserves local neighborhoods at the expense
    of the global layout.  If the selected pairs do not connect all items the
    call is rejected; raise the quantile to reconnect them.
    """
    _require_distance(dist, "local_smacof")
    if not 0.0 < quantile <= 1.0:
        raise ValueError(f"quantile must lie in (0, 1], got {quantile}")
    n = dist.n
    off = ~np.eye(n, dtype=bool)
    threshold = float(np.quantile(dist.values[off], quantile))
    w = (dist.values <= threshold).astype(float)
    np.fill_diagonal(w, 0.0)
    try:
        result = smacof(dist, target_dim, weights=w, **smacof_kwargs)
    except DisconnectedGraphError as err:
        raise DisconnectedGraphError(
            f"distance quantile {quantile} keeps too few pairs; raise it",
            err.component_sizes,
        ) from err
    diagnostics = dict(result.diagnostics)
    diagnostics.update({
        "method": "local_smacof",
        "quantile": quantile,
        "threshold": threshold,
        "active_pair_fraction": float(w[off].mean()),
    })
    return ReductionResult(result.embedding, diagnostics)


# ---------------------------------------------------------------------------
# neighborhood graph methods


def _neighbor_lists(x: np.ndarray, n_neighbors: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the n_neighbors nearest items per row, stable ties."""
    d = cdist(x, x)
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")
    np.fill_diagonal(d, 0.0)
    return order[:, :n_neighbors], d


def _knn_union_graph(x: np.ndarray, n_neighbors: int) -> tuple[csr_matrix, np.ndarray]:
    """Symmetric k-nearest-neighbor graph weighted by Euclidean distance."""
    n = x.shape[0]
    if not 1 <= n_neighbors <= n - 1:
        raise ValueError(f"n_neighbors must lie in 1 .. {n - 1}, got {n_neighbors}")
    nbrs, d = _neighbor_lists(x, n_neighbors)
    rows = np.repeat(np.arange(n), n_neighbors)
    cols = nbrs.ravel()
    graph = csr_matrix((d[rows, cols], (rows, cols)), shape=(n, n))
    return graph.maximum(graph.T), d


def _check_connected(graph: csr_matrix, what: str) -> None:
    n_comp, labels = connected_components(graph, directed=False)
    if n_comp > 1:
        raise DisconnectedGraphError(f"{what} graph is disconnected", np.bincount(labels))


def geodesic_distances(config: Configuration, n_neighbors: int) -> ProximityMatrix:
    """Shortest-path distances along the symmetrized k-nearest-neighbor graph.

    Edge weights are Euclidean lengths; path lengths are computed by repeated
    single-source runs.  Rejects disconnected graphs, reporting component
    sizes.
    """
    _require_coordinates(config, "geodesic_distances")
    graph, _ = _knn_union_graph(config.items, n_neighbors)
    _check_connected(graph, "neighborhood")
    geo = shortest_path(graph, method="D", directed=False)
    return ProximityMatrix(geo, "distance",
                           {"metric": "geodesic", "n_neighbors": n_neighbors})


def isomap(config: Configuration, target_dim: int, n_neighbors: int) -> ReductionResult:
    """Classical scaling of graph geodesic distances."""
    _require_coordinates(config, "isomap")
    if not 1 <= target_dim < config.m:
        raise ValueError(f"target_dim must lie in 1 .. {config.m - 1}, got {target_dim}")
    geo = geodesic_distances(config, n_neighbors)
    inner = classical_mds(geo, target_dim)
    diagnostics = dict(inner.diagnostics)
    diagnostics.update({
        "method": "isomap",
        "n_neighbors": n_neighbors,
        "n_components": 1,
        "component_sizes": [config.n],
        "geodesic_max": float(geo.values.max()),
    })
    emb = Configuration(inner.embedding.items, labels=config.labels,
                        provenance=("reduced:isomap",))
    return ReductionResult(emb, diagnostics)


def graph_laplacian(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized Laplacian ``L = D - W`` and the degree vector."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("weight matrix must be square")
    degrees = w.sum(axis=1)
    lap = np.diag(degrees) - w
    return lap, degrees


def laplacian_eigenmaps(config: Configuration, target_dim: int, n_neighbors: int,
                        t: float = math.inf) -> ReductionResult:
    """Bottom generalized eigenvectors of the neighborhood-graph Laplacian.

    Builds the symmetrized k-nearest-neighbor graph, weights edges by the heat
    kernel ``exp(-dist^2 / t)`` (or 1 when ``t`` is infinite), and solves
    ``L f = lambda D f`` through the symmetric normalized Laplacian.  The
    constant eigenvector at eigenvalue zero is discarded; the next
    ``target_dim`` eigenvectors, scaled so ``f' D f = 1``, form the embedding.
    """
    _require_coordinates(config, "laplacian_eigenmaps")
    if not 1 <= target_dim < config.m:
        raise ValueError(f"target_dim must lie in 1 .. {config.m - 1}, got {target_dim}")
    if not t > 0:
        raise ValueError(f"kernel parameter t must be positive, got {t}")
    graph, _ = _knn_union_graph(config.items, n_neighbors)
    _check_connected(graph, "neighborhood")
    adj = graph.toarray()
    if math.isinf(t):
        w = (adj > 0).astype(float)
    else:
        w = np.where(adj > 0, np.exp(-(adj**2) / t), 0.0)
    w = np.maximum(w, w.T)
    degrees = w.sum(axis=1)
    d_isqrt = 1.0 / np.sqrt(degrees)
    sym = np.eye(config.n) - (w * d_isqrt[:, None]) * d_isqrt[None, :]
    sym = (sym + sym.T) / 2.0
    evals, evecs = np.linalg.eigh(sym)
    f = evecs * d_isqrt[:, None]
    x = _fix_signs(f[:, 1 : target_dim + 1])
    diagnostics = {
        "method": "laplacian_eigenmaps",
        "eigenvalues": evals[1 : target_dim + 1],
        "kernel_t": t,
        "n_components": 1,
        "component_sizes": [config.n],
    }
    return _result(x, config, "laplacian_eigenmaps", diagnostics)


def lle(config: Configuration, target_dim: int, n_neighbors: int,
        reg: float = 1e-3) -> ReductionResult:
    """Locally linear embedding.

    Each item is expressed as an affine combination of its nearest neighbors
    (weights summing to one, least-squares optimal); the embedding consists of
    the bottom non-constant eigenvectors of ``(I - W)'(I - W)``, which
    reproduce those local combinations in few dimensions.  When a local Gram
    matrix is singular, or whenever ``n_neighbors`` exceeds the input
    dimensionality, a ridge of ``reg`` times the Gram trace is added; the
    count of regularized items is reported.
    """
    _require_coordinates(config, "lle")
    n, m = config.n, config.m
    if not 1 <= target_dim < m:
        raise ValueError(f"target_dim must lie in 1 .. {m - 1}, got {target_dim}")
    if not target_dim + 1 <= n_neighbors <= n - 1:
        raise ValueError(
            f"n_neighbors must lie in {target_dim + 1} .. {n - 1}, got {n_neighbors}"
        )
    x = config.items
    nbrs, _ = _neighbor_lists(x, n_neighbors)
    w = np.zeros((n, n))
    ones = np.ones(n_neighbors)
    regularized = 0
    for i in range(n):
        z = x[nbrs[i]] - x[i]
        gram = z @ z.T
        needs_reg = n_neighbors > m
        if not needs_reg:
            try:
                coef = np.linalg.solve(gram, ones)
            except np.linalg.LinAlgError:
                needs_reg = True
        if needs_reg:
            trace = np.trace(gram)
            gram = gram + reg * (trace if trace > 0 else 1.0) * np.eye(n_neighbors)
            coef = np.linalg.solve(gram, ones)
            regularized += 1
        total = coef.sum()
        coef = coef / total if abs(total) > 1e-300 else ones / n_neighbors
        w[i, nbrs[i]] = coef
    m_embed = np.eye(n) - w
    m_embed = m_embed.T @ m_embed
    m_embed = (m_embed + m_embed.T) / 2.0
    try:
        evals, evecs = np.linalg.eigh(m_embed)
    except np.linalg.LinAlgError as err:
        raise ValueError(f"eigen-solver failed: {err}") from err
    x_out = _fix_signs(evecs[:, 1 : target_dim + 1])
    diagnostics = {
        "method": "lle",
        "eigenvalues": evals[1 : target_dim + 1],
        "n_neighbors": n_neighbors,
        "regularization": reg,
        "regularized_items": regularized,
        "weight_row_sum_error": float(np.abs(w.sum(axis=1) - 1.0).max()),
    }
    return _result(x_out, config, "lle", diagnostics)


# ---------------------------------------------------------------------------
# dispatch


def run_reduction(request: ReductionRequest, source) -> ReductionResult:
    """Run the reduction named by ``request`` on coordinates or distances.

    Coordinate methods require a :class:`Configuration`; distance methods
    accept either a distance :class:`ProximityMatrix` or a configuration,
    from which Euclidean distances are taken.
    """
    method = request.method
    params = dict(request.params)
    labels = source.labels if isinstance(source, Configuration) else None
    if method in COORDINATE_METHODS:
        if not isinstance(source, Configuration):
            raise TypeError(f"{method} requires coordinates, not {type(source).__name__}")
        if method == "pca":
            result = pca(source, request.target_dim, **params)
        elif method == "lle":
            result = lle(source, request.target_dim, **params)
        elif method == "isomap":
            result = isomap(source, request.target_dim, **params)
        else:
            result = laplacian_eigenmaps(source, request.target_dim, **params)
    else:
        if isinstance(source, Configuration):
            source = euclidean_distances(source)
        if method != "classical_mds" and request.seed is not None:
            params.setdefault("seed", request.seed)
        if method == "classical_mds":
            result = classical_mds(source, request.target_dim, **params)
        elif method == "smacof":
            result = smacof(source, request.target_dim, **params)
        else:
            result = local_smacof(source, request.target_dim, **params)
    if labels is not None and result.embedding.labels is None:
        emb = Configuration(result.embedding.items, labels=labels,
                            provenance=result.embedding.provenance)
        result = ReductionResult(emb, result.diagnostics)
    return result
