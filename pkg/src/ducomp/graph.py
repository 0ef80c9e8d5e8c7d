"""Communication topologies and mixing matrices.

The solver exchanges messages over an undirected connected graph and
averages with a symmetric, positive-definite, doubly stochastic weight
matrix W whose spectral gap drives consensus. The default construction
is the lazy Metropolis matrix W = (I + M)/2, which satisfies all three
requirements on any connected graph.
"""

from dataclasses import dataclass

import numpy as np

from .errors import TopologyError, WeightMatrixError

# 100x double-precision round-off of row sums at the experiment scale (m <= 50)
MATRIX_TOL = 1e-12

WEIGHT_SCHEMES = ("lazy_metropolis", "metropolis", "uniform")


@dataclass(frozen=True)
class Topology:
    """Undirected connected graph on agents 0..m-1.

    ``edges`` holds unordered pairs (i, j) with i < j and no self loops;
    self-weights live in the weight matrix, not here.
    """

    m: int
    edges: frozenset

    def __post_init__(self):
        if self.m < 1:
            raise TopologyError(f"need at least one agent, got m={self.m}")
        object.__setattr__(self, "edges",
                           frozenset(self._normalize(e) for e in self.edges))
        for i, j in self.edges:
            if i == j:
                raise TopologyError(f"self loop ({i},{j}) not allowed")
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise TopologyError(f"edge ({i},{j}) out of range for m={self.m}")
        if not self._connected():
            raise TopologyError("graph is not connected")

    @staticmethod
    def _normalize(edge):
        i, j = edge
        return (min(i, j), max(i, j))

    def _connected(self):
        if self.m == 1:
            return True
        adj = self.adjacency()
        seen = {0}
        frontier = [0]
        while frontier:
            i = frontier.pop()
            for j in adj[i]:
                if j not in seen:
                    seen.add(j)
                    frontier.append(j)
        return len(seen) == self.m

    def adjacency(self):
        adj = {i: set() for i in range(self.m)}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def neighbors(self, i):
        return sorted(self.adjacency()[i])

    def degrees(self):
        deg = np.zeros(self.m, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


@dataclass(frozen=True)
class WeightMatrix:
    """Accepted mixing matrix with its spectral diagnostics.

    ``eta`` is the spectral radius of W - 11^T/m (consensus contraction
    factor) and ``lambda_min`` the smallest eigenvalue of W.
    """

    entries: np.ndarray
    eta: float
    lambda_min: float

    @property
    def m(self):
        return self.entries.shape[0]


@dataclass(frozen=True)
class ClauseCheck:
    name: str
    passed: bool
    value: float
    threshold: str


@dataclass(frozen=True)
class ValidationReport:
    """Per-clause pass/fail outcome of the mixing-matrix requirements."""

    clauses: tuple
    symmetry_error: float
    lambda_min: float
    row_sum_error: float
    eta: float

    @property
    def all_passed(self):
        return all(c.passed for c in self.clauses)

    def clause(self, name):
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)


def build_ring(m):
    """Cycle graph on m agents (a single edge when m == 2)."""
    if m < 2:
        raise TopologyError(f"ring needs m >= 2, got {m}")
    if m == 2:
        edges = {(0, 1)}
    else:
        edges = {(i, (i + 1) % m) for i in range(m)}
    return Topology(m=m, edges=frozenset(edges))


def _metropolis(topology):
    deg = topology.degrees()
    M = np.zeros((topology.m, topology.m))
    for i, j in topology.edges:
        w = 1.0 / (1.0 + max(deg[i], deg[j]))
        M[i, j] = w
        M[j, i] = w
    np.fill_diagonal(M, 1.0 - M.sum(axis=1))
    return M


def _spectral(W):
    """(eta, lambda_min) via dense symmetric eigendecomposition."""
    m = W.shape[0]
    eta = float(np.abs(np.linalg.eigvals(W - np.ones((m, m)) / m)).max())
    if np.abs(W - W.T).max() < MATRIX_TOL:
        lam_min = float(np.linalg.eigvalsh(W)[0])
    else:
        lam_min = float(np.linalg.eigvals(W).real.min())
    return eta, lam_min


def build_weight_matrix(topology, scheme="lazy_metropolis"):
    """Construct the mixing matrix for ``topology`` and verify every clause.

    ``lazy_metropolis`` (default) returns (I + M)/2 with M the Metropolis
    matrix, which is positive definite on any connected graph; plain
    ``metropolis`` and the complete-graph ``uniform`` averaging matrix are
    provided for comparison and may be rejected by the validity check.
    """
    m = topology.m
    if scheme == "lazy_metropolis":
        W = (np.eye(m) + _metropolis(topology)) / 2.0
    elif scheme == "metropolis":
        W = _metropolis(topology)
    elif scheme == "uniform":
        if len(topology.edges) != m * (m - 1) // 2:
            raise WeightMatrixError("uniform scheme requires a complete graph")
        W = np.full((m, m), 1.0 / m)
    else:
        raise WeightMatrixError(
            f"unknown weight scheme {scheme!r}, expected one of {WEIGHT_SCHEMES}")

    report = validate_weights(W)
    failed = [c.name for c in report.clauses if not c.passed]
    if not _sparsity_matches(W, topology):
        failed.append("sparsity")
    if failed:
        raise WeightMatrixError(
            f"scheme {scheme!r} produced an invalid weight matrix "
            f"(failed: {', '.join(failed)}; lambda_min={report.lambda_min:.3e}, "
            f"eta={report.eta:.6f})")
    return WeightMatrix(entries=W, eta=report.eta, lambda_min=report.lambda_min)


def _sparsity_matches(W, topology):
    edges = topology.edges
    for i in range(topology.m):
        for j in range(topology.m):
            is_link = i == j or (min(i, j), max(i, j)) in edges
            if is_link != (W[i, j] > 0):
                return False
    return True


def validate_weights(W):
    """Check an arbitrary square matrix against the mixing-matrix clauses.

    Failures are report entries, never exceptions.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise WeightMatrixError(f"expected a square matrix, got shape {W.shape}")
    sym_err = float(np.abs(W - W.T).max())
    row_err = float(np.abs(W.sum(axis=1) - 1.0).max())
    eta, lam_min = _spectral(W)
    clauses = (
        ClauseCheck("symmetry", sym_err < MATRIX_TOL, sym_err,
                    f"|W - W^T|_max < {MATRIX_TOL}"),
        ClauseCheck("positive_definiteness", lam_min > 0.0, lam_min,
                    "lambda_min(W) > 0"),
        ClauseCheck("stochasticity", row_err < MATRIX_TOL, row_err,
                    f"|W @ 1 - 1|_max < {MATRIX_TOL}"),
        ClauseCheck("connectivity", eta < 1.0, eta,
                    "spectral_radius(W - 11^T/m) < 1"),
    )
    return ValidationReport(clauses=clauses, symmetry_error=sym_err,
                            lambda_min=lam_min, row_sum_error=row_err, eta=eta)


def weights_to_csv(W, path):
    """Dump a weight matrix as row-major CSV at full precision."""
    with open(path, "w") as fh:
        for row in np.asarray(W):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
