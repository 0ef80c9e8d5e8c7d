"""Synchronous multi-agent primal-dual solver with compressed exchange.

One round per iteration k, in this order:

1. dual update   x_{k+1} = x_k - psi (I - W) xhat_k + tau (y_k - A z_k)
2. encode xhat_{k+1} = h + r_{k+1} Q((x_{k+1} - h)/r_{k+1}) and broadcast
   it to every neighbor (the only exchange of the round, bits metered
   per edge per direction)
3. resource update  y_{k+1} = y_k - (psi/tau) (I - W) xhat_{k+1}
4. reference update h <- (1 - alpha) h + alpha xhat_{k+1}
5. primal update z_{k+1} = z_k - gamma grad f(z_k) + gamma A'(2 x_{k+1} - x_k)

started from 1'y_0 = total demand and all other iterates at zero, so the
first round consumes xhat_0 = 0 without a prior exchange. With the identity
compressor and psi = 1 the round reduces exactly to the uncompressed
baseline iteration (x_{k+1} = W x_k + tau (y_k - A z_k), ...).

The per-iteration quantities recorded in the trace are computed against
the exact optimum from the problem oracle.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .compression import (CompressorSpec, ScalingSchedule, bits_per_message,
                          scaled_diff_encode, scaling_factor)
from .errors import ConfigurationError, DivergenceError, ParameterError
from .problem import kkt_oracle

MODES = ("baseline_duspa", "compressed")
DEFAULT_SEED = 42
DEFAULT_SCHEDULE = ScalingSchedule(h0=4.0, xi=0.9604, r_min=1e-12)


@dataclass(frozen=True)
class AlgorithmParams:
    """Step sizes and compression bookkeeping knobs for one run."""

    gamma: float
    tau: float
    psi: float = 1.0
    alpha: float = 0.5
    schedule: ScalingSchedule = DEFAULT_SCHEDULE
    mode: str = "compressed"

    def __post_init__(self):
        for name in ("gamma", "tau", "psi"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")


def default_params(spec, W, mode="compressed", schedule=None):
    """Defaults satisfying every convergence-theorem clause with margin.

    tau at 1.5x its lower threshold, gamma at 0.9x the tightest of the
    three step-size clauses, psi capped by the biased-compressor bound,
    alpha unconstrained in (0, 1) so fixed at 1/2.
    """
    tau = 1.5 * (spec.L_f * spec.l_f / (spec.L_f + spec.l_f))
    lam2 = _lambda_min(W)
    gamma = 0.9 * min(_gamma_step_bounds(spec, lam2, tau))
    psi = min(1.0, 0.9 / (3.0 * tau))
    return AlgorithmParams(gamma=gamma, tau=tau, psi=psi, alpha=0.5,
                           schedule=schedule or DEFAULT_SCHEDULE, mode=mode)


@dataclass
class AgentState:
    """Local iterates of one agent plus its view of the neighbors."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    h: np.ndarray
    x_hat_self: np.ndarray
    x_hat_neighbors: dict


@dataclass(frozen=True)
class IterationRecord:
    k: int
    residual: float
    constraint_violation: float
    dual_disagreement: float
    bits_cumulative: int
    fixed_point_residual: float
    saturations: int


CSV_HEADER = ("k,residual,constraint_violation,dual_disagreement,"
              "bits_cumulative,fixed_point_residual,saturations")


@dataclass
class Trace:
    records: list
    config_echo: dict
    seed: int
    iterates: dict = None  # {"x","y","z"} histories when requested from run()

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    def final(self):
        return self.records[-1]


def write_trace_csv(trace, path):
    """Serialize one row per iteration (shortest round-trip floats) plus a
    JSON sidecar with the resolved configuration and seed."""
    import json
    import os
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in trace.records:
            fh.write(f"{r.k},{r.residual!r},{r.constraint_violation!r},"
                     f"{r.dual_disagreement!r},{r.bits_cumulative},"
                     f"{r.fixed_point_residual!r},{r.saturations}\n")
    os.replace(tmp, path)
    sidecar = str(path) + ".json"
    with open(sidecar + ".tmp", "w") as fh:
        json.dump({"seed": trace.seed, "config": trace.config_echo}, fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    os.replace(sidecar + ".tmp", sidecar)
    return sidecar


def read_trace_csv(path):
    """Parse a trace CSV back into column arrays (keyed by header name)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {}
    for idx, name in enumerate(header):
        conv = int if name in ("k", "bits_cumulative", "saturations") else float
        cols[name] = np.array([conv(row[idx]) for row in rows])
    return cols


# ---------------------------------------------------------------------------
# initialization and the reference (per-agent) step
# ---------------------------------------------------------------------------

def init_state(spec, topology):
    """Start states: y_i = d_i (so the y-sum equals the total demand) and
    every other iterate, reference and cache at zero."""
    if topology.m != spec.m:
        raise ConfigurationError(
            f"topology has {topology.m} agents but problem has {spec.m}")
    n, d = spec.n, spec.d
    states = []
    for i in range(spec.m):
        states.append(AgentState(
            x=np.zeros(n),
            y=np.asarray(spec.demand[i], dtype=float).copy(),
            z=np.zeros(d),
            h=np.zeros(n),
            x_hat_self=np.zeros(n),
            x_hat_neighbors={j: np.zeros(n) for j in topology.neighbors(i)},
        ))
    return states


def _effective(params, compressor):
    """Baseline mode pins psi = 1 and exchanges exact states."""
    if params.mode == "baseline_duspa":
        return 1.0, CompressorSpec(kind="identity")
    return params.psi, compressor


def _stack(states):
    x = np.stack([s.x for s in states])
    y = np.stack([s.y for s in states])
    z = np.stack([s.z for s in states])
    h = np.stack([s.h for s in states])
    xhat = np.stack([s.x_hat_self for s in states])
    return x, y, z, h, xhat


def _step_arrays(x, y, z, h, xhat, W, spec, gamma, tau, psi, alpha,
                 compressor, r, rngs):
    """One synchronous round on stacked arrays; mirrors the fused kernels."""
    m, n = x.shape
    Az = np.empty((m, n))
    for i in range(m):
        Az[i] = spec.A[i] @ z[i]
    x1 = x - psi * xhat + psi * (W @ xhat) + tau * (y - Az)
    nsat = 0
    if compressor.kind == "identity":
        xhat1 = x1.copy()
    else:
        xhat1 = np.empty_like(x1)
        for i in range(m):
            xh, msg = scaled_diff_encode(x1[i], h[i], r, compressor, rngs[i])
            xhat1[i] = xh
            nsat += msg.saturations
    y1 = y - (psi / tau) * (xhat1 - W @ xhat1)
    h1 = (1.0 - alpha) * h + alpha * xhat1
    g = np.stack([c.gradient(zi) for c, zi in zip(spec.costs, z)])
    v2 = 2.0 * x1 - x
    direction = np.stack([spec.A[i].T @ v2[i] for i in range(m)])
    z1 = z - gamma * g + gamma * direction
    return x1, y1, z1, h1, xhat1, nsat


def round_bits(topology, compressor, n):
    """Accounted bits for one full round: one broadcast per edge per direction."""
    per_message = bits_per_message(compressor, n)
    return int(topology.degrees().sum()) * per_message


def step(states, params, spec, W, compressor, k, rngs, z_star=None,
         topology=None, bits_before=0):
    """One round of the algorithm on per-agent states.

    ``rngs`` holds one independent random stream per agent; ``k`` is the
    current iteration index (the encode uses the k+1 scale). Returns the
    advanced states and the metrics record for the new iterates.
    """
    W = W.entries if hasattr(W, "entries") else np.asarray(W, dtype=float)
    psi, comp = _effective(params, compressor)
    x, y, z, h, xhat = _stack(states)
    r = scaling_factor(k + 1, params.schedule)
    x1, y1, z1, h1, xhat1, nsat = _step_arrays(
        x, y, z, h, xhat, W, spec, params.gamma, params.tau, psi,
        params.alpha, comp, r, rngs)
    if not (np.isfinite(x1).all() and np.isfinite(y1).all() and np.isfinite(z1).all()) \
            or max(np.abs(x1).max(), np.abs(y1).max(), np.abs(z1).max()) > kernels.ITERATE_GUARD:
        raise DivergenceError(f"iterates exploded at round {k}", iteration=k)

    neighbor_sets = {i: list(states[i].x_hat_neighbors) for i in range(spec.m)}
    new_states = [AgentState(x=x1[i], y=y1[i], z=z1[i], h=h1[i],
                             x_hat_self=xhat1[i],
                             x_hat_neighbors={j: xhat1[j].copy()
                                              for j in neighbor_sets[i]})
                  for i in range(spec.m)]

    if z_star is None:
        z_star = kkt_oracle(spec).z_star
    if topology is not None:
        bits = bits_before + round_bits(topology, comp, spec.n)
    else:
        deg = int(np.count_nonzero(W > 0) - spec.m)
        bits = bits_before + deg * bits_per_message(comp, spec.n)
    record = IterationRecord(
        k=k,
        residual=float(np.linalg.norm(z1 - z_star)),
        constraint_violation=_cviol(z1, spec),
        dual_disagreement=float(np.linalg.norm(x1 - W @ x1)),
        bits_cumulative=bits,
        fixed_point_residual=_fp_residual_arrays(x1, y1, z1, spec, W),
        saturations=nsat,
    )
    return new_states, record


def _cviol(z, spec):
    resid = -np.asarray(spec.total_demand, dtype=float)
    for Ai, zi in zip(spec.A, z):
        resid = resid + Ai @ zi
    return float(np.linalg.norm(resid))


def _fp_residual_arrays(x, y, z, spec, W):
    g = np.stack([c.gradient(zi) for c, zi in zip(spec.costs, z)])
    ATx = np.stack([spec.A[i].T @ x[i] for i in range(spec.m)])
    Az = np.stack([spec.A[i] @ z[i] for i in range(spec.m)])
    return float(np.linalg.norm(g - ATx) + np.linalg.norm(x - W @ x)
                 + np.linalg.norm(y - Az))


def fixed_point_residual(states, spec, W, params):
    """Stationarity gap ||grad f(z) - A'x|| + ||(I - W)x|| + ||y - Az||."""
    W = W.entries if hasattr(W, "entries") else np.asarray(W, dtype=float)
    x, y, z, _, _ = _stack(states)
    return _fp_residual_arrays(x, y, z, spec, W)


# ---------------------------------------------------------------------------
# full run (fused kernels for quadratic problems)
# ---------------------------------------------------------------------------

def _agent_streams(seed, m):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(m)]


def run(spec, topology, W, params, compressor, iterations, seed=DEFAULT_SEED,
        skip_validation=False, z_star=None, config_echo=None,
        keep_iterates=False):
    """Execute ``iterations`` rounds and return the full Trace.

    Deterministic given ``seed`` (one pre-split stream per agent). Unless
    ``skip_validation`` is set, the parameters must pass the convergence
    validator for the chosen compressor. Divergence raises with the
    partial trace attached. ``keep_iterates`` stores the raw x/y/z
    histories on the trace for diagnostics.
    """
    if iterations < 1:
        raise ConfigurationError(f"iterations must be >= 1, got {iterations}")
    Wm = W.entries if hasattr(W, "entries") else np.asarray(W, dtype=float)
    psi, comp = _effective(params, compressor)
    if not skip_validation:
        report = validate_params(spec, Wm, params, comp)
        if not report.passed:
            raise ParameterError(
                "parameters fail the convergence validator "
                f"({', '.join(c.name for c in report.clauses if not c.satisfied)}); "
                "rerun with skip_validation to force\n" + report.to_text())
    if z_star is None:
        z_star = kkt_oracle(spec).z_star

    m, n, d = spec.m, spec.n, spec.d
    x = np.zeros((m, n))
    y = np.stack([np.asarray(di, dtype=float) for di in spec.demand])
    z = np.zeros((m, d))
    h = np.zeros((m, n))
    xhat = np.zeros((m, n))
    R = np.array([scaling_factor(k + 1, params.schedule) for k in range(iterations)])
    streams = _agent_streams(seed, m)
    bits_round = round_bits(topology, comp, n)

    X = np.empty((iterations, m, n))
    Y = np.empty((iterations, m, n))
    Z = np.empty((iterations, m, d))
    SAT = np.zeros(iterations, dtype=np.int64)

    if spec.is_quadratic():
        stop = _run_fused(spec, Wm, params, comp, psi, R, streams, x, y, z, h,
                          xhat, X, Y, Z, SAT)
    else:
        stop = _run_generic(spec, Wm, params, comp, psi, R, streams, x, y, z,
                            h, xhat, X, Y, Z, SAT)

    trace = _assemble_trace(spec, Wm, z_star, X[:stop], Y[:stop], Z[:stop],
                            SAT[:stop], bits_round, seed, config_echo)
    if keep_iterates:
        trace.iterates = {"x": X[:stop], "y": Y[:stop], "z": Z[:stop]}
    if stop < iterations:
        raise DivergenceError(
            f"iterates exploded at round {stop - 1} of {iterations}",
            iteration=stop - 1, trace=trace)
    return trace


def _run_fused(spec, W, params, comp, psi, R, streams, x, y, z, h, xhat,
               X, Y, Z, SAT):
    m, n = x.shape
    iters = R.shape[0]
    A = np.ascontiguousarray(np.stack(spec.A))
    AT = np.ascontiguousarray(np.stack([Ai.T for Ai in spec.A]))
    a = np.array([c.a for c in spec.costs])
    beta = np.stack([c.beta for c in spec.costs])
    comp_id = {"identity": kernels.IDENTITY, "q1": kernels.Q1,
               "q2": kernels.Q2, "q3": kernels.Q3}[comp.kind]
    if comp.kind in ("q1", "q2"):
        U = np.empty((iters, m, n))
        for i, st in enumerate(streams):
            U[:, i, :] = st.random((iters, n))
    else:
        U = np.zeros((0, 0, 0))
    lo, hi = comp.grid_bounds()
    c1 = 2.0 ** (comp.bits - 1)
    pw = 2.0 ** (1 - comp.bits)
    return kernels.run_quadratic(
        W, A, AT, a, beta, x, y, z, h, xhat, R, U, comp_id,
        float(comp.delta_p), float(lo), float(hi), c1, pw,
        params.gamma, params.tau, psi, params.alpha, X, Y, Z, SAT)


def _run_generic(spec, W, params, comp, psi, R, streams, x, y, z, h, xhat,
                 X, Y, Z, SAT):
    for k in range(R.shape[0]):
        x, y, z, h, xhat, nsat = _step_arrays(
            x, y, z, h, xhat, W, spec, params.gamma, params.tau, psi,
            params.alpha, comp, R[k], streams)
        X[k], Y[k], Z[k], SAT[k] = x, y, z, nsat
        if not (np.isfinite(x).all() and np.isfinite(y).all() and np.isfinite(z).all()) \
                or max(np.abs(x).max(), np.abs(y).max(), np.abs(z).max()) > kernels.ITERATE_GUARD:
            return k + 1
    return R.shape[0]


def _assemble_trace(spec, W, z_star, X, Y, Z, SAT, bits_round, seed, config_echo):
    K = X.shape[0]
    A3 = np.stack(spec.A)
    residual = np.linalg.norm((Z - z_star).reshape(K, -1), axis=1)
    Az = np.einsum("ind,kid->kin", A3, Z)
    total = np.asarray(spec.total_demand, dtype=float)
    cviol = np.linalg.norm(Az.sum(axis=1) - total, axis=1)
    WX = np.einsum("ij,kjn->kin", W, X)
    dual_dis = np.linalg.norm((X - WX).reshape(K, -1), axis=1)
    if spec.is_quadratic():
        a = np.array([c.a for c in spec.costs])
        beta = np.stack([c.beta for c in spec.costs])
        G = 2.0 * a.reshape(1, -1, 1) * Z + beta
    else:
        G = np.stack([[c.gradient(zi) for c, zi in zip(spec.costs, Zk)] for Zk in Z])
    ATX = np.einsum("ind,kin->kid", A3, X)
    fp = (np.linalg.norm((G - ATX).reshape(K, -1), axis=1)
          + dual_dis
          + np.linalg.norm((Y - Az).reshape(K, -1), axis=1))
    records = [IterationRecord(
        k=k, residual=float(residual[k]), constraint_violation=float(cviol[k]),
        dual_disagreement=float(dual_dis[k]), bits_cumulative=bits_round * (k + 1),
        fixed_point_residual=float(fp[k]), saturations=int(SAT[k]))
        for k in range(K)]
    echo = dict(config_echo or {})
    echo.setdefault("diagnostics", {})
    drift = float(np.abs(Y.sum(axis=(1, 2)) - total.sum()).max()) if K else 0.0
    echo["diagnostics"].update({
        "backend": kernels.active_backend(),
        "bits_per_round": bits_round,
        "max_conservation_drift": drift,
    })
    return Trace(records=records, config_echo=echo, seed=seed)


# ---------------------------------------------------------------------------
# convergence-theorem validator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClauseResult:
    name: str
    satisfied: bool
    value: float
    bound: float
    sense: str  # "<" or ">"


@dataclass(frozen=True)
class ParamReport:
    theorem: str
    clauses: tuple
    notes: tuple
    lambda2: float
    rho_B: float

    @property
    def passed(self):
        return all(c.satisfied for c in self.clauses)

    def clause(self, name):
        for c in self.clauses:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self):
        width = max(len(c.name) for c in self.clauses)
        lines = [f"validator: {self.theorem}"]
        for c in self.clauses:
            status = "pass" if c.satisfied else "FAIL"
            lines.append(f"  {c.name:<{width}}  {c.value:.6g} {c.sense} "
                         f"{c.bound:.6g}  [{status}]")
        lines += [f"  note: {t}" for t in self.notes]
        return "\n".join(lines)


def _lambda_min(W):
    if hasattr(W, "lambda_min"):
        return float(W.lambda_min)
    return float(np.linalg.eigvalsh(np.asarray(W, dtype=float))[0])


def _rho_B(spec):
    return max(float(np.linalg.eigvalsh(Ai.T @ Ai)[-1]) for Ai in spec.A)


def _gamma_step_bounds(spec, lam2, tau):
    beta = spec.L_f + spec.l_f
    rho_b = _rho_B(spec)
    return (lam2 / tau,
            lam2 / (4.0 * lam2 * beta + tau * (4.0 * rho_b + 1.0)),
            (2.0 / 3.0) / (spec.L_f + spec.l_f))


def validate_params(spec, W, params, compressor_kind="identity"):
    """Check the step sizes against the convergence-theorem hypotheses.

    ``compressor_kind`` may be a kind string or a full CompressorSpec
    (needed to resolve the q2 bit width). Purely advisory: thresholds are
    reported per clause, and the rate constants of the theorems are
    existential, so only the hypotheses are checked. lambda_2 is read as
    lambda_min(W), the only interpretation under which every eigenvalue
    inequality in the analysis closes.
    """
    q2_bits = 2
    if isinstance(compressor_kind, CompressorSpec):
        q2_bits = compressor_kind.bits
        compressor_kind = compressor_kind.kind
    lam2 = _lambda_min(W)
    beta = spec.L_f + spec.l_f
    tau, gamma, psi = params.tau, params.gamma, params.psi
    b1, b2, b3 = _gamma_step_bounds(spec, lam2, tau)
    notes = ["lambda_2 read as lambda_min(W) = %.6g" % lam2,
             "rho_B = lambda_max(A'A) = %.6g" % _rho_B(spec)]

    if compressor_kind in ("identity", "q1"):
        theorem = "unbiased bounded-variance compressor (and uncompressed limit)"
        clauses = [
            ClauseResult("tau_lower", tau > spec.L_f * spec.l_f / beta,
                         tau, spec.L_f * spec.l_f / beta, ">"),
            ClauseResult("gamma_vs_lambda2_over_tau", gamma < b1, gamma, b1, "<"),
            ClauseResult("gamma_vs_coupling", gamma < b2, gamma, b2, "<"),
            ClauseResult("gamma_vs_curvature", gamma < b3, gamma, b3, "<"),
        ]
        if compressor_kind == "q1":
            clauses.append(ClauseResult("xi_decay", params.schedule.xi < 1.0,
                                        params.schedule.xi, 1.0, "<"))
            notes.append("scale decay ratio must also exceed the (uncomputable) "
                         "contraction constant; checked empirically")
    elif compressor_kind == "q2":
        theorem = "relative-error compressor"
        C = spec.n * 4.0 ** (1 - q2_bits)
        # constant from the error-recursion bound, with tau'=2 and eps=gamma*tau
        norm_IW = 1.0 - lam2
        c1 = (3.0 * psi + 8.0 * gamma * tau * psi ** 2) * norm_IW ** 2
        notes.append("error-recursion constant uses tau'=2, eps=gamma*tau; "
                     "a set just above c1*C with tau_x=2")
        clauses = [
            ClauseResult("tau_lower", tau > spec.L_f * spec.l_f / beta,
                         tau, spec.L_f * spec.l_f / beta, ">"),
            ClauseResult("gamma_vs_lambda2_over_tau", gamma < b1, gamma, b1, "<"),
            ClauseResult("gamma_vs_curvature", gamma < b3, gamma, b3, "<"),
        ]
        feasible = c1 * C < 1.0
        clauses.append(ClauseResult("relative_error_budget", feasible, c1 * C, 1.0, "<"))
        if feasible:
            a_const = min(1.0 - 1e-9, c1 * C * (1.0 + 1e-9) + 1e-12)
            rho = 2.0 * a_const
            kappa = 4.0 * (lam2 - rho) * beta + tau * (4.0 * _rho_B(spec) + 1.0)
            clauses.append(ClauseResult("gamma_vs_residual_gap",
                                        gamma < (1.0 - rho) / tau,
                                        gamma, (1.0 - rho) / tau, "<"))
            clauses.append(ClauseResult("gamma_vs_spectral_gap",
                                        kappa > 0 and gamma < (lam2 - rho) / kappa,
                                        gamma,
                                        (lam2 - rho) / kappa if kappa > 0 else float("-inf"),
                                        "<"))
    elif compressor_kind == "q3":
        theorem = "biased bounded-error compressor"
        clauses = [
            ClauseResult("tau_lower", tau > spec.L_f * spec.l_f / beta,
                         tau, spec.L_f * spec.l_f / beta, ">"),
            ClauseResult("gamma_vs_lambda2_over_tau", gamma < b1, gamma, b1, "<"),
            ClauseResult("gamma_vs_coupling", gamma < b2, gamma, b2, "<"),
            ClauseResult("gamma_vs_curvature", gamma < b3, gamma, b3, "<"),
            ClauseResult("psi_vs_tau", psi < 1.0 / (3.0 * tau),
                         psi, 1.0 / (3.0 * tau), "<"),
            ClauseResult("xi_decay", params.schedule.xi < 1.0,
                         params.schedule.xi, 1.0, "<"),
        ]
    else:
        raise ParameterError(f"unknown compressor kind {compressor_kind!r}")
    return ParamReport(theorem=theorem, clauses=tuple(clauses),
                       notes=tuple(notes), lambda2=lam2, rho_B=_rho_B(spec))
