"""Coupled-constraint problem data and the exact KKT oracle.

Agents minimize a sum of local costs subject to one coupled equality
constraint sum_i A_i z_i = sum_i d_i. The built-in instance is quadratic
generator dispatch: scalar output per agent, A_i = [1], total demand D
split evenly into per-agent demands.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CostModelError, DegenerateProblemError, ShapeError

ORACLE_TOL = 1e-9
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class QuadraticCost:
    """f(z) = a * z'z + beta'z + c with a > 0 (so l = L = 2a)."""

    a: float
    beta: np.ndarray
    c: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise CostModelError(f"quadratic coefficient must be positive, got {self.a}")
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))

    @property
    def d(self):
        return self.beta.shape[0]

    @property
    def smoothness(self):
        return 2.0 * self.a

    @property
    def strong_convexity(self):
        return 2.0 * self.a

    def value(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return float(self.a * (z @ z) + self.beta @ z + self.c)

    def gradient(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return 2.0 * self.a * z + self.beta


def cost_value(cost, z):
    return cost.value(z)


def cost_gradient(cost, z):
    return cost.gradient(z)


@dataclass(frozen=True)
class ProblemSpec:
    """Problem data: m agents, costs, coupling matrices, per-agent demands."""

    costs: tuple
    A: tuple          # m coupling matrices, each (n, d)
    demand: tuple     # m demand vectors, each (n,)
    L_f: float = field(init=False)
    l_f: float = field(init=False)

    def __post_init__(self):
        if not self.costs:
            raise CostModelError("need at least one agent")
        A = tuple(np.atleast_2d(np.asarray(Ai, dtype=float)) for Ai in self.A)
        demand = tuple(np.atleast_1d(np.asarray(di, dtype=float)) for di in self.demand)
        if not (len(A) == len(demand) == len(self.costs)):
            raise ShapeError("costs, A and demand must all have one entry per agent")
        n, d = A[0].shape
        if n > d:
            raise ShapeError(f"coupling matrices must have n <= d, got shape {(n, d)}")
        for Ai, di, ci in zip(A, demand, self.costs):
            if Ai.shape != (n, d) or di.shape != (n,) or ci.d != d:
                raise ShapeError("inconsistent per-agent dimensions")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "demand", demand)
        object.__setattr__(self, "L_f", max(c.smoothness for c in self.costs))
        object.__setattr__(self, "l_f", min(c.strong_convexity for c in self.costs))

    @property
    def m(self):
        return len(self.costs)

    @property
    def n(self):
        return self.A[0].shape[0]

    @property
    def d(self):
        return self.A[0].shape[1]

    @property
    def total_demand(self):
        return np.sum(np.stack(self.demand), axis=0)

    def is_quadratic(self):
        return all(isinstance(c, QuadraticCost) for c in self.costs)

    def is_scalar_dispatch(self):
        return (self.n == 1 and self.d == 1
                and all(np.allclose(Ai, 1.0) for Ai in self.A))


@dataclass(frozen=True)
class OptimalSolution:
    """Exact optimum: primal block z*, constraint multiplier, objective value."""

    z_star: np.ndarray      # (m, d)
    lambda_star: np.ndarray  # (n,)
    objective: float


def build_dispatch_instance(rows, total_demand):
    """Quadratic dispatch spec from (a, beta, c) rows and a total demand.

    Every agent couples through A_i = [1]; the demand is split evenly,
    which is immaterial to the solver (only the sum enters the dynamics
    through the initialization).
    """
    rows = list(rows)
    if not rows:
        raise CostModelError("need at least one generator row")
    if not np.isfinite(total_demand):
        raise CostModelError(f"total demand must be finite, got {total_demand}")
    costs = tuple(QuadraticCost(a=float(a), beta=np.array([float(b)]), c=float(c))
                  for a, b, c in rows)
    m = len(rows)
    A = tuple(np.array([[1.0]]) for _ in range(m))
    demand = tuple(np.array([float(total_demand) / m]) for _ in range(m))
    return ProblemSpec(costs=costs, A=A, demand=demand)


def kkt_oracle(spec):
    """Exact optimum of a quadratic spec from its first-order conditions.

    Scalar dispatch uses the closed form
    lambda* = (D + sum beta_i/(2 a_i)) / sum 1/(2 a_i),
    z*_i = (lambda* - beta_i)/(2 a_i); the general quadratic case solves
    the reduced n x n system sum_i A_i A_i'/(2 a_i) lambda = sum_i d_i +
    sum_i A_i beta_i/(2 a_i).
    """
    if not spec.is_quadratic():
        raise CostModelError("the exact oracle requires quadratic costs")
    a = np.array([c.a for c in spec.costs])
    if spec.is_scalar_dispatch():
        beta = np.array([c.beta[0] for c in spec.costs])
        D = float(spec.total_demand[0])
        lam = (D + np.sum(beta / (2.0 * a))) / np.sum(1.0 / (2.0 * a))
        z = (lam - beta) / (2.0 * a)
        lam_star = np.array([lam])
        z_star = z.reshape(spec.m, 1)
    else:
        n = spec.n
        H = np.zeros((n, n))
        rhs = np.asarray(spec.total_demand, dtype=float).copy()
        for Ai, ci in zip(spec.A, spec.costs):
            H += (Ai @ Ai.T) / (2.0 * ci.a)
            rhs += Ai @ ci.beta / (2.0 * ci.a)
        if np.linalg.cond(H) > CONDITION_LIMIT:
            raise DegenerateProblemError(
                f"KKT system is numerically singular (cond > {CONDITION_LIMIT:.0e})")
        lam_star = np.linalg.solve(H, rhs)
        z_star = np.stack([(Ai.T @ lam_star - ci.beta) / (2.0 * ci.a)
                           for Ai, ci in zip(spec.A, spec.costs)])
    objective = float(sum(c.value(zi) for c, zi in zip(spec.costs, z_star)))
    return OptimalSolution(z_star=z_star, lambda_star=lam_star, objective=objective)


def constraint_violation(z, spec):
    """Euclidean norm of sum_i A_i z_i - sum_i d_i."""
    z = np.asarray(z, dtype=float)
    if z.size != spec.m * spec.d:
        raise ShapeError(f"expected {spec.m * spec.d} primal entries, got {z.size}")
    z = z.reshape(spec.m, spec.d)
    resid = -np.asarray(spec.total_demand, dtype=float)
    for Ai, zi in zip(spec.A, z):
        resid = resid + Ai @ zi
    return float(np.linalg.norm(resid))
