"""Continuous piecewise-polynomial collocation for linear and semi-nonlinear IAEs.

The solver works in the space of globally continuous piecewise polynomials.
With collocation parameters c = (c_1, ..., c_m) and c_1 = 0, each mesh
interval [t_n, t_n + h] carries a degree-m polynomial represented by its
values at the local nodes (c_1, ..., c_m, 1); the left-end value is pinned
to the previous interval's right-end value, so continuity holds by
construction.  The unknowns of interval n are then determined by the
collocation equations at the interior points t_n + c_i h (i >= 2) together
with the equation at the right endpoint t_{n+1}, which is exactly the
c_1 = 0 collocation equation of the next interval read across the
continuity joint.

That assignment matters for singular A: collocated at t_n with a zero-width
current integral, the algebraic rows contain no unknown of interval n at
all, so a scheme that keeps the equation on its own interval has a
structurally singular Jacobian and falls apart on problems whose first-kind
rows need two differentiations.  Read as the closing equation of interval
n-1 instead, the same rows involve the full integral over that interval and
every one of its nodal values; the system becomes exactly determined and,
with the parameters used here, stable.

When c_1 > 0 there is no equation to pass across the joint; the nodes are
(0, c_1, ..., c_m) and all m collocation equations stay on their own
interval, which is the standard continuous scheme for second-kind systems.

History and partial integrals use a fixed Gauss-Legendre rule applied to the
interval interpolants.  Newton failures are recorded, not raised: a solve
that stops converging after an index change is the phenomenon of interest,
and the partial solution up to that step is returned with the failure
record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .problems import LinearIAE, SemiNonlinearIAE


@dataclass
class CollocationConfig:
    c: tuple = (0.0, 0.7, 0.9)
    h: float = 0.025
    quad_order: int = 8
    newton_tol: float = 1e-12
    newton_max_iter: int = 25

    def validate(self):
        c = np.asarray(self.c, dtype=float)
        if c.size < 1 or np.any(np.diff(c) <= 0) or c[0] < 0 or c[-1] > 1:
            raise InvalidInputError(
                "collocation parameters must be distinct, increasing, inside [0, 1]")
        if self.h <= 0:
            raise InvalidInputError("h must be positive")
        if self.quad_order < 1:
            raise InvalidInputError("quad_order must be positive")
        if self.newton_tol <= 0 or self.newton_max_iter < 1:
            raise InvalidInputError("bad Newton settings")

    def tau_nodes(self) -> np.ndarray:
        """Interpolation nodes on [0, 1]: the collocation parameters plus
        whichever interval endpoint they do not already contain."""
        c = np.asarray(self.c, dtype=float)
        if c[0] == 0.0:
            return np.append(c, 1.0) if c[-1] < 1.0 else c
        return np.concatenate(([0.0], c))


def _lagrange_weights(nodes: np.ndarray, tau: float) -> np.ndarray:
    """Values of the Lagrange basis polynomials for ``nodes`` at ``tau``."""
    m = nodes.size
    out = np.ones(m)
    for j in range(m):
        for l in range(m):
            if l != j:
                out[j] *= (tau - nodes[l]) / (nodes[j] - nodes[l])
    return out


@dataclass
class PiecewiseSolution:
    """Continuous piecewise polynomial: values at local nodes per interval.

    ``tau_nodes`` always contains 0 and, when the collocation parameters do
    not reach it, the right endpoint 1; adjacent intervals share the joint
    value, so evaluation is continuous across the mesh.
    """

    t_start: float
    h: float
    c: np.ndarray
    tau_nodes: np.ndarray
    nodal_values: np.ndarray  # shape (N, n_nodes, r)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.tau_nodes = np.asarray(self.tau_nodes, dtype=float)
        self.nodal_values = np.asarray(self.nodal_values, dtype=float)
        if self.nodal_values.ndim != 3 or self.nodal_values.shape[1] != self.tau_nodes.size:
            raise InvalidInputError("nodal_values must have shape (N, n_nodes, r)")

    @property
    def n_intervals(self) -> int:
        return self.nodal_values.shape[0]

    @property
    def r(self) -> int:
        return self.nodal_values.shape[2]

    @property
    def degree(self) -> int:
        return self.tau_nodes.size - 1

    @property
    def mesh(self) -> np.ndarray:
        return self.t_start + self.h * np.arange(self.n_intervals + 1)

    @property
    def t_end(self) -> float:
        return self.t_start + self.h * self.n_intervals

    def interval_of(self, t: float) -> int:
        n = int(np.floor((t - self.t_start) / self.h))
        return min(max(n, 0), self.n_intervals - 1)

    def eval_local(self, n: int, tau: float) -> np.ndarray:
        return _lagrange_weights(self.tau_nodes, tau) @ self.nodal_values[n]

    def __call__(self, t: float) -> np.ndarray:
        if self.n_intervals == 0:
            raise InvalidInputError("empty solution")
        slack = 1e-9 * max(1.0, abs(self.t_start), abs(self.t_end))
        if not (self.t_start - slack <= t <= self.t_end + slack):
            raise InvalidInputError(
                f"t={t} outside solved span [{self.t_start}, {self.t_end}]")
        n = self.interval_of(t)
        tau = (t - (self.t_start + n * self.h)) / self.h
        return self.eval_local(n, min(max(tau, 0.0), 1.0))

    def collocation_times(self) -> np.ndarray:
        ts = self.t_start + self.h * np.arange(self.n_intervals)[:, None] + self.h * self.c[None, :]
        return ts.ravel()


def _kernel_of(p):
    if isinstance(p, LinearIAE):
        return (lambda t, s, y: p.k(t, s) @ y), (lambda t, s, y: p.k(t, s)), True
    if isinstance(p, SemiNonlinearIAE):
        return p.kappa, p.kappa_jacobian, False
    raise InvalidInputError(f"expected an IAE problem, got {type(p)}")


@dataclass
class _Scheme:
    """Per-solve constant data: nodes, Gauss rules, basis weights."""

    nodes: np.ndarray       # interpolation nodes in [0, 1]
    eq_taus: np.ndarray     # local positions of the interval's equations
    h: float
    gauss_x: np.ndarray
    gauss_w: np.ndarray
    hist_tau: np.ndarray    # Gauss nodes mapped to [0, 1]
    hist_w: np.ndarray      # matching weights (x h gives ds)
    hist_basis: np.ndarray  # (q, n_nodes) Lagrange weights at hist_tau
    part_tau: list = field(default_factory=list)    # per equation: nodes in [0, eq_tau]
    part_w: list = field(default_factory=list)
    part_basis: list = field(default_factory=list)  # per equation: (q, n_nodes)


def _build_scheme(c: np.ndarray, nodes: np.ndarray, h: float, quad_order: int) -> _Scheme:
    # equations owned by an interval: its collocation points with tau > 0,
    # plus the right-end closure when c starts at 0 (that closing equation
    # is the next interval's tau = 0 collocation equation)
    if c[0] == 0.0:
        eq_taus = np.append(c[1:], 1.0) if nodes[-1] == 1.0 and c[-1] < 1.0 else c[1:]
    else:
        eq_taus = c.copy()
    x, w = np.polynomial.legendre.leggauss(quad_order)
    hist_tau = 0.5 * (x + 1.0)
    hist_w = 0.5 * w
    hist_basis = np.array([_lagrange_weights(nodes, tau) for tau in hist_tau])
    sch = _Scheme(nodes=nodes, eq_taus=eq_taus, h=h, gauss_x=x, gauss_w=w,
                  hist_tau=hist_tau, hist_w=hist_w, hist_basis=hist_basis)
    for tau_eq in eq_taus:
        tau_i = 0.5 * tau_eq * (x + 1.0)
        w_i = 0.5 * tau_eq * w
        sch.part_tau.append(tau_i)
        sch.part_w.append(w_i)
        sch.part_basis.append(np.array([_lagrange_weights(nodes, tau) for tau in tau_i]))
    return sch


def _history(kappa, sch: _Scheme, values: np.ndarray, n: int, t_eval: float,
             a: float, r: int) -> np.ndarray:
    """∫ over the n completed intervals of κ(t_eval, s, u(s)) ds."""
    acc = np.zeros(r)
    for j in range(n):
        t_j = a + j * sch.h
        u_at = sch.hist_basis @ values[j]  # (q, r)
        for g in range(sch.hist_tau.size):
            s = t_j + sch.hist_tau[g] * sch.h
            acc = acc + sch.h * sch.hist_w[g] * np.asarray(kappa(t_eval, s, u_at[g]), dtype=float)
    return acc


def _consistent_start(p, a: float):
    """Initial value at a: the exact solution when known, else least squares.

    The least-squares fallback only recovers what A(a)y = f(a) determines;
    components in ker A of higher-index problems are not recoverable from
    the data alone, so a warning is attached.
    """
    if getattr(p, "exact", None) is not None:
        return np.atleast_1d(np.asarray(p.exact(a), dtype=float)), None
    y, *_ = np.linalg.lstsq(p.A(a), np.atleast_1d(np.asarray(p.f(a), dtype=float)),
                            rcond=None)
    return y, ("initial value at t=%g taken as least-squares solution of "
               "A(a) y = f(a); kernel-of-A components are a guess" % a)


def solve_iae(p, cfg: CollocationConfig, interval=None):
    """March the collocation scheme across the mesh; returns (solution, diagnostics).

    Diagnostics carry per-step Newton iterations, final residual norms and
    Newton-matrix condition numbers, plus a failure record if a step did
    not converge (the solution then covers only the completed steps).
    """
    cfg.validate()
    kappa, kappa_jac, linear = _kernel_of(p)
    a, b = p.interval if interval is None else (float(interval[0]), float(interval[1]))
    if abs(a - p.t_start) > 1e-12:
        raise InvalidInputError(
            f"solve must start at the integral origin t_start={p.t_start}, got {a}")
    if b <= a or b > p.T + 1e-9:
        raise InvalidInputError(f"bad interval [{a}, {b}] for problem on [{p.t_start}, {p.T}]")
    n_steps_f = (b - a) / cfg.h
    n_steps = int(round(n_steps_f))
    if n_steps < 1 or abs(n_steps_f - n_steps) > 1e-8 * max(1.0, n_steps):
        raise InvalidInputError(f"(b - a)/h = {n_steps_f} is not a whole number of steps")

    c = np.asarray(cfg.c, dtype=float)
    nodes = cfg.tau_nodes()
    sch = _build_scheme(c, nodes, cfg.h, cfg.quad_order)
    n_nodes = nodes.size
    n_eq = sch.eq_taus.size        # equations per interval = free nodes per interval
    r = p.r

    y_start, start_warning = _consistent_start(p, a)
    if y_start.shape != (r,):
        raise InvalidInputError("initial value has wrong dimension")

    values = np.zeros((n_steps, n_nodes, r))
    diag = {
        "newton_iters": [], "residual_norms": [], "condition_numbers": [],
        "failure": None,
        "warnings": [start_warning] if start_warning else [],
        "config": {"c": [float(x) for x in c], "h": cfg.h,
                   "quad_order": cfg.quad_order, "newton_tol": cfg.newton_tol,
                   "newton_max_iter": cfg.newton_max_iter},
    }
    # the data themselves must satisfy the equation at t = a
    f_a = np.atleast_1d(np.asarray(p.f(a), dtype=float))
    start_defect = float(np.linalg.norm(p.A(a) @ y_start - f_a))
    diag["start_consistency"] = start_defect
    if start_defect > 1e-8 * (1.0 + float(np.linalg.norm(f_a))):
        diag["warnings"].append(
            f"initial data violate A(a)y = f(a) by {start_defect:.3e}")

    left_value = y_start
    completed = 0
    for n in range(n_steps):
        t_n = a + n * cfg.h
        t_eq = t_n + sch.eq_taus * cfg.h
        a_eq = [p.A(t) for t in t_eq]
        f_eq = [np.atleast_1d(np.asarray(p.f(t), dtype=float)) for t in t_eq]
        hist = [_history(kappa, sch, values[:n], n, t, a, r) for t in t_eq]

        # initial guess: the previous interval's right-end value, carried
        # forward unchanged (first interval: the consistent start value)
        free_guess = np.tile(left_value, (n_eq, 1))

        u_free = free_guess.copy()
        converged = False
        iters = 0
        res_norm = np.inf
        cond = np.inf
        for it in range(1, cfg.newton_max_iter + 1):
            iters = it
            u_all = np.vstack([left_value[None, :], u_free])  # (n_nodes, r)
            big_res = np.zeros(n_eq * r)
            big_jac = np.zeros((n_eq * r, n_eq * r))
            # overflow while probing a divergent iterate is expected; the
            # finiteness checks below turn it into a clean non-convergence
            with np.errstate(over="ignore", invalid="ignore"):
                for i in range(n_eq):
                    rows = slice(i * r, (i + 1) * r)
                    part = np.zeros(r)
                    jac_blocks = [np.zeros((r, r)) for _ in range(n_nodes)]
                    for g in range(sch.part_tau[i].size):
                        wgt = cfg.h * sch.part_w[i][g]
                        if wgt == 0.0:
                            continue
                        s = t_n + sch.part_tau[i][g] * cfg.h
                        basis = sch.part_basis[i][g]
                        u_s = basis @ u_all
                        part += wgt * np.asarray(kappa(t_eq[i], s, u_s), dtype=float)
                        kj = np.asarray(kappa_jac(t_eq[i], s, u_s), dtype=float)
                        for j in range(n_nodes):
                            if basis[j] != 0.0:
                                jac_blocks[j] += wgt * basis[j] * kj
                    eq_node = i + 1  # equation positions line up with nodes[1:]
                    big_res[rows] = a_eq[i] @ u_all[eq_node] + hist[i] + part - f_eq[i]
                    jac_blocks[eq_node] = jac_blocks[eq_node] + a_eq[i]
                    for j in range(1, n_nodes):
                        cols = slice((j - 1) * r, j * r)
                        big_jac[rows, cols] = jac_blocks[j]
            res_norm = float(np.linalg.norm(big_res))
            if not np.all(np.isfinite(big_res)) or not np.all(np.isfinite(big_jac)):
                break
            try:
                delta = np.linalg.solve(big_jac, -big_res)
            except np.linalg.LinAlgError:
                break
            u_free = u_free + delta.reshape(n_eq, r)
            if not np.all(np.isfinite(u_free)):
                break
            if np.linalg.norm(delta) <= cfg.newton_tol * (1.0 + np.linalg.norm(u_free)):
                converged = True
                cond = float(np.linalg.cond(big_jac))
                break
            if linear:
                # affine equations: the first full step is exact
                converged = True
                cond = float(np.linalg.cond(big_jac))
                break

        diag["newton_iters"].append(iters)
        diag["residual_norms"].append(res_norm)
        diag["condition_numbers"].append(cond)
        if not converged:
            diag["failure"] = {"step": n, "t": t_n,
                               "reason": "Newton iteration did not converge"}
            break
        values[n, 0] = left_value
        values[n, 1:] = u_free
        left_value = values[n, -1] if nodes[-1] == 1.0 else \
            _lagrange_weights(nodes, 1.0) @ values[n]
        completed = n + 1

    sol = PiecewiseSolution(t_start=a, h=cfg.h, c=c.copy(), tau_nodes=nodes.copy(),
                            nodal_values=values[:completed].copy())
    return sol, diag


def residual(p, sol: PiecewiseSolution, probe_grid) -> np.ndarray:
    """Defining-equation residual norms at probe points, using the same
    per-interval Gauss machinery as the solver."""
    kappa, _, _ = _kernel_of(p)
    sch = _build_scheme(sol.c, sol.tau_nodes, sol.h, 8)
    probe_grid = np.asarray(probe_grid, dtype=float)
    lo, hi = sol.t_start, sol.t_end
    if probe_grid.size == 0 or probe_grid.min() < lo - 1e-9 or probe_grid.max() > hi + 1e-9:
        raise InvalidInputError(f"probe grid must lie inside the solved span [{lo}, {hi}]")
    x, w = sch.gauss_x, sch.gauss_w
    out = np.empty(probe_grid.size)
    for idx, t in enumerate(probe_grid):
        t = float(min(max(t, lo), hi))
        n = sol.interval_of(t)
        t_n = sol.t_start + n * sol.h
        acc = _history(kappa, sch, sol.nodal_values[:n], n, t, sol.t_start, sol.r)
        # partial piece of the current interval, [t_n, t]
        width = t - t_n
        if width > 0.0:
            for g in range(x.size):
                s = t_n + 0.5 * width * (x[g] + 1.0)
                tau = (s - t_n) / sol.h
                u_s = sol.eval_local(n, tau)
                acc = acc + 0.5 * width * w[g] * np.asarray(kappa(t, s, u_s), dtype=float)
        u_t = sol(t)
        res = p.A(t) @ u_t + acc - np.atleast_1d(np.asarray(p.f(t), dtype=float))
        out[idx] = float(np.linalg.norm(res))
    return out
