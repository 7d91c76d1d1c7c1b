from dataclasses import dataclass
from dataclasses import field
import logging
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import OptimizeResult
from scipy.optimize import linprog

from perturbeu.data.Dataset import Dataset
from perturbeu.data.Dataset import risk_neutral_prices
from perturbeu.utils.errors import SolverError

SOLVER_METHOD: str = "highs-ds"

SOLVER_OPTIONS: dict = {
    "primal_feasibility_tolerance": 1e-9,
    "dual_feasibility_tolerance": 1e-9,
}

# dual values below this are treated as zero when reporting binding rows
BINDING_TOLERANCE: float = 1e-9

RowLabel = Tuple


@dataclass
class _Rows:
    """Sparse rows accumulated in COO form"""

    n_vars: int
    rows: List[int] = field(default_factory=list)
    cols: List[int] = field(default_factory=list)
    vals: List[float] = field(default_factory=list)
    rhs: List[float] = field(default_factory=list)
    labels: List[RowLabel] = field(default_factory=list)

    def add(self, coefficients: dict, rhs: float, label: RowLabel) -> None:
        row = len(self.rhs)
        for col, val in coefficients.items():
            self.rows.append(row)
            self.cols.append(col)
            self.vals.append(val)
        self.rhs.append(rhs)
        self.labels.append(label)

    def matrix(self) -> Optional[sparse.csr_matrix]:
        if not self.rhs:
            return None
        return sparse.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=(len(self.rhs), self.n_vars)
        ).tocsr()

    def vector(self) -> Optional[np.ndarray]:
        if not self.rhs:
            return None
        return np.array(self.rhs, dtype=float)


@dataclass
class LogLinearProgram:
    """
    Linear program in log marginal utilities

    Variables are laid out as log v (K * S, row-major), followed
    by program specific columns. log v[0, 0] is pinned to zero;
    every program is invariant to a common shift of log v.

    Attributes
    ----------
    `kind` : str
        'oeu', 'seu' or 'average'

    `c` : np.ndarray
        Objective coefficients (minimised)

    `upper` : _Rows
        Inequality rows A_ub @ z <= b_ub

    `equal` : _Rows
        Equality rows A_eq @ z == b_eq

    `bounds` : list of (lower, upper)
        Variable bounds, None for unbounded

    """

    kind: str
    K: int
    S: int
    c: np.ndarray
    upper: _Rows
    equal: _Rows
    bounds: List[Tuple[Optional[float], Optional[float]]]

    @property
    def n_vars(self) -> int:
        return int(self.c.size)

    @property
    def n_log_v(self) -> int:
        return self.K * self.S

    def log_v(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z[: self.n_log_v]).reshape(self.K, self.S)


def _log_v_bounds(n_log_v: int) -> List[Tuple[Optional[float], Optional[float]]]:
    bounds: List[Tuple[Optional[float], Optional[float]]] = [(None, None)] * n_log_v
    bounds[0] = (0.0, 0.0)
    return bounds


def add_monotonicity_rows(rows: _Rows, d: Dataset, tie_tolerance: float = 0.0) -> int:
    """log v_a <= log v_b whenever x_a > x_b

    Flat indices a, b follow `Dataset.revealed_pairs`, which are
    also the log v column indices.

    Returns
    ----------
    int
        Number of rows added

    """
    pairs = d.revealed_pairs(tie_tolerance)
    for a, b in pairs:
        a, b = int(a), int(b)
        rows.add({a: 1.0, b: -1.0}, 0.0, ("monotonicity",) + d.entry(a) + d.entry(b))
    return len(pairs)


def build_oeu_program(d: Dataset, tie_tolerance: float = 0.0) -> LogLinearProgram:
    """Minimax program for the objective perturbation

    minimise t subject to
        log v[k, s] - log v[k, r] - t <= log rho[k, s] - log rho[k, r]
    for every observation k and ordered state pair s != r,
    plus monotonicity rows.

    """
    K, S = d.K, d.S
    n_log_v = K * S
    t_col = n_log_v
    log_rho = risk_neutral_prices(d).log_rho

    c = np.zeros(n_log_v + 1)
    c[t_col] = 1.0

    upper = _Rows(n_vars=n_log_v + 1)
    for k in range(K):
        for s in range(S):
            for r in range(S):
                if s == r:
                    continue
                upper.add(
                    {k * S + s: 1.0, k * S + r: -1.0, t_col: -1.0},
                    log_rho[k, s] - log_rho[k, r],
                    ("oeu", k, s, r),
                )
    add_monotonicity_rows(upper, d, tie_tolerance)

    bounds = _log_v_bounds(n_log_v) + [(0.0, None)]
    return LogLinearProgram(
        kind="oeu", K=K, S=S, c=c, upper=upper, equal=_Rows(n_vars=n_log_v + 1), bounds=bounds
    )


def build_seu_program(d: Dataset, tie_tolerance: float = 0.0) -> LogLinearProgram:
    """Minimax program for the subjective perturbation

    With g[k, s] = log p[k, s] - log v[k, s], minimise t subject to
        (g[k, s] - g[k, r]) - (g[l, s] - g[l, r]) <= t
    for every k < l and ordered state pair s != r. The multipliers
    cancel, so the program has no lambda columns. Swapping s and r
    gives the reversed inequality, so k < l suffices.

    """
    K, S = d.K, d.S
    n_log_v = K * S
    t_col = n_log_v
    log_p = np.log(d.prices)

    c = np.zeros(n_log_v + 1)
    c[t_col] = 1.0

    upper = _Rows(n_vars=n_log_v + 1)
    for k in range(K):
        for l in range(k + 1, K):
            for s in range(S):
                for r in range(S):
                    if s == r:
                        continue
                    upper.add(
                        {
                            k * S + s: -1.0,
                            k * S + r: 1.0,
                            l * S + s: 1.0,
                            l * S + r: -1.0,
                            t_col: -1.0,
                        },
                        -(log_p[k, s] - log_p[k, r]) + (log_p[l, s] - log_p[l, r]),
                        ("seu", k, l, s, r),
                    )
    add_monotonicity_rows(upper, d, tie_tolerance)

    bounds = _log_v_bounds(n_log_v) + [(0.0, None)]
    return LogLinearProgram(
        kind="seu", K=K, S=S, c=c, upper=upper, equal=_Rows(n_vars=n_log_v + 1), bounds=bounds
    )


def build_average_program(d: Dataset, tie_tolerance: float = 0.0) -> LogLinearProgram:
    """Least absolute perturbation program

    Columns: log v (K * S), log lambda (K), delta+ (K * S),
    delta- (K * S). For every entry

        log v[k, s] - log lambda[k] - delta+ + delta- = log rho[k, s]

    so that log eps = delta+ - delta-. Minimises the mean of
    delta+ + delta- under the monotonicity rows.

    """
    K, S = d.K, d.S
    n_log_v = K * S
    lam0 = n_log_v
    plus0 = lam0 + K
    minus0 = plus0 + n_log_v
    n_vars = minus0 + n_log_v
    log_rho = risk_neutral_prices(d).log_rho

    c = np.zeros(n_vars)
    c[plus0:] = 1.0 / n_log_v

    equal = _Rows(n_vars=n_vars)
    for k in range(K):
        for s in range(S):
            i = k * S + s
            equal.add(
                {i: 1.0, lam0 + k: -1.0, plus0 + i: -1.0, minus0 + i: 1.0},
                log_rho[k, s],
                ("entry", k, s),
            )

    upper = _Rows(n_vars=n_vars)
    add_monotonicity_rows(upper, d, tie_tolerance)

    bounds = (
        _log_v_bounds(n_log_v) + [(None, None)] * K + [(0.0, None)] * (2 * n_log_v)
    )
    return LogLinearProgram(
        kind="average", K=K, S=S, c=c, upper=upper, equal=equal, bounds=bounds
    )


def _residuals(program: LogLinearProgram, z: Optional[np.ndarray]) -> dict:
    if z is None:
        return {}

    residuals: dict = {}
    A_ub, A_eq = program.upper.matrix(), program.equal.matrix()
    if A_ub is not None:
        residuals["max_upper_violation"] = float(
            np.max(A_ub @ z - program.upper.vector(), initial=0.0)
        )
    if A_eq is not None:
        residuals["max_equality_residual"] = float(
            np.max(np.abs(A_eq @ z - program.equal.vector()), initial=0.0)
        )
    return residuals


def solve_program(program: LogLinearProgram, subject_id: str = "") -> OptimizeResult:
    """Solve with the HiGHS dual simplex

    Raises
    ----------
    SolverError
        when the solver does not report an optimal solution

    """
    res = linprog(
        program.c,
        A_ub=program.upper.matrix(),
        b_ub=program.upper.vector(),
        A_eq=program.equal.matrix(),
        b_eq=program.equal.vector(),
        bounds=program.bounds,
        method=SOLVER_METHOD,
        options=SOLVER_OPTIONS,
    )

    if res.status != 0:
        raise SolverError(
            f"{program.kind} program for {subject_id} not solved: {res.message}",
            status=res.status,
            residuals=_residuals(program, res.x),
        )

    logging.info(
        f"{program.kind} program for {subject_id}: {program.n_vars} variables, "
        f"{len(program.upper.rhs)} inequality rows, {len(program.equal.rhs)} equality rows, "
        f"objective {res.fun:.9g} after {res.nit} iteration(s)"
    )
    return res


def binding_rows(program: LogLinearProgram, res: OptimizeResult) -> List[RowLabel]:
    """Inequality rows carrying a non-zero dual value"""
    if not program.upper.labels:
        return []

    marginals = getattr(getattr(res, "ineqlin", None), "marginals", None)
    if marginals is None:
        slack = np.asarray(res.slack)
        return [lab for lab, sl in zip(program.upper.labels, slack) if sl <= BINDING_TOLERANCE]

    return [
        lab
        for lab, dual in zip(program.upper.labels, np.asarray(marginals))
        if abs(dual) > BINDING_TOLERANCE
    ]
