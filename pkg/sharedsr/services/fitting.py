"""
Parameter identification for sharing-aware expressions.

Predictions resolve every parameter leaf to the individual value active for
the row's category values. The Jacobian is stored row-compressed with one
entry per terminal and row, so memory and time grow as O(n * m) instead of
O(n * k).
"""

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from sharedsr.exceptions import BindingShapeError, FitError
from sharedsr.models.binding import ParameterBinding, ParameterLayout
from sharedsr.models.dataset import Dataset
from sharedsr.models.expression import Expression, terminal_kinds
from sharedsr.models.schemas import FitOptions
from sharedsr.services.evaluation import evaluate

logger = logging.getLogger(__name__)

MAX_DAMPING = 1e20


@dataclass(frozen=True)
class FitResult:
    """Outcome of one parameter identification."""

    binding: ParameterBinding
    sse: float
    r_squared: float | None
    n_iterations: int
    converged: bool


def _check_binding(expr: Expression, binding: ParameterBinding, ds: Dataset) -> None:
    if terminal_kinds(expr) != binding.layout.kinds:
        raise BindingShapeError("binding terminals do not match the expression")
    if binding.layout.schema != ds.schema:
        raise BindingShapeError("binding schema does not match the dataset")


def predict(expr: Expression, binding: ParameterBinding, ds: Dataset) -> np.ndarray:
    """
    Evaluate the expression on every row of ``ds``.

    Raises:
        BindingShapeError: If the binding does not fit the expression or schema.
    """
    _check_binding(expr, binding, ds)
    value, _ = evaluate(
        expr, ds.features, binding.active_values(ds), binding.layout.n_terminals
    )
    return value


def residuals(expr: Expression, binding: ParameterBinding, ds: Dataset) -> np.ndarray:
    """Observed minus predicted, in row order."""
    return ds.target - predict(expr, binding, ds)


def sparse_jacobian(
    expr: Expression, binding: ParameterBinding, ds: Dataset
) -> sp.csr_matrix:
    """
    Derivatives of the predictions w.r.t. the individual parameters.

    Returns:
        CSR matrix of shape (n, k) with exactly ``m`` stored entries per row,
        one per terminal at the column active for that row.
    """
    _check_binding(expr, binding, ds)
    return _jacobian_and_prediction(expr, binding, ds)[0]


def _jacobian_and_prediction(
    expr: Expression, binding: ParameterBinding, ds: Dataset
) -> tuple[sp.csr_matrix, np.ndarray]:
    layout = binding.layout
    n, m = ds.n_rows, layout.n_terminals
    columns = layout.active_columns(ds)
    active = {t: binding.values[columns[:, t]] for t in layout.kinds}
    value, grad = evaluate(expr, ds.features, active, m, with_derivatives=True)
    assert grad is not None
    jacobian = sp.csr_matrix(
        (grad.reshape(-1), columns.reshape(-1), np.arange(n + 1) * m),
        shape=(n, layout.size),
    )
    return jacobian, value


def mse(y: np.ndarray, y_hat: np.ndarray) -> float:
    """Mean squared error."""
    y, y_hat = np.asarray(y, dtype=float), np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.size == 0:
        raise ValueError("mse needs two equal-length, non-empty sequences")
    return float(np.mean((y - y_hat) ** 2))


def r_squared(y: np.ndarray, y_hat: np.ndarray) -> float | None:
    """
    Coefficient of determination.

    Returns:
        ``1 - SSE / SST``, or None when the target has zero variance.
    """
    y, y_hat = np.asarray(y, dtype=float), np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape or y.size == 0:
        raise ValueError("r_squared needs two equal-length, non-empty sequences")
    total = float(np.sum((y - y.mean()) ** 2))
    if total == 0.0:
        return None
    return 1.0 - float(np.sum((y - y_hat) ** 2)) / total


def random_binding(
    layout: ParameterLayout, rng: np.random.Generator, low: float = -1.0, high: float = 1.0
) -> ParameterBinding:
    """Every individual parameter uniform in ``[low, high]``."""
    return ParameterBinding(layout=layout, values=rng.uniform(low, high, size=layout.size))


def perturb(
    binding: ParameterBinding, scale: float, rng: np.random.Generator
) -> ParameterBinding:
    """
    Multiplicative Gaussian perturbation ``p + scale * p * r`` with ``r ~ N(0, 1)``.

    Zero-valued parameters stay zero.
    """
    if scale < 0:
        raise ValueError("perturbation scale must be non-negative")
    noise = np.asarray(rng.standard_normal(binding.layout.size), dtype=float)
    values = binding.values + scale * binding.values * noise
    return ParameterBinding(layout=binding.layout, values=values)


def align_binding(
    previous: ParameterBinding,
    expr: Expression,
    rng: np.random.Generator,
    low: float = -1.0,
    high: float = 1.0,
) -> ParameterBinding:
    """
    Warm-start values for ``expr`` taken from a parent's fitted binding.

    Terminals are matched by id (position in first-appearance order); a
    terminal whose id or kind has no counterpart gets fresh random values.
    """
    layout = ParameterLayout.of(expr, previous.layout.schema)
    values = rng.uniform(low, high, size=layout.size)
    for terminal_id, kind in layout.kinds.items():
        if previous.layout.kinds.get(terminal_id) == kind:
            values[layout.block(terminal_id)] = previous.terminal_values(terminal_id)
    return ParameterBinding(layout=layout, values=values)


def _sse(expr: Expression, layout: ParameterLayout, values: np.ndarray, ds: Dataset) -> float:
    binding = ParameterBinding(layout=layout, values=values)
    r = ds.target - predict(expr, binding, ds)
    total = float(np.dot(r, r))
    return total if np.isfinite(total) else np.inf


def _solve_damped(jtj: sp.spmatrix, gradient: np.ndarray, damping: float) -> np.ndarray:
    """
    Solve ``(J^T J + damping I) step = gradient`` with symmetric Jacobi scaling.

    A singular system gives a non-finite step, which the caller rejects.
    """
    k = jtj.shape[0]
    system = (jtj + damping * sp.identity(k, format="csr")).tocsc()
    scale = 1.0 / np.sqrt(system.diagonal())
    scaling = sp.diags(scale)
    scaled = (scaling @ system @ scaling).tocsc()
    if k == 1:
        return np.atleast_1d(gradient / system.diagonal())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MatrixRankWarning)
        solution = spsolve(scaled, scale * gradient)
    return scale * np.atleast_1d(solution)


def levenberg_marquardt(
    expr: Expression,
    ds: Dataset,
    init: ParameterBinding,
    options: FitOptions,
) -> FitResult:
    """
    Minimize the sum of squared residuals from one starting point.

    Additive damping starts at ``options.initial_damping``, is divided by 10
    after an accepted step and multiplied by 10 after a rejected one.

    Raises:
        FitError: If the residuals are not finite at the starting point.
    """
    layout = init.layout
    x = init.flatten()
    damping = options.initial_damping
    binding = ParameterBinding(layout=layout, values=x)
    jacobian, prediction = _jacobian_and_prediction(expr, binding, ds)
    r = ds.target - prediction
    sse = float(np.dot(r, r))
    if not np.isfinite(sse):
        raise FitError("residuals are not finite at the initial parameters")

    converged = layout.size == 0 or sse == 0.0
    iteration = 0
    while not converged and iteration < options.max_iterations:
        iteration += 1
        gradient = jacobian.T @ r
        if not np.all(np.isfinite(gradient)):
            break
        if np.max(np.abs(gradient)) <= options.gradient_tol:
            converged = True
            break

        step = _solve_damped(jacobian.T @ jacobian, gradient, damping)
        step_small = np.linalg.norm(step) <= options.step_tol * (
            np.linalg.norm(x) + options.step_tol
        )
        candidate = x + step
        candidate_sse = _sse(expr, layout, candidate, ds) if np.all(np.isfinite(step)) else np.inf

        if candidate_sse < sse:
            x, sse = candidate, candidate_sse
            damping = max(damping / 10.0, 1e-15)
            binding = ParameterBinding(layout=layout, values=x)
            jacobian, prediction = _jacobian_and_prediction(expr, binding, ds)
            r = ds.target - prediction
            if sse == 0.0 or step_small:
                converged = True
        else:
            damping *= 10.0
            if step_small:
                converged = True
            elif damping > MAX_DAMPING:
                break

    binding = ParameterBinding(layout=layout, values=x)
    return FitResult(
        binding=binding,
        sse=sse,
        r_squared=r_squared(ds.target, prediction) if ds.n_rows else None,
        n_iterations=iteration,
        converged=converged,
    )


def fit_parameters(
    expr: Expression,
    ds: Dataset,
    init: ParameterBinding | str = "random",
    options: FitOptions | None = None,
    rng: np.random.Generator | None = None,
) -> FitResult:
    """
    Identify the individual parameters of ``expr`` on ``ds``.

    Args:
        expr: Expression with dense terminal ids.
        ds: Non-empty dataset.
        init: Starting binding, or ``"random"`` for a uniform draw.
        options: Optimizer options; defaults apply when omitted.
        rng: Random stream for random starts and restarts.

    Returns:
        Best result over the first start and ``options.restarts`` random
        restarts. A run that exhausts its iterations is returned with
        ``converged=False``.

    Raises:
        FitError: If every start yields non-finite residuals.
    """
    if ds.n_rows == 0:
        raise FitError("cannot fit on an empty dataset")
    options = options or FitOptions()
    rng = rng if rng is not None else np.random.default_rng()
    layout = ParameterLayout.of(expr, ds.schema)

    starts: list[ParameterBinding] = []
    if isinstance(init, ParameterBinding):
        _check_binding(expr, init, ds)
        starts.append(init)
    elif init != "random":
        raise ValueError(f"unknown init {init!r}")

    best: FitResult | None = None
    attempts = 1 + options.restarts
    for attempt in range(attempts):
        start = (
            starts[0]
            if attempt == 0 and starts
            else random_binding(layout, rng, options.init_low, options.init_high)
        )
        try:
            result = levenberg_marquardt(expr, ds, start, options)
        except FitError:
            logger.debug("Start %d of %d is not finite", attempt + 1, attempts)
            continue
        if best is None or result.sse < best.sse:
            best = result
        if best.sse == 0.0:
            break

    if best is None:
        raise FitError(f"all {attempts} starts produced non-finite residuals")
    return best
