"""
Recovery time-constant fitting.

Three procedures share this module:

* ``fit_constant_tau`` fits one constant tau per observed recovery ratio
  (BFGS, started at 200 s) on a W'bal simulation stepped at ``dt``.
* ``fit_exponential_tau`` regresses ``tau = a * exp(b * d_cp) + c`` on the
  resulting (d_cp, tau) pairs.
* ``fit_chidnok_tau`` fits a constant tau to an intermittent-protocol
  time to exhaustion with a bounded scalar search.

The evolutionary hydraulic fit lives in ``core.evolution``.
"""

import logging
import time
import warnings
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit, minimize, minimize_scalar

from core.errors import FitError, InvariantError, SustainableIntensityError
from core.hydraulic import DEFAULT_T_MAX
from core.protocol import intermittent_tte, recovery_ratio
from core.wbal import DEFAULT_DT, TauFunction, WbalModel
from models.athlete import AthleteCapacity, RecoveryTrial
from models.enums import FitKind
from models.fit_result import FitResult

logger = logging.getLogger(__name__)

TAU_INITIAL_GUESS = 200.0
TAU_CAP = 1e6
TAU_FLOOR = 1e-6
RATIO_TOLERANCE = 0.05
EXP_INITIAL_GUESS = (546.0, -0.01, 316.0)
CHIDNOK_BOUNDS = (100.0, 1000.0)


def _constant_tau_ratio(athlete: AthleteCapacity, trial: RecoveryTrial, tau: float, dt: float) -> float:
    model = WbalModel(athlete, TauFunction.constant(max(abs(tau), TAU_FLOOR)), stepped=True)
    return recovery_ratio(model, trial.p_work, trial.p_rec, trial.t_rec, dt)


def fit_constant_tau(athlete: AthleteCapacity, trial: RecoveryTrial, dt: float = DEFAULT_DT,
                     initial_guess: float = TAU_INITIAL_GUESS, tau_cap: float = TAU_CAP) -> FitResult:
    """Fit the constant tau that reproduces one observed recovery ratio.

    Args:
        athlete: CP and W' of the study group
        trial: the observed condition, ``p_rec`` must lie below CP
        dt: simulation step
        initial_guess: BFGS starting point in seconds
        tau_cap: upper limit reported for unrecoverable observations

    Returns:
        FitResult with ``parameters["tau"]`` and ``parameters["d_cp"]``;
        ``flags["saturated"]`` is set when the cap was applied.
    """
    trial.check_athlete(athlete)
    if trial.p_rec >= athlete.cp:
        raise InvariantError("p_rec < cp", f"p_rec={trial.p_rec}, cp={athlete.cp}")
    if trial.t_rec <= 0:
        raise InvariantError("t_rec > 0", f"t_rec={trial.t_rec}")

    started = time.perf_counter()
    d_cp = trial.d_cp(athlete)
    observed = trial.observed_ratio

    if observed <= 0:
        # no finite minimizer
        capped_error = _constant_tau_ratio(athlete, trial, tau_cap, dt) ** 2
        logger.warning(f"Observed ratio 0 at d_cp={d_cp:.1f}, tau capped at {tau_cap:g}")
        return FitResult(
            kind=FitKind.TAU_CONSTANT,
            parameters={"tau": tau_cap, "d_cp": d_cp},
            objective=capped_error,
            wall_time=time.perf_counter() - started,
            flags={"saturated": True},
        )

    evaluations = 0

    def objective(x):
        nonlocal evaluations
        evaluations += 1
        return (_constant_tau_ratio(athlete, trial, float(x[0]), dt) - observed) ** 2

    result = minimize(objective, x0=np.array([initial_guess]), method="BFGS")
    tau = abs(float(result.x[0]))
    saturated = tau > tau_cap
    if saturated:
        tau = tau_cap
    residual = _constant_tau_ratio(athlete, trial, tau, dt) - observed

    if not saturated and abs(residual) > RATIO_TOLERANCE:
        raise FitError(
            f"Constant tau fit did not converge: {result.message}",
            best=tau,
            diagnostics={"residual": residual, "iterations": int(result.nit)},
        )

    return FitResult(
        kind=FitKind.TAU_CONSTANT,
        parameters={"tau": tau, "d_cp": d_cp},
        objective=residual ** 2,
        iterations=int(result.nit),
        evaluations=evaluations,
        wall_time=time.perf_counter() - started,
        flags={"saturated": saturated},
    )


def fit_trial_pairs(athlete: AthleteCapacity, trials: Sequence[RecoveryTrial],
                    dt: float = DEFAULT_DT) -> List[Tuple[float, float]]:
    """Constant-tau fits for every trial, returned as (d_cp, tau) pairs."""
    pairs = []
    for trial in trials:
        fit = fit_constant_tau(athlete, trial, dt)
        pairs.append((fit.parameters["d_cp"], fit.parameters["tau"]))
        logger.debug(f"d_cp={pairs[-1][0]:.1f} tau={pairs[-1][1]:.2f}")
    return pairs


def _exponential(d_cp, a, b, c):
    return a * np.exp(b * d_cp) + c


def fit_exponential_tau(pairs: Sequence[Tuple[float, float]],
                        initial_guess: Sequence[float] = EXP_INITIAL_GUESS,
                        weights: Optional[Sequence[float]] = None) -> FitResult:
    """Nonlinear least squares fit of ``tau = a * exp(b * d_cp) + c``.

    ``weights`` multiply the squared residuals, so a pair with weight 2
    counts like the same pair listed twice.

    A design with fewer than three distinct d_cp values cannot pin down all
    three parameters; the fit still runs from the initial guess and is
    reported with ``flags["rank_deficient"]``. Every optimum then passes
    through the mean tau at each d_cp, listed in ``extras["group_means"]``.
    """
    if len(pairs) < 3:
        raise InvariantError("at least 3 (d_cp, tau) pairs", f"got {len(pairs)}")
    d_cp = np.array([p[0] for p in pairs], dtype=float)
    tau = np.array([p[1] for p in pairs], dtype=float)
    if not (np.all(np.isfinite(d_cp)) and np.all(np.isfinite(tau))):
        raise InvariantError("pairs are finite")
    w = np.ones_like(tau) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != tau.shape or not np.all(w > 0):
        raise InvariantError("one positive weight per pair", f"weights={w.tolist()}")

    started = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", OptimizeWarning)
        try:
            params, pcov, info, message, _ = curve_fit(
                _exponential, d_cp, tau, p0=tuple(initial_guess), sigma=1.0 / np.sqrt(w),
                maxfev=20000, full_output=True)
        except RuntimeError as e:
            raise FitError(f"Exponential tau fit failed: {e}", best=tuple(initial_guess)) from e

    if not np.all(np.isfinite(params)):
        raise FitError("Exponential tau fit produced non-finite parameters", best=tuple(params))

    residuals = tau - _exponential(d_cp, *params)
    ss_res = float(np.sum(w * residuals ** 2))
    ss_tot = float(np.sum(w * (tau - np.average(tau, weights=w)) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else float(ss_res == 0)
    levels = np.unique(d_cp)
    rank_deficient = len(levels) < 3 or not np.all(np.isfinite(pcov))
    if rank_deficient:
        logger.warning(f"Exponential tau fit is rank deficient ({len(levels)} distinct d_cp values)")

    a, b, c = (float(v) for v in params)
    logger.info(f"tau = {a:.2f} * exp({b:.4f} * d_cp) + {c:.2f}, R^2 = {r_squared:.3f}")
    return FitResult(
        kind=FitKind.TAU_EXP,
        parameters={"a": a, "b": b, "c": c},
        objective=ss_res,
        evaluations=int(info.get("nfev", 0)),
        wall_time=time.perf_counter() - started,
        flags={"rank_deficient": rank_deficient},
        extras={
            "r_squared": r_squared,
            "pairs": [list(p) for p in pairs],
            "group_means": [[float(x), float(np.average(tau[d_cp == x], weights=w[d_cp == x]))] for x in levels],
            "message": message,
        },
    )


def fit_chidnok_tau(athlete: AthleteCapacity, p_work: float, p_rec: float, observed_tte: float,
                    dt: float = DEFAULT_DT, work_dur: float = 60.0, rec_dur: float = 30.0,
                    bounds: Tuple[float, float] = CHIDNOK_BOUNDS, t_max: float = DEFAULT_T_MAX) -> FitResult:
    """Fit a constant tau to the time to exhaustion of an intermittent protocol.

    Minimizes ``|intermittent_tte(tau) - observed_tte|`` on ``bounds``.
    A minimizer on a bracket edge is flagged ``at_bound``.
    """
    if observed_tte <= 0:
        raise InvariantError("observed_tte > 0", f"observed_tte={observed_tte}")
    if p_rec >= athlete.cp:
        # no recovery above CP
        raise InvariantError("p_rec < cp", f"p_rec={p_rec}, cp={athlete.cp}")
    if p_work <= athlete.cp:
        raise InvariantError("p_work > cp", f"p_work={p_work}, cp={athlete.cp}")

    started = time.perf_counter()
    lower, upper = bounds

    def objective(tau):
        model = WbalModel(athlete, TauFunction.constant(float(tau)), stepped=True)
        try:
            tte = intermittent_tte(model, p_work, p_rec, work_dur, rec_dur, dt, t_max)
        except SustainableIntensityError:
            tte = t_max
        return abs(tte - observed_tte)

    result = minimize_scalar(objective, bounds=(lower, upper), method="bounded", options={"xatol": 1e-3})
    tau = float(result.x)
    at_bound = (tau - lower) < 1e-2 or (upper - tau) < 1e-2
    if at_bound:
        logger.warning(f"Chidnok tau fit ended on the bracket edge: tau={tau:.2f}")

    model = WbalModel(athlete, TauFunction.constant(tau), stepped=True)
    try:
        predicted = intermittent_tte(model, p_work, p_rec, work_dur, rec_dur, dt, t_max)
    except SustainableIntensityError:
        predicted = t_max

    return FitResult(
        kind=FitKind.TAU_CHIDNOK,
        parameters={"tau": tau, "p_work": p_work, "p_rec": p_rec},
        objective=float(result.fun),
        iterations=int(getattr(result, "nit", 0)),
        evaluations=int(result.nfev),
        wall_time=time.perf_counter() - started,
        flags={"at_bound": at_bound},
        extras={"observed_tte": observed_tte, "predicted_tte": predicted},
    )
