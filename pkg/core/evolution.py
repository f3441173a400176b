"""
Evolutionary fitting of hydraulic configurations.

A (mu + lambda) evolution strategy with self-adaptive, per-dimension step
sizes searches the unit cube; ``ConfigSpace`` maps each point to a valid
``HydraulicConfig`` so every candidate satisfies the geometric invariants.
Populations are evaluated in one vectorized hydraulic batch.
"""

import logging
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.batch_processor import BatchProcessor
from core.errors import FitError, InvariantError
from core.hydraulic import batch_recovery_ratios, batch_tte
from core.wbal import DEFAULT_DT
from models.athlete import AthleteCapacity, RecoveryTrial
from models.enums import FitKind
from models.fit_result import FitResult
from models.hydraulic_config import PARAMETER_NAMES, HydraulicConfig
from utils.datasets import builtin_dataset

logger = logging.getLogger(__name__)

TTE_GRID = (100.0, 240.0, 480.0, 720.0)
FIT_T_MAX = 1440.0
MISSED_PENALTY = 100.0
MAX_HEIGHT = 0.98


class ConfigSpace:
    """Maps points of the unit cube to hydraulic configurations.

    Capacities scale with W' and flows with CP. ``phi`` (top to AnS top) is
    drawn first and ``theta`` (AnS bottom) as a fraction of the room left
    below it; with ``pipe_below_ans`` the Ae pipe exit is drawn as a
    fraction of ``theta``, otherwise anywhere up to ``MAX_HEIGHT``.
    """

    # (low, high) multipliers of W' for capacities and of CP for flows
    CAPACITY_BOUNDS = ((0.5, 1.5), (0.5, 6.0))
    FLOW_BOUNDS = ((0.8, 1.1), (0.01, 1.0), (0.005, 0.5))

    def __init__(self, athlete: AthleteCapacity, pipe_below_ans: bool = False):
        self.athlete = athlete
        self.pipe_below_ans = pipe_below_ans
        self.dimension = len(PARAMETER_NAMES)

    def decode(self, points: np.ndarray) -> np.ndarray:
        u = np.clip(np.atleast_2d(points), 0.0, 1.0)
        params = np.empty_like(u)
        for i, (low, high) in enumerate(self.CAPACITY_BOUNDS):
            params[:, i] = self.athlete.w_prime * (low + u[:, i] * (high - low))
        for j, (low, high) in enumerate(self.FLOW_BOUNDS):
            params[:, 2 + j] = self.athlete.cp * (low + u[:, 2 + j] * (high - low))
        phi = u[:, 5] * MAX_HEIGHT
        params[:, 5] = phi
        params[:, 6] = u[:, 6] * (MAX_HEIGHT - phi)
        theta = params[:, 6]
        params[:, 7] = u[:, 7] * (theta if self.pipe_below_ans else MAX_HEIGHT)
        return params

    def encode(self, config: HydraulicConfig) -> np.ndarray:
        """Inverse of ``decode``; values outside the search box are clipped."""
        values = config.as_array()
        u = np.empty(self.dimension)
        for i, (low, high) in enumerate(self.CAPACITY_BOUNDS):
            u[i] = (values[i] / self.athlete.w_prime - low) / (high - low)
        for j, (low, high) in enumerate(self.FLOW_BOUNDS):
            u[2 + j] = (values[2 + j] / self.athlete.cp - low) / (high - low)
        phi, theta, gamma = values[5:]
        u[5] = phi / MAX_HEIGHT
        u[6] = theta / max(MAX_HEIGHT - phi, 1e-12)
        u[7] = gamma / max(theta if self.pipe_below_ans else MAX_HEIGHT, 1e-12)
        return np.clip(u, 0.0, 1.0)


def relative_targets(athlete: AthleteCapacity, trials: Sequence[RecoveryTrial],
                     source: AthleteCapacity) -> List[RecoveryTrial]:
    """Transfer recovery targets measured on ``source`` to ``athlete``.

    Work bouts keep their CP-model time to exhaustion and recovery bouts keep
    their fraction of CP, so the same targets apply to every athlete.
    """
    if athlete == source:
        return list(trials)
    targets = []
    for trial in trials:
        tte = source.w_prime / (trial.p_work - source.cp)
        targets.append(RecoveryTrial(
            p_work=athlete.power_for_tte(tte),
            p_rec=trial.p_rec / source.cp * athlete.cp,
            t_rec=trial.t_rec,
            observed_ratio=trial.observed_ratio,
        ))
    return targets


class HydraulicObjective:
    """Percent TTE error on the CP-model grid plus recovery-ratio error.

    Both parts are root mean squares on a percent scale and carry equal
    weight. Grid points or protocols that never exhaust count as a
    ``MISSED_PENALTY`` percent miss.
    """

    def __init__(self, athlete: AthleteCapacity, targets: Sequence[RecoveryTrial],
                 tte_grid: Sequence[float] = TTE_GRID, dt: float = DEFAULT_DT, t_max: float = FIT_T_MAX):
        self.athlete = athlete
        self.targets = list(targets)
        self.tte_grid = np.asarray(tte_grid, dtype=float)
        self.powers = np.array([athlete.power_for_tte(t) for t in self.tte_grid])
        self.dt = dt
        self.t_max = t_max

    def components(self, params: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-config (TTE error %, ratio error pp, number of missed grid points)."""
        params = np.atleast_2d(params)
        n, k = len(params), len(self.tte_grid)

        tte = batch_tte(np.repeat(params, k, axis=0), np.tile(self.powers, n), self.dt, self.t_max)
        tte = tte.reshape(n, k)
        missed = np.isnan(tte)
        tte_err = np.where(missed, MISSED_PENALTY, np.abs(tte - self.tte_grid) / self.tte_grid * 100.0)
        tte_rms = np.sqrt(np.mean(tte_err ** 2, axis=1))

        if not self.targets:
            return tte_rms, np.zeros(n), missed.sum(axis=1)
        m = len(self.targets)
        ratios, _, _ = batch_recovery_ratios(
            np.repeat(params, m, axis=0),
            np.tile([t.p_work for t in self.targets], n),
            np.tile([t.p_rec for t in self.targets], n),
            np.tile([t.t_rec for t in self.targets], n),
            self.dt, self.t_max,
        )
        observed = np.tile([t.observed_ratio for t in self.targets], n)
        ratio_err = np.where(np.isnan(ratios), MISSED_PENALTY, ratios - observed).reshape(n, m)
        ratio_rms = np.sqrt(np.mean(ratio_err ** 2, axis=1))
        return tte_rms, ratio_rms, missed.sum(axis=1)

    def __call__(self, params: np.ndarray) -> np.ndarray:
        tte_rms, ratio_rms, _ = self.components(params)
        return tte_rms + ratio_rms


@dataclass
class EvolutionRun:
    """Outcome of one evolution strategy run."""
    index: int
    best: np.ndarray
    objective: float
    evaluations: int
    generations: int


class EvolutionStrategy:
    """(mu + lambda) evolution strategy with diagonal self-adaptive mutation."""

    def __init__(self, space: ConfigSpace, objective: HydraulicObjective, population: int = 32,
                 parent_number: Optional[int] = None, budget: int = 10000, initial_sigma: float = 0.1,
                 sigma_bounds: Tuple[float, float] = (1e-4, 0.5), min_spread: float = 1e-9,
                 start: Optional[np.ndarray] = None):
        if population < 2:
            raise InvariantError("population >= 2", f"population={population}")
        self.space = space
        self.objective = objective
        self.offspring_number = population
        self.parent_number = parent_number or max(2, population // 4)
        self.budget = budget
        self.initial_sigma = initial_sigma
        self.sigma_bounds = sigma_bounds
        self.min_spread = min_spread
        # optional point placed in the first population
        self.start = None if start is None else np.clip(np.asarray(start, dtype=float), 0.0, 1.0)
        n = space.dimension
        self.mutation_tau = 1 / np.sqrt(2 * np.sqrt(n))
        self.mutation_tau_dash = 1 / np.sqrt(2 * n)

    def _evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.objective(self.space.decode(points))

    @staticmethod
    def _reflect(points: np.ndarray) -> np.ndarray:
        points = np.abs(points)
        points = np.where(points > 1.0, 2.0 - points, points)
        return np.clip(points, 0.0, 1.0)

    def run(self, seed, index: int = 0) -> EvolutionRun:
        rng = np.random.default_rng(seed)
        n = self.space.dimension
        lam, mu = self.offspring_number, self.parent_number

        offspring = rng.uniform(size=(lam, n))
        if self.start is not None:
            offspring[0] = self.start
        scores = self._evaluate(offspring)
        evaluations = lam
        order = np.argsort(scores, kind="stable")[:mu]
        parents, parent_scores = offspring[order], scores[order]
        parent_sigma = np.full((mu, n), self.initial_sigma)
        generations = 0

        while evaluations + lam <= self.budget:
            generations += 1
            pairs = rng.integers(mu, size=(lam, 2))
            mask = rng.random((lam, n)) < 0.5
            children = np.where(mask, parents[pairs[:, 0]], parents[pairs[:, 1]])
            sigma = 0.5 * (parent_sigma[pairs[:, 0]] + parent_sigma[pairs[:, 1]])
            sigma = sigma * np.exp(self.mutation_tau_dash * rng.standard_normal((lam, 1))
                                   + self.mutation_tau * rng.standard_normal((lam, n)))
            sigma = np.clip(sigma, *self.sigma_bounds)
            children = self._reflect(children + sigma * rng.standard_normal((lam, n)))
            child_scores = self._evaluate(children)
            evaluations += lam

            pool = np.vstack([parents, children])
            pool_sigma = np.vstack([parent_sigma, sigma])
            pool_scores = np.concatenate([parent_scores, child_scores])
            order = np.argsort(pool_scores, kind="stable")[:mu]
            parents, parent_sigma, parent_scores = pool[order], pool_sigma[order], pool_scores[order]

            if parent_scores[-1] - parent_scores[0] < self.min_spread:
                logger.debug(f"Run {index}: converged after {generations} generations")
                break

        logger.info(f"Run {index}: objective {parent_scores[0]:.3f} after {evaluations} evaluations")
        return EvolutionRun(index, self.space.decode(parents[0])[0], float(parent_scores[0]),
                            evaluations, generations)


def _run_strategy(task) -> EvolutionRun:
    strategy, seed, index = task
    return strategy.run(seed, index)


def fit_hydraulic(athlete: AthleteCapacity, recovery_targets: Optional[Sequence[RecoveryTrial]] = None,
                  runs: int = 10, seed: int = 0, budget: int = 10000, population: int = 32,
                  dt: float = DEFAULT_DT, t_max: float = FIT_T_MAX, tte_grid: Sequence[float] = TTE_GRID,
                  pipe_below_ans: bool = False, workers: Optional[int] = None,
                  initial: Optional[HydraulicConfig] = None) -> FitResult:
    """Fit a hydraulic configuration to an athlete's CP and W'.

    Args:
        athlete: target CP and W'
        recovery_targets: recovery trials to match; defaults to the weigend
            trials transferred to ``athlete`` by relative intensity
        runs: independent evolution strategy runs, each with its own RNG
            stream spawned from ``seed``
        budget: objective evaluations per run
        initial: configuration placed in the first population of every run

    Returns:
        FitResult whose ``parameters["config"]`` is the best configuration
        in ``[an_f, an_s, m_ae, m_ans, m_anf, phi, theta, gamma]`` order.
        Ties are broken by the lowest run index.
    """
    if runs < 1:
        raise InvariantError("runs >= 1", f"runs={runs}")
    if recovery_targets is None:
        weigend = builtin_dataset("weigend")
        recovery_targets = relative_targets(athlete, weigend.trials, weigend.athlete)

    started = time.perf_counter()
    objective = HydraulicObjective(athlete, recovery_targets, tte_grid, dt, t_max)
    space = ConfigSpace(athlete, pipe_below_ans)
    start = None if initial is None else space.encode(initial)
    strategy = EvolutionStrategy(space, objective, population=population, budget=budget, start=start)
    seeds = np.random.SeedSequence(seed).spawn(runs)
    processor = BatchProcessor(max_workers=workers, use_processes=True)
    results = processor.map(_run_strategy, [(strategy, s, i) for i, s in enumerate(seeds)])

    best = min(results, key=lambda r: (r.objective, r.index))
    tte_rms, ratio_rms, missed = objective.components(best.best)
    if missed[0] > 0:
        raise FitError("No run found a configuration that exhausts at every target intensity",
                       best=best.best.tolist(), diagnostics={"missed": int(missed[0])})

    config = HydraulicConfig.from_list(best.best)
    logger.info(f"Best hydraulic fit from run {best.index}: {config.to_list()}")
    return FitResult(
        kind=FitKind.HYDRAULIC,
        parameters={"config": config.to_list(), **dict(zip(PARAMETER_NAMES, config.to_list()))},
        objective=best.objective,
        iterations=sum(r.generations for r in results),
        evaluations=sum(r.evaluations for r in results),
        seed=seed,
        wall_time=time.perf_counter() - started,
        extras={
            "best_run": best.index,
            "tte_rms_pct": float(tte_rms[0]),
            "ratio_rms_pp": float(ratio_rms[0]),
            "runs": [{"run": r.index, "objective": r.objective, "evaluations": r.evaluations}
                     for r in results],
        },
    )
